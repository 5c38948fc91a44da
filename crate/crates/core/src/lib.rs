//! Dynamic movement primitives learned from demonstrations, with automatic
//! extraction of the attractor's damping and stiffness ratios.
//!
//! The pipeline: [`io`] loads recordings, [`trajectory`] smooths and
//! normalizes them, [`objective`] scores candidate ratios and [`extract`]
//! searches for the best pair. [`dmp`] fits and regenerates trajectories at
//! those ratios and [`rl`] runs the same attractor under a searched policy.

pub mod cli;
pub mod dmp;
pub mod error;
pub mod export;
pub mod extract;
pub mod forcing;
pub mod io;
pub mod nelder_mead;
pub mod objective;
pub mod rl;
pub mod savgol;
pub mod synth;
pub mod trajectory;
pub mod vec3;

pub use dmp::{damping_ratio, BasisConfig, DmpModel, DynamicFeatures, Weights};
pub use error::{Error, Result};
pub use extract::{extract_features, Extraction, ExtractionConfig, GridSpec};
pub use objective::{evaluate_metrics, evaluate_surface, Metrics, ObjectiveSurface};
pub use trajectory::{KinematicTrajectory, TimedTrajectory};
pub use vec3::Vec3;
