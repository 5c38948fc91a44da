//! Error type shared by every stage of the pipeline.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path} at line {line}: {reason}")]
    MalformedFile {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("trajectory has {len} samples, at least {min} required")]
    TooShort { len: usize, min: usize },

    #[error("timestamps not strictly increasing at line {line}")]
    NonMonotonicTime { line: usize },

    #[error("window {window} exceeds trajectory length {len}")]
    WindowTooLarge { window: usize, len: usize },

    #[error("invalid Savitzky-Golay window {window} for polynomial order {order}")]
    InvalidWindow { window: usize, order: usize },

    #[error("damping ratio undefined for zero stiffness")]
    UndefinedForZeroStiffness,

    #[error("numerical blowup at step {step}: state magnitude exceeded {limit}")]
    NumericalBlowup { step: usize, limit: f64 },

    #[error("at least 2 demonstrations required, got {0}")]
    InsufficientDemos(usize),

    #[error("every cell of the objective surface is non-finite")]
    NoFiniteCell,

    #[error("trajectories are not on the same time grid: {0}")]
    GridMismatch(String),

    #[error("invalid dynamic features: {0}")]
    InvalidFeatures(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid synthesis spec: {0}")]
    InvalidSpec(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
