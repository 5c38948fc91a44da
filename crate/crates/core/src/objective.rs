//! Terms of the feature-extraction objective.
//!
//! * `d`: time integral of the distance between a demo and its regeneration
//!   at given ratios (human-likeness).
//! * `S`: time integral of the cross-demo spread of standardized forcing
//!   targets (topological similarity).
//! * `J = S + k·Σd` over a grid of ratios.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dmp::{fit_weights_on, rollout_on, BasisConfig, DmpModel, DynamicFeatures, PhaseGrid};
use crate::error::{Error, Result};
use crate::forcing::{standardize_forcing, target_forcing, ForcingSeries};
use crate::trajectory::KinematicTrajectory;
use crate::vec3::Vec3;

pub const DEFAULT_K_GAIN: f64 = 20.0;

/// Trapezoidal integral of uniformly spaced samples.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, .., last] => dt * (values.iter().sum::<f64>() - 0.5 * (first + last)),
    }
}

fn check_demos(demos: &[KinematicTrajectory]) -> Result<()> {
    if demos.len() < 2 {
        return Err(Error::InsufficientDemos(demos.len()));
    }
    if let Some(i) = demos.iter().position(|d| !d.same_grid(&demos[0])) {
        return Err(Error::GridMismatch(format!("demo {i} differs from demo 0")));
    }
    Ok(())
}

/// S from already standardized series sharing one grid.
///
/// Axes flagged constant in any demo are left out of the norm.
pub fn similarity_of(standardized: &[ForcingSeries], dt: f64) -> f64 {
    let n = standardized.len();
    let mut excluded = [false; 3];
    for s in standardized {
        for (a, c) in s.constant_axes().iter().enumerate() {
            excluded[a] |= c;
        }
    }
    let len = standardized[0].len();
    let denom = (n - 1) as f64;
    let per_step: Vec<f64> = (0..len)
        .map(|t| {
            let mut sq = 0.0;
            for a in (0..3).filter(|&a| !excluded[a]) {
                let mean = standardized.iter().map(|s| s.axis(a)[t]).sum::<f64>() / n as f64;
                let var = standardized
                    .iter()
                    .map(|s| {
                        let d = s.axis(a)[t] - mean;
                        d * d
                    })
                    .sum::<f64>()
                    / denom;
                sq += var;
            }
            sq.sqrt()
        })
        .collect();
    trapezoid(&per_step, dt)
}

/// Topological similarity of the demos' forcing targets at `(D_M, K_M)`.
pub fn similarity(demos: &[KinematicTrajectory], d_m: f64, k_m: f64) -> Result<f64> {
    check_demos(demos)?;
    let standardized: Vec<ForcingSeries> = demos
        .iter()
        .map(|d| standardize_forcing(&target_forcing(d, d_m, k_m)))
        .collect();
    Ok(similarity_of(&standardized, demos[0].dt()))
}

/// ∫‖a(t) − b(t)‖dt over two position series on the same grid.
pub fn accumulated_distance(a: &[Vec3], b: &[Vec3], dt: f64) -> f64 {
    let dist: Vec<f64> = a.iter().zip(b).map(|(p, q)| (*p - *q).norm()).collect();
    trapezoid(&dist, dt)
}

/// Fits at `(D_M, K_M)`, regenerates, and integrates the position error.
/// Divergent rollouts give +∞.
pub fn distance_error(demo: &KinematicTrajectory, d_m: f64, k_m: f64, basis: &BasisConfig) -> Result<f64> {
    let grid = PhaseGrid::new(basis, demo.steps())?;
    let features = DynamicFeatures::ratios(d_m, k_m)?;
    let f_target = target_forcing(demo, d_m, k_m);
    Ok(distance_from_target(&grid, demo, &features, &f_target))
}

fn distance_from_target(grid: &PhaseGrid, demo: &KinematicTrajectory, features: &DynamicFeatures, f_target: &ForcingSeries) -> f64 {
    let fit = fit_weights_on(grid, f_target, demo.start() - demo.goal());
    let model = DmpModel {
        features: *features,
        basis: grid.basis().clone(),
        weights: fit.weights,
        start: demo.start(),
        goal: demo.goal(),
    };
    match rollout_on(grid, &model, features, None) {
        Ok(regen) => accumulated_distance(regen.position(), demo.position(), demo.dt()),
        Err(_) => f64::INFINITY,
    }
}

/// Both objective terms at one point of the parametric space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellTerms {
    pub sum_d: f64,
    pub similarity: f64,
}

impl CellTerms {
    pub fn objective(&self, k_gain: f64) -> f64 {
        if k_gain == 0.0 {
            return self.similarity;
        }
        let j = self.similarity + k_gain * self.sum_d;
        if j.is_nan() {
            f64::INFINITY
        } else {
            j
        }
    }
}

/// Evaluates Σd and S at one `(D_M, K_M)`; the grid must match the demos.
pub fn evaluate_cell(grid: &PhaseGrid, demos: &[KinematicTrajectory], d_m: f64, k_m: f64) -> Result<CellTerms> {
    check_demos(demos)?;
    let features = DynamicFeatures::ratios(d_m, k_m)?;
    let mut sum_d = 0.0;
    let mut standardized = Vec::with_capacity(demos.len());
    for demo in demos {
        let f_target = target_forcing(demo, d_m, k_m);
        sum_d += distance_from_target(grid, demo, &features, &f_target);
        standardized.push(standardize_forcing(&f_target));
    }
    Ok(CellTerms {
        sum_d,
        similarity: similarity_of(&standardized, demos[0].dt()),
    })
}

/// Objective values over a `(D_M, K_M)` grid. Matrices are indexed
/// `[d_index][k_index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSurface {
    pub d_m_grid: Vec<f64>,
    pub k_m_grid: Vec<f64>,
    pub sum_d: Vec<Vec<f64>>,
    pub similarity: Vec<Vec<f64>>,
    pub objective: Vec<Vec<f64>>,
    pub k_gain: f64,
    /// Grid indices of the minimal finite objective, if any cell is finite.
    pub argmin: Option<(usize, usize)>,
}

impl ObjectiveSurface {
    /// Assembles a surface from precomputed terms. Ties in the objective go
    /// to the smaller K_M, then the smaller D_M.
    pub fn from_terms(
        d_m_grid: Vec<f64>,
        k_m_grid: Vec<f64>,
        sum_d: Vec<Vec<f64>>,
        similarity: Vec<Vec<f64>>,
        k_gain: f64,
    ) -> Self {
        let objective: Vec<Vec<f64>> = sum_d
            .iter()
            .zip(&similarity)
            .map(|(dr, sr)| {
                dr.iter()
                    .zip(sr)
                    .map(|(&d, &s)| CellTerms { sum_d: d, similarity: s }.objective(k_gain))
                    .collect()
            })
            .collect();
        let mut argmin: Option<(usize, usize)> = None;
        for (i, row) in objective.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    continue;
                }
                let better = match argmin {
                    None => true,
                    Some((bi, bj)) => {
                        let key = (v, k_m_grid[j], d_m_grid[i]);
                        let best = (objective[bi][bj], k_m_grid[bj], d_m_grid[bi]);
                        key.partial_cmp(&best) == Some(std::cmp::Ordering::Less)
                    }
                };
                if better {
                    argmin = Some((i, j));
                }
            }
        }
        Self {
            d_m_grid,
            k_m_grid,
            sum_d,
            similarity,
            objective,
            k_gain,
            argmin,
        }
    }

    /// `(D_M, K_M)` at the argmin cell.
    pub fn argmin_point(&self) -> Option<(f64, f64)> {
        self.argmin.map(|(i, j)| (self.d_m_grid[i], self.k_m_grid[j]))
    }

    pub fn argmin_value(&self) -> Option<f64> {
        self.argmin.map(|(i, j)| self.objective[i][j])
    }

    /// Same terms re-weighted with another gain.
    pub fn with_gain(&self, k_gain: f64) -> Self {
        Self::from_terms(
            self.d_m_grid.clone(),
            self.k_m_grid.clone(),
            self.sum_d.clone(),
            self.similarity.clone(),
            k_gain,
        )
    }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
        return Err(Error::InvalidConfig(format!("{name} grid must be nonempty with values > 0")));
    }
    Ok(())
}

/// Fills the objective surface. Cells are evaluated in parallel and are
/// independent, so the result does not depend on scheduling.
pub fn evaluate_surface(
    demos: &[KinematicTrajectory],
    d_m_grid: &[f64],
    k_m_grid: &[f64],
    k_gain: f64,
    basis: &BasisConfig,
) -> Result<ObjectiveSurface> {
    check_demos(demos)?;
    check_grid("D_M", d_m_grid)?;
    check_grid("K_M", k_m_grid)?;
    if !(k_gain.is_finite() && k_gain >= 0.0) {
        return Err(Error::InvalidConfig(format!("k_gain {k_gain} must be >= 0")));
    }
    let grid = PhaseGrid::new(basis, demos[0].steps())?;
    let cols = k_m_grid.len();
    let cells: Vec<CellTerms> = (0..d_m_grid.len() * cols)
        .into_par_iter()
        .map(|c| evaluate_cell(&grid, demos, d_m_grid[c / cols], k_m_grid[c % cols]))
        .collect::<Result<_>>()?;
    let rows = |f: fn(&CellTerms) -> f64| -> Vec<Vec<f64>> {
        cells.chunks(cols).map(|r| r.iter().map(f).collect()).collect()
    };
    Ok(ObjectiveSurface::from_terms(
        d_m_grid.to_vec(),
        k_m_grid.to_vec(),
        rows(|c| c.sum_d),
        rows(|c| c.similarity),
        k_gain,
    ))
}

/// Table-style comparison metrics of a regenerated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Accumulated distance error divided by duration, meters.
    pub d_mean: f64,
    /// Peak acceleration magnitude of the regeneration, m/s².
    pub a_peak: f64,
    /// Distance from the regeneration's final position to the demo goal, meters.
    pub goal_error: f64,
}

pub fn evaluate_metrics(regen: &KinematicTrajectory, demo: &KinematicTrajectory) -> Result<Metrics> {
    if !regen.same_grid(demo) {
        return Err(Error::GridMismatch(format!(
            "regeneration has {} samples at dt {}, demo {} at dt {}",
            regen.len(),
            regen.dt(),
            demo.len(),
            demo.dt()
        )));
    }
    let d = accumulated_distance(regen.position(), demo.position(), demo.dt());
    let a_peak = regen
        .acceleration()
        .iter()
        .map(|a| a.norm())
        .fold(0.0, f64::max);
    Ok(Metrics {
        d_mean: d / demo.duration(),
        a_peak,
        goal_error: (regen.goal() - demo.goal()).norm(),
    })
}
