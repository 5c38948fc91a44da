//! Dynamic-feature extraction: a log-spaced grid sweep of the objective
//! followed by simplex refinement in log space.

use serde::{Deserialize, Serialize};

use crate::dmp::{damping_ratio, BasisConfig, DynamicFeatures, PhaseGrid, DEFAULT_BASIS_COUNT, DEFAULT_CANONICAL_DECAY};
use crate::error::{Error, Result};
use crate::nelder_mead::{minimize, NelderMeadConfig};
use crate::objective::{evaluate_cell, evaluate_surface, ObjectiveSurface, DEFAULT_K_GAIN};
use crate::trajectory::KinematicTrajectory;

/// Hand-tuned `(name, D_M, K_M)` settings used as comparison baselines.
pub const HEURISTIC_FEATURES: [(&str, f64, f64); 4] = [
    ("Hrstc1", 25.0, 156.25),
    ("Hrstc2", 10.0, 200.0),
    ("Hrstc3", 100.0, 20.0),
    ("Hrstc4", 4.0, 4.0),
];

/// Log-spaced axis of the parametric grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub const fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.max >= self.min && self.max.is_finite() && self.count >= 1) {
            return Err(Error::InvalidConfig(format!(
                "grid [{}, {}] x {} must be positive, ordered and nonempty",
                self.min, self.max, self.count
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let (lo, hi) = (self.min.ln(), self.max.ln());
        (0..self.count)
            .map(|i| {
                if i == self.count - 1 {
                    self.max
                } else {
                    (lo + (hi - lo) * i as f64 / (self.count - 1) as f64).exp()
                }
            })
            .collect()
    }

    /// Spacing between neighbours in log space.
    pub fn log_step(&self) -> f64 {
        if self.count < 2 {
            0.1
        } else {
            (self.max / self.min).ln() / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub d_m_grid: GridSpec,
    pub k_m_grid: GridSpec,
    pub k_gain: f64,
    pub basis_count: usize,
    pub canonical_decay: f64,
    /// Simplex refinement after the sweep; `false` returns the grid argmin.
    pub refine: bool,
    pub refine_max_iterations: usize,
    pub refine_tol: f64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            d_m_grid: GridSpec::new(0.1, 120.0, 60),
            k_m_grid: GridSpec::new(0.1, 250.0, 60),
            k_gain: DEFAULT_K_GAIN,
            basis_count: DEFAULT_BASIS_COUNT,
            canonical_decay: DEFAULT_CANONICAL_DECAY,
            refine: true,
            refine_max_iterations: 200,
            refine_tol: 1e-3,
        }
    }
}

impl ExtractionConfig {
    pub fn basis(&self) -> Result<BasisConfig> {
        BasisConfig::new(self.basis_count, self.canonical_decay)
    }
}

#[derive(Debug, Clone)]
pub struct Extraction {
    /// Unit inertia with the extracted ratios.
    pub features: DynamicFeatures,
    pub zeta: f64,
    pub objective: f64,
    pub surface: ObjectiveSurface,
    pub refine_iterations: usize,
}

pub fn extract_features(demos: &[KinematicTrajectory], config: &ExtractionConfig) -> Result<Extraction> {
    config.d_m_grid.validate()?;
    config.k_m_grid.validate()?;
    let basis = config.basis()?;
    let surface = evaluate_surface(
        demos,
        &config.d_m_grid.values(),
        &config.k_m_grid.values(),
        config.k_gain,
        &basis,
    )?;
    let (d0, k0) = surface.argmin_point().ok_or(Error::NoFiniteCell)?;
    let j0 = surface.argmin_value().expect("argmin has a value");

    let (mut d_m, mut k_m, mut objective, mut refine_iterations) = (d0, k0, j0, 0);
    if config.refine {
        let grid = PhaseGrid::new(&basis, demos[0].steps())?;
        let k_gain = config.k_gain;
        let (d_lo, d_hi) = (config.d_m_grid.min.ln(), config.d_m_grid.max.ln());
        let (k_lo, k_hi) = (config.k_m_grid.min.ln(), config.k_m_grid.max.ln());
        // The refinement stays inside the swept box.
        let cost = |p: &[f64]| -> f64 {
            if !(d_lo..=d_hi).contains(&p[0]) || !(k_lo..=k_hi).contains(&p[1]) {
                return f64::INFINITY;
            }
            match evaluate_cell(&grid, demos, p[0].exp(), p[1].exp()) {
                Ok(terms) => terms.objective(k_gain),
                Err(_) => f64::INFINITY,
            }
        };
        let nm = NelderMeadConfig {
            max_iterations: config.refine_max_iterations,
            diameter_tol: config.refine_tol,
        };
        let steps = [config.d_m_grid.log_step(), config.k_m_grid.log_step()];
        let min = minimize(cost, &[d0.ln(), k0.ln()], &steps, &nm);
        refine_iterations = min.iterations;
        if min.value < j0 {
            d_m = min.point[0].exp();
            k_m = min.point[1].exp();
            objective = min.value;
        }
    }
    let features = DynamicFeatures::ratios(d_m, k_m)?;
    Ok(Extraction {
        features,
        zeta: damping_ratio(&features)?,
        objective,
        surface,
        refine_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints() {
        let g = GridSpec::new(0.1, 120.0, 60);
        let v = g.values();
        assert_eq!(v.len(), 60);
        assert!((v[0] - 0.1).abs() < 1e-15);
        assert_eq!(v[59], 120.0);
        let ratio = v[1] / v[0];
        for w in v.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-9);
        }
        assert_eq!(GridSpec::new(3.0, 3.0, 1).values(), vec![3.0]);
        assert!(GridSpec::new(0.0, 1.0, 3).validate().is_err());
    }
}
