//! Discrete dynamic movement primitive: a spring-damper point attractor per
//! task-space axis, perturbed by a phase-gated forcing term built from
//! Gaussian basis functions.
//!
//! All rollouts run over unit time. The attractor acceleration is
//!
//! ```text
//! ÿ = −D_M·ẏ − K_M·(y − g) + f(x)/M
//! f(x) = Σψᵢ(x)wᵢ / Σψᵢ(x) · x · (y₀ − g)
//! ```
//!
//! integrated with semi-implicit Euler from rest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forcing::{target_forcing, ForcingSeries};
use crate::trajectory::KinematicTrajectory;
use crate::vec3::Vec3;

pub const DEFAULT_BASIS_COUNT: usize = 100;
pub const DEFAULT_CANONICAL_DECAY: f64 = 4.6;
/// State magnitude treated as divergence.
pub const BLOWUP_LIMIT: f64 = 1e6;
/// Spatial scales below this are treated as zero.
pub const DEGENERATE_SCALE_EPS: f64 = 1e-9;
/// Basis width as a fraction of the spacing to the next center.
const WIDTH_FACTOR: f64 = 0.65;
/// Activations below this are skipped during fitting and evaluation.
const ACTIVATION_CUTOFF: f64 = 1e-14;

/// Inertia and the damping/stiffness ratios of the attractor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicFeatures {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "D_M")]
    pub d_m: f64,
    #[serde(rename = "K_M")]
    pub k_m: f64,
}

impl DynamicFeatures {
    pub fn new(m: f64, d_m: f64, k_m: f64) -> Result<Self> {
        let features = Self { m, d_m, k_m };
        features.validate()?;
        Ok(features)
    }

    /// Ratios only, with unit inertia.
    pub fn ratios(d_m: f64, k_m: f64) -> Result<Self> {
        Self::new(1.0, d_m, k_m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::InvalidFeatures(format!("M = {} must be > 0", self.m)));
        }
        if !(self.d_m.is_finite() && self.d_m >= 0.0) {
            return Err(Error::InvalidFeatures(format!("D_M = {} must be >= 0", self.d_m)));
        }
        if !(self.k_m.is_finite() && self.k_m >= 0.0) {
            return Err(Error::InvalidFeatures(format!("K_M = {} must be >= 0", self.k_m)));
        }
        Ok(())
    }

    pub fn damping_ratio(&self) -> Result<f64> {
        damping_ratio(self)
    }
}

/// ζ = D/(2√(KM)), which in ratio form is D_M / (2√K_M).
pub fn damping_ratio(features: &DynamicFeatures) -> Result<f64> {
    if features.k_m <= 0.0 {
        return Err(Error::UndefinedForZeroStiffness);
    }
    Ok(features.d_m / (2.0 * features.k_m.sqrt()))
}

/// Phase variable x(t) = exp(−decay·t), falling from 1 at t = 0.
pub fn canonical_x(t: f64, decay: f64) -> f64 {
    (-decay * t).exp()
}

/// Gaussian basis layout in phase space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisConfig {
    pub count: usize,
    pub decay: f64,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
}

impl BasisConfig {
    /// Centers evenly spaced in time, `c_i = x(i/(count−1))`; each width is
    /// 0.65 of the gap to the next center, the last copying its neighbour.
    pub fn new(count: usize, decay: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidConfig(format!("basis count {count} must be >= 2")));
        }
        if !(decay.is_finite() && decay > 0.0) {
            return Err(Error::InvalidConfig(format!("canonical decay {decay} must be > 0")));
        }
        let centers: Vec<f64> = (0..count)
            .map(|i| canonical_x(i as f64 / (count - 1) as f64, decay))
            .collect();
        let mut widths: Vec<f64> = centers
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() * WIDTH_FACTOR)
            .collect();
        widths.push(widths[count - 2]);
        Ok(Self {
            count,
            decay,
            centers,
            widths,
        })
    }

    /// Explicit layout; centers must be strictly decreasing within (0, 1].
    pub fn from_parts(decay: f64, centers: Vec<f64>, widths: Vec<f64>) -> Result<Self> {
        let config = Self {
            count: centers.len(),
            decay,
            centers,
            widths,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.count < 2 || self.centers.len() != self.count || self.widths.len() != self.count {
            return bad(format!(
                "basis count {} with {} centers and {} widths",
                self.count,
                self.centers.len(),
                self.widths.len()
            ));
        }
        if !(self.decay.is_finite() && self.decay > 0.0) {
            return bad(format!("canonical decay {} must be > 0", self.decay));
        }
        if self.centers.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return bad("basis centers must lie in (0, 1]".into());
        }
        if self.centers.windows(2).any(|w| w[1] >= w[0]) {
            return bad("basis centers must be strictly decreasing".into());
        }
        if self.widths.iter().any(|&w| !(w.is_finite() && w > 0.0)) {
            return bad("basis widths must be > 0".into());
        }
        Ok(())
    }
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self::new(DEFAULT_BASIS_COUNT, DEFAULT_CANONICAL_DECAY).expect("default basis is valid")
    }
}

/// ψᵢ(x) = exp(−(x − cᵢ)² / (2σᵢ²)) for every basis function.
pub fn basis_activations(x: f64, basis: &BasisConfig) -> Vec<f64> {
    basis
        .centers
        .iter()
        .zip(&basis.widths)
        .map(|(c, s)| gaussian(x, *c, *s))
        .collect()
}

fn gaussian(x: f64, center: f64, width: f64) -> f64 {
    let d = x - center;
    (-d * d / (2.0 * width * width)).exp()
}

/// Basis activations precomputed on a unit-time grid of `steps + 1` points.
///
/// Every fit and rollout over the same grid shares one of these.
#[derive(Debug, Clone)]
pub struct PhaseGrid {
    basis: BasisConfig,
    steps: usize,
    phase: Vec<f64>,
    /// Row-major `(steps + 1) × count`.
    psi: Vec<f64>,
    /// ψ normalized by the row sum, same layout as `psi`.
    phi: Vec<f64>,
    /// Per grid point, the half-open range of bases above the cutoff.
    active_bases: Vec<(usize, usize)>,
    /// Per basis, the half-open range of grid points above the cutoff.
    support: Vec<(usize, usize)>,
}

impl PhaseGrid {
    pub fn new(basis: &BasisConfig, steps: usize) -> Result<Self> {
        basis.validate()?;
        if steps < 2 {
            return Err(Error::InvalidConfig(format!("steps {steps} must be >= 2")));
        }
        let count = basis.count;
        let phase: Vec<f64> = (0..=steps)
            .map(|k| canonical_x(k as f64 / steps as f64, basis.decay))
            .collect();
        let mut psi = Vec::with_capacity(phase.len() * count);
        let mut phi = Vec::with_capacity(phase.len() * count);
        let mut active_bases = Vec::with_capacity(phase.len());
        let mut support = vec![(usize::MAX, 0usize); count];
        for (k, &x) in phase.iter().enumerate() {
            let row = basis_activations(x, basis);
            let sum: f64 = row.iter().sum();
            let mut lo = count;
            let mut hi = 0;
            for (i, &p) in row.iter().enumerate() {
                if p >= ACTIVATION_CUTOFF {
                    lo = lo.min(i);
                    hi = i + 1;
                    support[i].0 = support[i].0.min(k);
                    support[i].1 = k + 1;
                }
            }
            active_bases.push((lo.min(hi), hi));
            phi.extend(row.iter().map(|p| p / sum));
            psi.extend(row);
        }
        for s in &mut support {
            if s.0 == usize::MAX {
                *s = (0, 0);
            }
        }
        Ok(Self {
            basis: basis.clone(),
            steps,
            phase,
            psi,
            phi,
            active_bases,
            support,
        })
    }

    pub fn basis(&self) -> &BasisConfig {
        &self.basis
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn phase(&self) -> &[f64] {
        &self.phase
    }

    fn psi(&self, k: usize, i: usize) -> f64 {
        self.psi[k * self.basis.count + i]
    }

    /// Normalized weighted basis sum Σψᵢwᵢ/Σψᵢ at grid point `k`.
    pub fn blend(&self, k: usize, weights: &[f64]) -> f64 {
        let (lo, hi) = self.active_bases[k];
        let row = &self.phi[k * self.basis.count..(k + 1) * self.basis.count];
        row[lo..hi]
            .iter()
            .zip(&weights[lo..hi])
            .map(|(p, w)| p * w)
            .sum()
    }

    /// Forcing term (in force units) at each grid point for the given
    /// weights and spatial scale `y₀ − g`.
    pub fn forcing(&self, weights: &Weights, scale: Vec3) -> Vec<Vec3> {
        (0..=self.steps)
            .map(|k| {
                let x = self.phase[k];
                Vec3::from_fn(|a| self.blend(k, weights.axis(a)) * x * scale[a])
            })
            .collect()
    }
}

/// Per-axis basis weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl Weights {
    pub fn zeros(count: usize) -> Self {
        Self {
            x: vec![0.0; count],
            y: vec![0.0; count],
            z: vec![0.0; count],
        }
    }

    pub fn from_axes(axes: [Vec<f64>; 3]) -> Self {
        let [x, y, z] = axes;
        Self { x, y, z }
    }

    pub fn axis(&self, axis: usize) -> &[f64] {
        match axis {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn axis_mut(&mut self, axis: usize) -> &mut Vec<f64> {
        match axis {
            0 => &mut self.x,
            1 => &mut self.y,
            2 => &mut self.z,
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn count(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        (0..3).all(|a| self.axis(a).iter().all(|w| w.is_finite()))
    }

    /// Flattened `[x..., y..., z...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.extend(&self.y);
        v.extend(&self.z);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Self {
        assert_eq!(flat.len() % 3, 0, "flat weight vector must split into three axes");
        let n = flat.len() / 3;
        Self {
            x: flat[..n].to_vec(),
            y: flat[n..2 * n].to_vec(),
            z: flat[2 * n..].to_vec(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let f = |v: &Vec<f64>| v.iter().map(|w| w * s).collect();
        Self {
            x: f(&self.x),
            y: f(&self.y),
            z: f(&self.z),
        }
    }
}

/// Result of locally weighted regression.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFit {
    pub weights: Weights,
    /// Axes whose spatial scale was below [`DEGENERATE_SCALE_EPS`]; their
    /// weights are zero.
    pub degenerate_scale: [bool; 3],
}

impl WeightFit {
    pub fn any_degenerate(&self) -> bool {
        self.degenerate_scale.iter().any(|&d| d)
    }
}

/// Locally weighted regression of the forcing target onto the basis, one
/// scalar weighted least-squares problem per basis function.
pub fn fit_weights(f_target: &ForcingSeries, basis: &BasisConfig, spatial_scale: Vec3) -> Result<WeightFit> {
    let grid = PhaseGrid::new(basis, f_target.steps())?;
    Ok(fit_weights_on(&grid, f_target, spatial_scale))
}

/// [`fit_weights`] on a precomputed grid; `f_target` must have
/// `grid.steps() + 1` samples per axis.
pub fn fit_weights_on(grid: &PhaseGrid, f_target: &ForcingSeries, spatial_scale: Vec3) -> WeightFit {
    assert_eq!(
        f_target.steps(),
        grid.steps(),
        "forcing series and phase grid differ in length"
    );
    let count = grid.basis.count;
    let mut weights = Weights::zeros(count);
    let mut degenerate_scale = [false; 3];
    for axis in 0..3 {
        let scale = spatial_scale[axis];
        if scale.abs() < DEGENERATE_SCALE_EPS {
            degenerate_scale[axis] = true;
            continue;
        }
        let target = f_target.axis(axis);
        let out = weights.axis_mut(axis);
        for (i, w) in out.iter_mut().enumerate() {
            let (lo, hi) = grid.support[i];
            let mut num = 0.0;
            let mut den = 0.0;
            for (k, &t) in target.iter().enumerate().take(hi).skip(lo) {
                let psi = grid.psi(k, i);
                let s = grid.phase[k] * scale;
                num += psi * s * t;
                den += psi * s * s;
            }
            *w = if den > 0.0 { num / den } else { 0.0 };
        }
    }
    WeightFit {
        weights,
        degenerate_scale,
    }
}

/// A learned primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpModel {
    pub features: DynamicFeatures,
    pub basis: BasisConfig,
    pub weights: Weights,
    pub start: Vec3,
    pub goal: Vec3,
}

impl DmpModel {
    pub fn new(
        features: DynamicFeatures,
        basis: BasisConfig,
        weights: Weights,
        start: Vec3,
        goal: Vec3,
    ) -> Result<Self> {
        let model = Self {
            features,
            basis,
            weights,
            start,
            goal,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        self.basis.validate()?;
        if (0..3).any(|a| self.weights.axis(a).len() != self.basis.count) {
            return Err(Error::InvalidConfig("weight count does not match basis count".into()));
        }
        if !self.weights.is_finite() {
            return Err(Error::InvalidConfig("weights must be finite".into()));
        }
        if !(self.start.is_finite() && self.goal.is_finite()) {
            return Err(Error::InvalidConfig("start and goal must be finite".into()));
        }
        Ok(())
    }

    /// Forcing term at phase `x` toward `goal`.
    pub fn forcing_at(&self, x: f64, goal: Vec3) -> Vec3 {
        let psi = basis_activations(x, &self.basis);
        let sum: f64 = psi.iter().sum();
        let scale = self.start - goal;
        Vec3::from_fn(|a| {
            let blend: f64 = psi.iter().zip(self.weights.axis(a)).map(|(p, w)| p * w).sum::<f64>() / sum;
            blend * x * scale[a]
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

/// Fits a model to a unit-time demo at the given features.
pub fn fit_model(demo: &KinematicTrajectory, features: DynamicFeatures, basis: &BasisConfig) -> Result<(DmpModel, WeightFit)> {
    let grid = PhaseGrid::new(basis, demo.steps())?;
    fit_model_on(&grid, demo, features)
}

/// [`fit_model`] on a precomputed grid matching the demo's sample count.
pub fn fit_model_on(grid: &PhaseGrid, demo: &KinematicTrajectory, features: DynamicFeatures) -> Result<(DmpModel, WeightFit)> {
    features.validate()?;
    if demo.steps() != grid.steps() {
        return Err(Error::GridMismatch(format!(
            "demo has {} steps, phase grid {}",
            demo.steps(),
            grid.steps()
        )));
    }
    let f_target = target_forcing(demo, features.d_m, features.k_m);
    let scale = demo.start() - demo.goal();
    let mut fit = fit_weights_on(grid, &f_target, scale);
    // The target is per unit inertia; stored weights produce the raw force.
    if features.m != 1.0 {
        fit.weights = fit.weights.scaled(features.m);
    }
    let model = DmpModel {
        features,
        basis: grid.basis.clone(),
        weights: fit.weights.clone(),
        start: demo.start(),
        goal: demo.goal(),
    };
    Ok((model, fit))
}

/// Attractor acceleration for a given raw force.
#[inline]
pub(crate) fn attractor_acceleration(y: Vec3, yd: Vec3, goal: Vec3, features: &DynamicFeatures, force: Vec3) -> Vec3 {
    Vec3::from_fn(|a| -features.d_m * yd[a] - features.k_m * (y[a] - goal[a]) + force[a] / features.m)
}

/// Semi-implicit Euler: velocity first, then position with the new velocity.
#[inline]
pub(crate) fn semi_implicit_step(y: Vec3, yd: Vec3, ydd: Vec3, dt: f64) -> (Vec3, Vec3) {
    let yd_next = yd + ydd * dt;
    (y + yd_next * dt, yd_next)
}

#[inline]
pub(crate) fn diverged(v: Vec3) -> bool {
    let m = v.max_abs();
    m.is_nan() || m > BLOWUP_LIMIT
}

/// Integrates the primitive over unit time in `steps` steps.
pub fn rollout(model: &DmpModel, features: &DynamicFeatures, steps: usize, goal_override: Option<Vec3>) -> Result<KinematicTrajectory> {
    let grid = PhaseGrid::new(&model.basis, steps)?;
    rollout_on(&grid, model, features, goal_override)
}

/// [`rollout`] on a precomputed grid built from the model's basis.
pub fn rollout_on(grid: &PhaseGrid, model: &DmpModel, features: &DynamicFeatures, goal_override: Option<Vec3>) -> Result<KinematicTrajectory> {
    features.validate()?;
    let goal = goal_override.unwrap_or(model.goal);
    let forcing = grid.forcing(&model.weights, model.start - goal);
    integrate(model.start, goal, features, &forcing, grid.dt())
}

/// Runs the attractor under a precomputed force sequence, one per grid point.
pub(crate) fn integrate(start: Vec3, goal: Vec3, features: &DynamicFeatures, forcing: &[Vec3], dt: f64) -> Result<KinematicTrajectory> {
    let n = forcing.len();
    let mut pos = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    let mut acc = Vec::with_capacity(n);
    let mut y = start;
    let mut yd = Vec3::ZERO;
    for (k, &force) in forcing.iter().enumerate() {
        let ydd = attractor_acceleration(y, yd, goal, features, force);
        if diverged(y) || diverged(yd) || diverged(ydd) {
            return Err(Error::NumericalBlowup {
                step: k,
                limit: BLOWUP_LIMIT,
            });
        }
        pos.push(y);
        vel.push(yd);
        acc.push(ydd);
        if k + 1 < n {
            (y, yd) = semi_implicit_step(y, yd, ydd, dt);
        }
    }
    KinematicTrajectory::new(pos, vel, acc, dt)
}
