//! Synthetic point-to-point demonstrations with known dynamic features.
//!
//! A nominal weight profile is encoded as a primitive at the ground-truth
//! ratios. Each demo perturbs the nominal weights and goal and is rolled out
//! with the same ratios, so the generating features are known exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dmp::{fit_model, rollout, BasisConfig, DmpModel, DynamicFeatures, Weights};
use crate::error::{Error, Result};
use crate::trajectory::{KinematicTrajectory, DEFAULT_UNIT_STEPS};
use crate::vec3::Vec3;

/// Shared nominal weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum WeightProfile {
    /// Every weight equals `weight_level`.
    #[default]
    Constant,
    /// Weights fitted to a minimum-jerk reach at the ground-truth ratios.
    MinimumJerk,
    /// All weights zero; demos are unforced step responses.
    Zero,
}

/// How `noise` perturbs the nominal weights of each demo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// One gain per demo and axis: `w · (1 + noise · N(0, 1))`.
    #[default]
    Gain,
    /// Independent per weight: `w + noise · rms(axis weights) · N(0, 1)`.
    PerBasis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub d_m: f64,
    pub k_m: f64,
    pub count: usize,
    /// Relative weight noise, applied according to `noise_model`.
    pub noise: f64,
    pub noise_model: NoiseModel,
    pub profile: WeightProfile,
    /// Weight value of the constant profile.
    pub weight_level: f64,
    /// Nominal displacement from start to goal, meters.
    pub reach: Vec3,
    /// Relative per-axis goal jitter, uniform in `±goal_jitter`.
    pub goal_jitter: f64,
    /// Position of the first sample, meters.
    pub start: Vec3,
    /// Physical duration written to the CSV files, seconds.
    pub duration: f64,
    pub steps: usize,
    pub basis_count: usize,
    pub canonical_decay: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            d_m: 10.73,
            k_m: 20.71,
            count: 10,
            noise: 0.01,
            noise_model: NoiseModel::Gain,
            profile: WeightProfile::Constant,
            weight_level: -20.0,
            reach: Vec3::new(0.4, 0.25, 0.2),
            goal_jitter: 0.0,
            start: Vec3::new(0.3, -0.2, 0.9),
            duration: 1.2,
            steps: DEFAULT_UNIT_STEPS,
            basis_count: crate::dmp::DEFAULT_BASIS_COUNT,
            canonical_decay: crate::dmp::DEFAULT_CANONICAL_DECAY,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(m.to_string()));
        if !(self.d_m.is_finite() && self.d_m > 0.0 && self.k_m.is_finite() && self.k_m > 0.0) {
            return bad("ground-truth ratios must be > 0");
        }
        if self.count == 0 {
            return bad("count must be >= 1");
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return bad("noise must be >= 0");
        }
        if !self.weight_level.is_finite() {
            return bad("weight_level must be finite");
        }
        if !(self.goal_jitter.is_finite() && (0.0..1.0).contains(&self.goal_jitter)) {
            return bad("goal_jitter must be in [0, 1)");
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return bad("duration must be > 0");
        }
        if self.steps < 20 {
            return bad("steps must be >= 20");
        }
        if !(self.reach.is_finite() && self.start.is_finite()) {
            return bad("reach and start must be finite");
        }
        Ok(())
    }

    pub fn features(&self) -> Result<DynamicFeatures> {
        DynamicFeatures::ratios(self.d_m, self.k_m)
    }

    pub fn basis(&self) -> Result<BasisConfig> {
        BasisConfig::new(self.basis_count, self.canonical_decay)
    }
}

/// One synthesized demonstration.
#[derive(Debug, Clone)]
pub struct SynthDemo {
    /// Unit-duration kinematics starting at the origin, as produced by the
    /// generating rollout.
    pub normalized: KinematicTrajectory,
    /// Generating model (start at the origin).
    pub model: DmpModel,
}

impl SynthDemo {
    /// Positions in the physical frame: shifted to `start`, time stretched
    /// to `duration` (sample spacing `duration / steps`).
    pub fn physical_positions(&self, start: Vec3) -> Vec<Vec3> {
        self.normalized.position().iter().map(|&p| p + start).collect()
    }
}

/// Minimum-jerk reach `0 → reach` over unit time on `steps + 1` samples.
pub fn minimum_jerk(reach: Vec3, steps: usize) -> KinematicTrajectory {
    let mut pos = Vec::with_capacity(steps + 1);
    let mut vel = Vec::with_capacity(steps + 1);
    let mut acc = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let (t2, t3) = (t * t, t * t * t);
        let s = 10.0 * t3 - 15.0 * t3 * t + 6.0 * t3 * t2;
        let sd = 30.0 * t2 - 60.0 * t3 + 30.0 * t2 * t2;
        let sdd = 60.0 * t - 180.0 * t2 + 120.0 * t3;
        pos.push(reach * s);
        vel.push(reach * sd);
        acc.push(reach * sdd);
    }
    KinematicTrajectory::new(pos, vel, acc, 1.0 / steps as f64).expect("minimum-jerk grid is valid")
}

/// Shared weights of the nominal reach at the spec's ratios.
pub fn nominal_weights(spec: &SynthSpec) -> Result<Weights> {
    let basis = spec.basis()?;
    match spec.profile {
        WeightProfile::Zero => Ok(Weights::zeros(basis.count)),
        WeightProfile::Constant => {
            let axis = vec![spec.weight_level; basis.count];
            Ok(Weights::from_axes([axis.clone(), axis.clone(), axis]))
        }
        WeightProfile::MinimumJerk => {
            let nominal = minimum_jerk(spec.reach, spec.steps);
            let (model, _) = fit_model(&nominal, spec.features()?, &basis)?;
            Ok(model.weights)
        }
    }
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|w| w * w).sum::<f64>() / v.len() as f64).sqrt()
}

/// Generates `spec.count` demos, deterministic in `seed`.
pub fn synthesize(spec: &SynthSpec, seed: u64) -> Result<Vec<SynthDemo>> {
    spec.validate()?;
    let basis = spec.basis()?;
    let features = spec.features()?;
    let nominal = nominal_weights(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..spec.count)
        .map(|_| {
            let goal = Vec3::from_fn(|a| {
                let u: f64 = rng.random_range(-1.0..=1.0);
                spec.reach[a] * (1.0 + spec.goal_jitter * u)
            });
            let mut weights = nominal.clone();
            for a in 0..3 {
                match spec.noise_model {
                    NoiseModel::Gain => {
                        let e: f64 = rng.sample(StandardNormal);
                        let gain = 1.0 + spec.noise * e;
                        weights.axis_mut(a).iter_mut().for_each(|w| *w *= gain);
                    }
                    NoiseModel::PerBasis => {
                        let sd = spec.noise * rms(nominal.axis(a));
                        for w in weights.axis_mut(a).iter_mut() {
                            let e: f64 = rng.sample(StandardNormal);
                            *w += sd * e;
                        }
                    }
                }
            }
            let model = DmpModel::new(features, basis.clone(), weights, Vec3::ZERO, goal)?;
            let normalized = rollout(&model, &features, spec.steps, None)?;
            Ok(SynthDemo { normalized, model })
        })
        .collect()
}
