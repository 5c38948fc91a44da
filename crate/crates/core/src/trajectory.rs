//! Demonstration trajectories: uniformly sampled positions, their smoothed
//! kinematics, and the unit-duration normalization used to compare demos of
//! different lengths.

use crate::error::{Error, Result};
use crate::savgol::SavGol;
use crate::vec3::Vec3;

/// Fewest samples a trajectory may hold (a cubic needs four points).
pub const MIN_SAMPLES: usize = 4;

pub const DEFAULT_SG_WINDOW: usize = 21;
pub const DEFAULT_SG_ORDER: usize = 3;
/// Step count of the shared unit-duration grid (1 ms resolution).
pub const DEFAULT_UNIT_STEPS: usize = 1000;

/// Uniformly sampled position record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedTrajectory {
    samples: Vec<Vec3>,
    dt: f64,
}

impl TimedTrajectory {
    pub fn new(samples: Vec<Vec3>, dt: f64) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::TooShort {
                len: samples.len(),
                min: MIN_SAMPLES,
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig(format!("sample spacing {dt} must be > 0")));
        }
        if let Some(i) = samples.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidConfig(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, dt })
    }

    pub fn samples(&self) -> &[Vec3] {
        &self.samples
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.dt
    }
}

/// Positions with velocity and acceleration on a uniform grid.
///
/// `start` and `goal` are always the first and last positions.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTrajectory {
    position: Vec<Vec3>,
    velocity: Vec<Vec3>,
    acceleration: Vec<Vec3>,
    dt: f64,
}

impl KinematicTrajectory {
    pub fn new(
        position: Vec<Vec3>,
        velocity: Vec<Vec3>,
        acceleration: Vec<Vec3>,
        dt: f64,
    ) -> Result<Self> {
        let n = position.len();
        if velocity.len() != n || acceleration.len() != n {
            return Err(Error::InvalidConfig(format!(
                "kinematic lists differ in length: {} / {} / {}",
                n,
                velocity.len(),
                acceleration.len()
            )));
        }
        if n < MIN_SAMPLES {
            return Err(Error::TooShort {
                len: n,
                min: MIN_SAMPLES,
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidConfig(format!("sample spacing {dt} must be > 0")));
        }
        Ok(Self {
            position,
            velocity,
            acceleration,
            dt,
        })
    }

    pub fn position(&self) -> &[Vec3] {
        &self.position
    }

    pub fn velocity(&self) -> &[Vec3] {
        &self.velocity
    }

    pub fn acceleration(&self) -> &[Vec3] {
        &self.acceleration
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    /// Number of integration steps, one fewer than the sample count.
    pub fn steps(&self) -> usize {
        self.position.len() - 1
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn start(&self) -> Vec3 {
        self.position[0]
    }

    pub fn goal(&self) -> Vec3 {
        self.position[self.position.len() - 1]
    }

    /// Sum of segment lengths along the position samples.
    pub fn path_length(&self) -> f64 {
        self.position
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum()
    }

    /// Returns a copy with every position shifted by `offset`.
    pub fn translated(&self, offset: Vec3) -> Self {
        Self {
            position: self.position.iter().map(|&p| p + offset).collect(),
            ..self.clone()
        }
    }

    /// Returns a copy with positions, velocities and accelerations scaled
    /// per axis.
    pub fn scaled(&self, factor: Vec3) -> Self {
        let scale = |v: &Vec3| Vec3::from_fn(|a| v[a] * factor[a]);
        Self {
            position: self.position.iter().map(scale).collect(),
            velocity: self.velocity.iter().map(scale).collect(),
            acceleration: self.acceleration.iter().map(scale).collect(),
            dt: self.dt,
        }
    }

    pub fn positions_only(&self) -> TimedTrajectory {
        TimedTrajectory {
            samples: self.position.clone(),
            dt: self.dt,
        }
    }

    /// True when `other` lives on the same time grid (length and spacing).
    pub fn same_grid(&self, other: &KinematicTrajectory) -> bool {
        self.len() == other.len() && (self.dt - other.dt).abs() <= 1e-12 * self.dt.max(other.dt)
    }
}

/// Savitzky-Golay smoothing of the positions together with the filter's first
/// and second derivatives, scaled to m/s and m/s².
pub fn smooth_and_differentiate(
    traj: &TimedTrajectory,
    window: usize,
    order: usize,
) -> Result<KinematicTrajectory> {
    smooth_with(traj, &SavGol::new(window, order)?)
}

/// [`smooth_and_differentiate`] with a preconfigured filter.
pub fn smooth_with(traj: &TimedTrajectory, sg: &SavGol) -> Result<KinematicTrajectory> {
    if traj.len() < sg.window() {
        return Err(Error::WindowTooLarge {
            window: sg.window(),
            len: traj.len(),
        });
    }
    let dt = traj.dt();
    let mut pos = vec![Vec3::ZERO; traj.len()];
    let mut vel = vec![Vec3::ZERO; traj.len()];
    let mut acc = vec![Vec3::ZERO; traj.len()];
    for axis in 0..3 {
        let signal: Vec<f64> = traj.samples().iter().map(|p| p[axis]).collect();
        let p = sg.apply(&signal, 0)?;
        let v = sg.apply(&signal, 1)?;
        let a = sg.apply(&signal, 2)?;
        for i in 0..traj.len() {
            pos[i][axis] = p[i];
            vel[i][axis] = v[i] / dt;
            acc[i][axis] = a[i] / (dt * dt);
        }
    }
    KinematicTrajectory::new(pos, vel, acc, dt)
}

/// Linear interpolation of a uniformly sampled series at fractional index `u`.
/// The endpoints are returned exactly.
pub(crate) fn sample_at(series: &[Vec3], u: f64) -> Vec3 {
    let last = series.len() - 1;
    if u <= 0.0 {
        return series[0];
    }
    if u >= last as f64 {
        return series[last];
    }
    let i = u.floor() as usize;
    let frac = u - i as f64;
    if frac == 0.0 {
        series[i]
    } else {
        series[i].lerp(series[i + 1], frac)
    }
}

/// Temporal normalization onto a unit-duration grid with the default step count.
pub fn normalize_demo(traj: &KinematicTrajectory) -> KinematicTrajectory {
    normalize_demo_with_steps(traj, DEFAULT_UNIT_STEPS)
}

/// Resamples `traj` onto `steps + 1` points over one second and shifts it to
/// start at the origin. Velocities scale by the source duration T and
/// accelerations by T², so the kinematics stay consistent in unit time.
pub fn normalize_demo_with_steps(traj: &KinematicTrajectory, steps: usize) -> KinematicTrajectory {
    assert!(steps >= MIN_SAMPLES - 1, "unit grid needs at least {MIN_SAMPLES} samples");
    let duration = traj.duration();
    let origin = traj.start();
    let src_steps = traj.steps() as f64;
    let mut pos = Vec::with_capacity(steps + 1);
    let mut vel = Vec::with_capacity(steps + 1);
    let mut acc = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let u = (k as f64 * src_steps) / steps as f64;
        pos.push(sample_at(traj.position(), u) - origin);
        vel.push(sample_at(traj.velocity(), u) * duration);
        acc.push(sample_at(traj.acceleration(), u) * (duration * duration));
    }
    KinematicTrajectory::new(pos, vel, acc, 1.0 / steps as f64)
        .expect("normalized grid satisfies the kinematic invariants")
}

/// Smooths, differentiates, and normalizes a raw recording in one pass.
pub fn prepare_demo(
    traj: &TimedTrajectory,
    window: usize,
    order: usize,
    steps: usize,
) -> Result<KinematicTrajectory> {
    prepare_demo_with(traj, &SavGol::new(window, order)?, steps)
}

pub fn prepare_demo_with(traj: &TimedTrajectory, sg: &SavGol, steps: usize) -> Result<KinematicTrajectory> {
    if steps < MIN_SAMPLES - 1 {
        return Err(Error::InvalidConfig(format!("steps {steps} must be >= {}", MIN_SAMPLES - 1)));
    }
    let kin = smooth_with(traj, sg)?;
    Ok(normalize_demo_with_steps(&kin, steps))
}
