#![allow(dead_code)]

use dmp_features::synth::{synthesize, SynthSpec};
use dmp_features::{KinematicTrajectory, Vec3};

pub const TRUTH: (f64, f64) = (10.73, 20.71);

/// Ten noisy demos at the default synthetic settings, unit-time kinematics.
pub fn synthetic_family(seed: u64) -> Vec<KinematicTrajectory> {
    synthesize(&SynthSpec::default(), seed)
        .unwrap()
        .into_iter()
        .map(|d| d.normalized)
        .collect()
}

/// Minimum-jerk reach `0 → reach` lasting `duration` seconds, sampled every
/// `dt`, with analytic derivatives.
pub fn minimum_jerk(reach: Vec3, duration: f64, samples: usize) -> KinematicTrajectory {
    let dt = duration / (samples - 1) as f64;
    let (mut p, mut v, mut a) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..samples {
        let s = k as f64 / (samples - 1) as f64;
        p.push(reach * (10.0 * s.powi(3) - 15.0 * s.powi(4) + 6.0 * s.powi(5)));
        v.push(reach * ((30.0 * s.powi(2) - 60.0 * s.powi(3) + 30.0 * s.powi(4)) / duration));
        a.push(reach * ((60.0 * s - 180.0 * s.powi(2) + 120.0 * s.powi(3)) / (duration * duration)));
    }
    KinematicTrajectory::new(p, v, a, dt).unwrap()
}

/// Semi-implicit Euler for the unforced attractor on one axis, written out
/// directly: `v += dt·(−D v − K e); e += dt·v` with `e = y − g`.
pub fn unforced_discrete(e0: f64, d_m: f64, k_m: f64, steps: usize) -> Vec<f64> {
    let dt = 1.0 / steps as f64;
    let (mut e, mut v) = (e0, 0.0);
    let mut out = vec![e];
    for _ in 0..steps {
        v += dt * (-d_m * v - k_m * e);
        e += dt * v;
        out.push(e);
    }
    out
}

/// Continuous overdamped step response `e(t)` from rest at `e0`.
pub fn unforced_continuous(e0: f64, d_m: f64, k_m: f64, t: f64) -> f64 {
    let disc = (d_m * d_m - 4.0 * k_m).sqrt();
    let (r1, r2) = ((-d_m + disc) / 2.0, (-d_m - disc) / 2.0);
    e0 * (r2 * (r1 * t).exp() - r1 * (r2 * t).exp()) / (r2 - r1)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
