//! Forcing-term targets recovered from demonstrations.

use crate::trajectory::KinematicTrajectory;

/// Standard deviations below this mark an axis as constant.
pub const CONSTANT_AXIS_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingKind {
    Target,
    Standardized,
}

/// Per-axis forcing samples on a unit-time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSeries {
    axes: [Vec<f64>; 3],
    kind: ForcingKind,
    /// Set on standardized series for axes that had no variation.
    constant_axes: [bool; 3],
}

impl ForcingSeries {
    pub fn target(axes: [Vec<f64>; 3]) -> Self {
        assert!(
            axes[0].len() == axes[1].len() && axes[1].len() == axes[2].len(),
            "forcing axes differ in length"
        );
        assert!(axes[0].len() >= 2, "forcing series needs at least two samples");
        Self {
            axes,
            kind: ForcingKind::Target,
            constant_axes: [false; 3],
        }
    }

    pub fn kind(&self) -> ForcingKind {
        self.kind
    }

    pub fn axis(&self, axis: usize) -> &[f64] {
        &self.axes[axis]
    }

    pub fn len(&self) -> usize {
        self.axes[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.axes[0].is_empty()
    }

    pub fn steps(&self) -> usize {
        self.len() - 1
    }

    pub fn constant_axes(&self) -> [bool; 3] {
        self.constant_axes
    }

    /// Same-length per-axis affine image `a·f + b`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self {
            axes: self.axes.clone().map(|v| v.into_iter().map(|f| a * f + b).collect()),
            ..self.clone()
        }
    }
}

/// f_target = ÿ + D_M·ẏ + K_M·(y − g) per axis on the demo's grid, where g
/// is the demo's final position.
pub fn target_forcing(demo: &KinematicTrajectory, d_m: f64, k_m: f64) -> ForcingSeries {
    let goal = demo.goal();
    let axes = [0, 1, 2].map(|a| {
        demo.position()
            .iter()
            .zip(demo.velocity())
            .zip(demo.acceleration())
            .map(|((y, yd), ydd)| ydd[a] + d_m * yd[a] + k_m * (y[a] - goal[a]))
            .collect()
    });
    ForcingSeries::target(axes)
}

/// Mean and population standard deviation.
pub(crate) fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-axis z-scores over time. Axes with SD below [`CONSTANT_AXIS_EPS`]
/// become all zeros and are flagged.
pub fn standardize_forcing(f: &ForcingSeries) -> ForcingSeries {
    debug_assert_eq!(f.kind, ForcingKind::Target, "standardizing an already standardized series");
    let mut constant_axes = [false; 3];
    let axes = [0, 1, 2].map(|a| {
        let values = &f.axes[a];
        let (mean, sd) = mean_sd(values);
        if sd < CONSTANT_AXIS_EPS {
            constant_axes[a] = true;
            vec![0.0; values.len()]
        } else {
            values.iter().map(|v| (v - mean) / sd).collect()
        }
    });
    ForcingSeries {
        axes,
        kind: ForcingKind::Standardized,
        constant_axes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec3::Vec3;

    fn demo(f: impl Fn(f64) -> (Vec3, Vec3, Vec3)) -> KinematicTrajectory {
        let n = 101;
        let (mut p, mut v, mut a) = (vec![], vec![], vec![]);
        for k in 0..n {
            let (pk, vk, ak) = f(k as f64 / 100.0);
            p.push(pk);
            v.push(vk);
            a.push(ak);
        }
        KinematicTrajectory::new(p, v, a, 0.01).unwrap()
    }

    #[test]
    fn resting_demo_has_zero_target() {
        let d = demo(|_| (Vec3::new(0.1, 0.2, 0.3), Vec3::ZERO, Vec3::ZERO));
        let f = target_forcing(&d, 10.0, 20.0);
        for a in 0..3 {
            assert!(f.axis(a).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_ratios_give_acceleration() {
        let d = demo(|t| (Vec3::new(t * t, t, 0.0), Vec3::new(2.0 * t, 1.0, 0.0), Vec3::new(2.0, t.sin(), 0.0)));
        let f = target_forcing(&d, 0.0, 0.0);
        for k in 0..d.len() {
            for a in 0..3 {
                assert_eq!(f.axis(a)[k], d.acceleration()[k][a]);
            }
        }
    }

    #[test]
    fn standardization_is_affine_invariant() {
        let raw: Vec<f64> = (0..500).map(|k| (k as f64 * 0.013).sin() + 0.1 * k as f64).collect();
        let f = ForcingSeries::target([raw.clone(), raw.iter().map(|v| v * v).collect(), raw.clone()]);
        let s = standardize_forcing(&f);
        let s2 = standardize_forcing(&f.affine(3.7, -12.0));
        for a in 0..3 {
            for (x, y) in s.axis(a).iter().zip(s2.axis(a)) {
                assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn constant_axis_is_flagged() {
        let f = ForcingSeries::target([vec![2.0; 50], (0..50).map(f64::from).collect(), vec![0.0; 50]]);
        let s = standardize_forcing(&f);
        assert_eq!(s.constant_axes(), [true, false, true]);
        assert!(s.axis(0).iter().all(|&v| v == 0.0));
        assert_eq!(s.kind(), ForcingKind::Standardized);
    }

    #[test]
    fn unit_sine_standardizes_to_zero_mean_unit_sd() {
        let n = 1001;
        let sine: Vec<f64> = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).sin())
            .collect();
        let s = standardize_forcing(&ForcingSeries::target([sine.clone(), sine.clone(), sine]));
        for a in 0..3 {
            let (mean, sd) = mean_sd(s.axis(a));
            assert!(mean.abs() <= 1e-9);
            assert!((sd - 1.0).abs() <= 1e-9);
        }
    }
}
