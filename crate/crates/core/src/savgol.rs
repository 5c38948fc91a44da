//! Savitzky-Golay smoothing and differentiation on uniformly sampled series.
//!
//! A polynomial of degree `order` is least-squares fitted to each window of
//! `window` samples; the fitted value (or derivative) at the window center is
//! the output. The output has the same length as the input; see [`EdgeMode`]
//! for how the first and last half-windows are handled.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Treatment of the samples within half a window of either end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeMode {
    /// Pad by reflecting about the first and last samples, without repeating
    /// them. Odd derivatives are forced to zero at both ends.
    #[default]
    Mirror,
    /// Evaluate the polynomial fitted to the first (last) full window at each
    /// edge sample. Exact for polynomials up to `order` everywhere.
    Interp,
}

#[derive(Debug, Clone)]
pub struct SavGol {
    window: usize,
    order: usize,
    edge: EdgeMode,
}

impl SavGol {
    pub fn new(window: usize, order: usize) -> Result<Self> {
        if window.is_multiple_of(2) || window <= order {
            return Err(Error::InvalidWindow { window, order });
        }
        Ok(Self {
            window,
            order,
            edge: EdgeMode::default(),
        })
    }

    pub fn with_edge(mut self, edge: EdgeMode) -> Self {
        self.edge = edge;
        self
    }

    pub fn edge(&self) -> EdgeMode {
        self.edge
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn half_width(&self) -> usize {
        self.window / 2
    }

    /// Taps for the `deriv`-th derivative at the window center, in units of
    /// samples (divide by `dt^deriv` for physical units). `deriv > order`
    /// yields all zeros.
    pub fn coefficients(&self, deriv: usize) -> Vec<f64> {
        self.coefficients_at(deriv, 0.0)
    }

    /// Taps for the `deriv`-th derivative at `offset` samples from the window
    /// center.
    pub fn coefficients_at(&self, deriv: usize, offset: f64) -> Vec<f64> {
        let m = self.half_width() as i64;
        let cols = self.order + 1;
        if deriv > self.order {
            return vec![0.0; self.window];
        }
        // Vandermonde rows are (i^0, i^1, ..., i^order) for i in -m..=m.
        let vander = DMatrix::from_fn(self.window, cols, |r, c| {
            let i = (r as i64 - m) as f64;
            i.powi(c as i32)
        });
        let normal = vander.transpose() * &vander;
        let inv = normal
            .try_inverse()
            .expect("Vandermonde normal matrix is nonsingular when window > order");
        // Row c of (VᵀV)⁻¹Vᵀ gives the polynomial coefficient of i^c.
        let fit = inv * vander.transpose();
        let mut taps = vec![0.0; self.window];
        for c in deriv..cols {
            // d^deriv/di^deriv of i^c at the offset.
            let falling: f64 = ((c - deriv + 1)..=c).map(|k| k as f64).product();
            let scale = falling * offset.powi((c - deriv) as i32);
            for (t, f) in taps.iter_mut().zip(fit.row(c).iter()) {
                *t += scale * f;
            }
        }
        taps
    }

    /// Applies the `deriv`-th derivative filter. The result is in per-sample
    /// units.
    pub fn apply(&self, signal: &[f64], deriv: usize) -> Result<Vec<f64>> {
        let n = signal.len();
        if n < self.window {
            return Err(Error::WindowTooLarge {
                window: self.window,
                len: n,
            });
        }
        let taps = DVector::from_vec(self.coefficients(deriv));
        let m = self.half_width() as i64;
        let last = n as i64 - 1;
        if self.edge == EdgeMode::Interp {
            let w = self.window;
            let mut out = vec![0.0; n];
            for (center, o) in out.iter_mut().enumerate() {
                let c = center as i64;
                *o = if c < m {
                    let edge = self.coefficients_at(deriv, (c - m) as f64);
                    dot(&edge, &signal[..w])
                } else if c > last - m {
                    let edge = self.coefficients_at(deriv, (c - (last - m)) as f64);
                    dot(&edge, &signal[n - w..])
                } else {
                    dot(taps.as_slice(), &signal[center - m as usize..=center + m as usize])
                };
            }
            return Ok(out);
        }
        let sample = |i: i64| -> f64 {
            let j = if i < 0 {
                -i
            } else if i > last {
                2 * last - i
            } else {
                i
            };
            signal[j as usize]
        };
        Ok((0..n as i64)
            .map(|center| {
                taps.iter()
                    .enumerate()
                    .map(|(k, c)| c * sample(center + k as i64 - m))
                    .sum()
            })
            .collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_or_small_windows() {
        assert!(matches!(
            SavGol::new(20, 3),
            Err(Error::InvalidWindow { .. })
        ));
        assert!(matches!(SavGol::new(3, 3), Err(Error::InvalidWindow { .. })));
        assert!(SavGol::new(5, 3).is_ok());
    }

    #[test]
    fn smoothing_taps_sum_to_one() {
        let sg = SavGol::new(21, 3).unwrap();
        let s: f64 = sg.coefficients(0).iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        let d: f64 = sg.coefficients(1).iter().sum();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn classic_five_point_quadratic_taps() {
        // Known 5-point quadratic smoothing taps: (-3, 12, 17, 12, -3) / 35.
        let sg = SavGol::new(5, 2).unwrap();
        let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|c| c / 35.0);
        for (a, b) in sg.coefficients(0).iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn window_longer_than_signal() {
        let sg = SavGol::new(21, 3).unwrap();
        assert!(matches!(
            sg.apply(&[0.0; 10], 0),
            Err(Error::WindowTooLarge { window: 21, len: 10 })
        ));
    }

    #[test]
    fn derivative_beyond_order_is_zero() {
        let sg = SavGol::new(7, 2).unwrap();
        assert!(sg.coefficients(3).iter().all(|&c| c == 0.0));
    }

    #[test]
    fn interp_edges_are_exact_on_cubics() {
        let sg = SavGol::new(21, 3).unwrap().with_edge(EdgeMode::Interp);
        let p = |i: f64| 0.5 - 0.2 * i + 0.03 * i * i - 0.001 * i * i * i;
        let signal: Vec<f64> = (0..60).map(|i| p(i as f64)).collect();
        let pos = sg.apply(&signal, 0).unwrap();
        let acc = sg.apply(&signal, 2).unwrap();
        for (i, (y, a)) in pos.iter().zip(&acc).enumerate() {
            let x = i as f64;
            assert!((y - p(x)).abs() < 1e-9, "position at {i}");
            assert!((a - (0.06 - 0.006 * x)).abs() < 1e-9, "acceleration at {i}");
        }
        // Mirror padding is only exact in the interior.
        let mirrored = SavGol::new(21, 3).unwrap().apply(&signal, 2).unwrap();
        assert!((mirrored[0] - 0.06).abs() > 1e-3);
    }
}
