//! Output formatting shared by every file the tools write.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dmp::{damping_ratio, DynamicFeatures};
use crate::error::{Error, Result};
use crate::objective::{Metrics, ObjectiveSurface};
use crate::rl::Episode;
use crate::vec3::Vec3;

/// Fixed 17-significant-digit scientific notation, so identical values
/// always print identically.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn save_with<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    save_with(path, |w| writeln!(w, "{text}"))
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub const SURFACE_HEADER: [&str; 5] = ["d_m", "k_m", "sum_d", "similarity", "objective"];

/// One row per cell, damping-major (all stiffness values for the first
/// damping value, then the next).
pub fn write_surface_csv<W: Write>(mut w: W, surface: &ObjectiveSurface) -> std::io::Result<()> {
    writeln!(w, "{}", SURFACE_HEADER.join(","))?;
    for (i, &d) in surface.d_m_grid.iter().enumerate() {
        for (j, &k) in surface.k_m_grid.iter().enumerate() {
            let fields = [d, k, surface.sum_d[i][j], surface.similarity[i][j], surface.objective[i][j]];
            let line: Vec<String> = fields.iter().map(|&f| fmt_num(f)).collect();
            writeln!(w, "{}", line.join(","))?;
        }
    }
    Ok(())
}

pub fn save_surface_csv(path: &Path, surface: &ObjectiveSurface) -> Result<()> {
    save_with(path, |w| write_surface_csv(w, surface))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub d_m: f64,
    pub k_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    /// Best grid cell, before refinement.
    pub argmin: Option<GridPoint>,
    pub zeta: Option<f64>,
    pub k_gain: f64,
    pub n_demos: usize,
}

impl SurfaceSummary {
    pub fn new(surface: &ObjectiveSurface, n_demos: usize) -> Self {
        let argmin = surface.argmin_point().map(|(d_m, k_m)| GridPoint { d_m, k_m });
        let zeta = argmin.and_then(|p| DynamicFeatures::ratios(p.d_m, p.k_m).and_then(|f| damping_ratio(&f)).ok());
        Self {
            argmin,
            zeta,
            k_gain: surface.k_gain,
            n_demos,
        }
    }
}

/// Contents of `features.json`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeaturesRecord {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "D_M")]
    pub d_m: f64,
    #[serde(rename = "K_M")]
    pub k_m: f64,
    pub zeta: f64,
}

impl FeaturesRecord {
    pub fn new(features: &DynamicFeatures) -> Result<Self> {
        Ok(Self {
            m: features.m,
            d_m: features.d_m,
            k_m: features.k_m,
            zeta: damping_ratio(features)?,
        })
    }

    pub fn features(&self) -> Result<DynamicFeatures> {
        DynamicFeatures::new(self.m, self.d_m, self.k_m)
    }
}

/// Metrics with distances in both meters and millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub d_mean_m: f64,
    pub d_mean_mm: f64,
    pub a_peak: f64,
    pub goal_error_m: f64,
    pub goal_error_mm: f64,
}

impl From<Metrics> for MetricsReport {
    fn from(m: Metrics) -> Self {
        Self {
            d_mean_m: m.d_mean,
            d_mean_mm: m.d_mean * 1e3,
            a_peak: m.a_peak,
            goal_error_m: m.goal_error,
            goal_error_mm: m.goal_error * 1e3,
        }
    }
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub method: String,
    pub d_m: f64,
    pub k_m: f64,
    pub zeta: Option<f64>,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

impl MetricsRecord {
    pub fn new(method: &str, features: &DynamicFeatures, metrics: Metrics) -> Self {
        Self {
            method: method.to_string(),
            d_m: features.d_m,
            k_m: features.k_m,
            zeta: damping_ratio(features).ok(),
            metrics: metrics.into(),
        }
    }
}

pub const COMPARISON_HEADER: [&str; 7] = ["method", "d_m", "k_m", "zeta", "d_mean_mm", "a_peak", "goal_error_mm"];

/// Comparison table as CSV.
pub fn write_comparison_csv<W: Write>(mut w: W, rows: &[MetricsRecord]) -> std::io::Result<()> {
    writeln!(w, "{}", COMPARISON_HEADER.join(","))?;
    for r in rows {
        let zeta = r.zeta.map_or_else(|| "nan".to_string(), fmt_num);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.method,
            fmt_num(r.d_m),
            fmt_num(r.k_m),
            zeta,
            fmt_num(r.metrics.d_mean_mm),
            fmt_num(r.metrics.a_peak),
            fmt_num(r.metrics.goal_error_mm)
        )?;
    }
    Ok(())
}

pub fn save_comparison_csv(path: &Path, rows: &[MetricsRecord]) -> Result<()> {
    save_with(path, |w| write_comparison_csv(w, rows))
}

#[derive(Serialize)]
struct StepRecord {
    t: f64,
    y: Vec3,
    yd: Vec3,
    ydd: Vec3,
    a: Vec3,
    r: f64,
}

#[derive(Serialize)]
struct FinalRecord {
    t: f64,
    y: Vec3,
    yd: Vec3,
    terminal_reward: f64,
    total_return: f64,
}

/// One JSON object per line: each step, then the final state with the
/// terminal reward and return.
pub fn write_episode_jsonl<W: Write>(mut w: W, episode: &Episode) -> Result<()> {
    let io = |e| Error::io("<episode>", e);
    for (k, ((state, &a), (&ydd, &r))) in episode
        .states
        .iter()
        .zip(&episode.actions)
        .zip(episode.accelerations.iter().zip(&episode.rewards))
        .enumerate()
    {
        let rec = StepRecord {
            t: k as f64 * episode.dt,
            y: state.y,
            yd: state.yd,
            ydd,
            a,
            r,
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(io)?;
    }
    let last = episode.final_state();
    let rec = FinalRecord {
        t: episode.actions.len() as f64 * episode.dt,
        y: last.y,
        yd: last.yd,
        terminal_reward: episode.terminal_reward,
        total_return: episode.total_return,
    };
    writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(io)?;
    Ok(())
}

pub fn save_episode_jsonl(path: &Path, episode: &Episode) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_episode_jsonl(&mut w, episode).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_learning_curve_csv<W: Write>(mut w: W, curve: &[f64]) -> std::io::Result<()> {
    writeln!(w, "iteration,best_return")?;
    for (i, r) in curve.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, fmt_num(*r))?;
    }
    Ok(())
}

pub fn save_learning_curve_csv(path: &Path, curve: &[f64]) -> Result<()> {
    save_with(path, |w| write_learning_curve_csv(w, curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(-2.0), "-2.0000000000000000e0");
        for v in [std::f64::consts::PI, 1e-300, -7.25e12] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn surface_rows_are_damping_major() {
        let surface = ObjectiveSurface::from_terms(
            vec![1.0, 2.0],
            vec![10.0, 20.0, 30.0],
            vec![vec![0.1, 0.2, 0.3], vec![0.4, 0.5, 0.6]],
            vec![vec![1.0; 3], vec![2.0; 3]],
            20.0,
        );
        let mut buf = Vec::new();
        write_surface_csv(&mut buf, &surface).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "d_m,k_m,sum_d,similarity,objective");
        assert_eq!(lines.len(), 7);
        let row: Vec<f64> = lines[3].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(row[..4], [1.0, 30.0, 0.3, 1.0]);
        assert!((row[4] - (1.0 + 20.0 * 0.3)).abs() < 1e-12);
    }

    #[test]
    fn features_record_field_names() {
        let rec = FeaturesRecord::new(&DynamicFeatures::ratios(25.0, 156.25).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&serde_json::to_string(&rec).unwrap()).unwrap();
        assert_eq!(v["M"], 1.0);
        assert_eq!(v["D_M"], 25.0);
        assert_eq!(v["K_M"], 156.25);
        assert_eq!(v["zeta"], 1.0);
    }
}
