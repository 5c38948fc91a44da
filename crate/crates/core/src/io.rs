//! Reading and writing trajectory CSV files.
//!
//! Demonstrations use a fixed layout: a `t,x,y,z` header followed by one
//! sample per line, seconds and meters. Kinematic outputs extend the layout
//! with `vx,vy,vz,ax,ay,az`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::export::fmt_num;
use crate::trajectory::{KinematicTrajectory, TimedTrajectory, MIN_SAMPLES};
use crate::vec3::Vec3;

pub const DEMO_HEADER: [&str; 4] = ["t", "x", "y", "z"];
pub const KINEMATIC_HEADER: [&str; 10] = ["t", "x", "y", "z", "vx", "vy", "vz", "ax", "ay", "az"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrajectoryFormat {
    #[default]
    Csv,
}

/// Loads a demonstration and resamples it onto a uniform grid.
pub fn load_trajectory(path: &Path, format: TrajectoryFormat) -> Result<TimedTrajectory> {
    match format {
        TrajectoryFormat::Csv => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            read_demo_csv(file, path)
        }
    }
}

fn read_rows<R: Read>(reader: R, path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let malformed = |line: usize, reason: String| Error::MalformedFile {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let found = rdr
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(malformed(
            1,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| malformed(line, e.to_string()))?;
        if record.len() != header.len() {
            return Err(malformed(
                line,
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| malformed(line, format!("`{field}` is not a finite number")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parses demo CSV content. `path` is only used in error messages.
pub fn read_demo_csv<R: Read>(reader: R, path: &Path) -> Result<TimedTrajectory> {
    let rows = read_rows(reader, path, &DEMO_HEADER)?;
    if rows.len() < MIN_SAMPLES {
        return Err(Error::TooShort {
            len: rows.len(),
            min: MIN_SAMPLES,
        });
    }
    let times: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let points: Vec<Vec3> = rows.iter().map(|r| Vec3::new(r[1], r[2], r[3])).collect();
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotonicTime { line: i + 3 });
    }
    resample_uniform(&times, &points)
}

/// Linear resampling onto a uniform grid whose spacing is the median source
/// spacing, adjusted so the grid ends exactly at the last timestamp.
pub fn resample_uniform(times: &[f64], points: &[Vec3]) -> Result<TimedTrajectory> {
    let span = times[times.len() - 1] - times[0];
    let mut gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let mid = gaps.len() / 2;
    let median = if gaps.len().is_multiple_of(2) {
        0.5 * (gaps[mid - 1] + gaps[mid])
    } else {
        gaps[mid]
    };
    let steps = ((span / median).round() as usize).max(1);
    let dt = span / steps as f64;

    let uniform = gaps.iter().all(|g| (g - dt).abs() <= 1e-9 * dt) && steps + 1 == times.len();
    if uniform {
        return TimedTrajectory::new(points.to_vec(), dt);
    }

    let mut out = Vec::with_capacity(steps + 1);
    let mut j = 0;
    for k in 0..=steps {
        if k == steps {
            out.push(points[points.len() - 1]);
            break;
        }
        let t = times[0] + k as f64 * dt;
        while j + 2 < times.len() && times[j + 1] <= t {
            j += 1;
        }
        let s = ((t - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
        out.push(points[j].lerp(points[j + 1], s));
    }
    TimedTrajectory::new(out, dt)
}

/// Writes positions in the demo layout. Time starts at `t0`.
pub fn write_demo_csv<W: Write>(mut w: W, positions: &[Vec3], dt: f64, t0: f64) -> std::io::Result<()> {
    writeln!(w, "{}", DEMO_HEADER.join(","))?;
    for (i, p) in positions.iter().enumerate() {
        let t = t0 + i as f64 * dt;
        writeln!(w, "{},{},{},{}", fmt_num(t), fmt_num(p.x), fmt_num(p.y), fmt_num(p.z))?;
    }
    Ok(())
}

pub fn save_demo_csv(path: &Path, positions: &[Vec3], dt: f64) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_demo_csv(&mut w, positions, dt, 0.0)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_kinematic_csv<W: Write>(mut w: W, traj: &KinematicTrajectory) -> std::io::Result<()> {
    writeln!(w, "{}", KINEMATIC_HEADER.join(","))?;
    for i in 0..traj.len() {
        let t = i as f64 * traj.dt();
        let (p, v, a) = (traj.position()[i], traj.velocity()[i], traj.acceleration()[i]);
        let fields = [t, p.x, p.y, p.z, v.x, v.y, v.z, a.x, a.y, a.z];
        let line: Vec<String> = fields.iter().map(|&f| fmt_num(f)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_kinematic_csv(path: &Path, traj: &KinematicTrajectory) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_kinematic_csv(&mut w, traj)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Reads a kinematic CSV. Rows must already be uniformly spaced.
pub fn load_kinematic_csv(path: &Path) -> Result<KinematicTrajectory> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let rows = read_rows(file, path, &KINEMATIC_HEADER)?;
    if rows.len() < MIN_SAMPLES {
        return Err(Error::TooShort {
            len: rows.len(),
            min: MIN_SAMPLES,
        });
    }
    let dt = (rows[rows.len() - 1][0] - rows[0][0]) / (rows.len() - 1) as f64;
    for (i, w) in rows.windows(2).enumerate() {
        let gap = w[1][0] - w[0][0];
        if gap <= 0.0 {
            return Err(Error::NonMonotonicTime { line: i + 3 });
        }
        if (gap - dt).abs() > 1e-6 * dt {
            return Err(Error::MalformedFile {
                path: path.to_path_buf(),
                line: i + 3,
                reason: "kinematic samples must be uniformly spaced".into(),
            });
        }
    }
    let col = |r: &Vec<f64>, c: usize| Vec3::new(r[c], r[c + 1], r[c + 2]);
    KinematicTrajectory::new(
        rows.iter().map(|r| col(r, 1)).collect(),
        rows.iter().map(|r| col(r, 4)).collect(),
        rows.iter().map(|r| col(r, 7)).collect(),
        dt,
    )
}
