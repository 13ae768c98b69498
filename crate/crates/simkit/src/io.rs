//! CSV and JSON emission with stable, diff-friendly formatting.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so parsing
//! a file back yields the exact bits that were written and two runs of the
//! same configuration produce byte-identical output.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use se23_preint::increment::{ImuSample, SubIncrements};
use se23_preint::{Error, Result};

use crate::trajectory::TruthPoint;

const IMU_HEADER: &str = "t,gx,gy,gz,ax,ay,az";
const IMU_SUB_HEADER: &str = "t,gx,gy,gz,ax,ay,az,g1x,g1y,g1z,g2x,g2y,g2z,a1x,a1y,a1z,a2x,a2y,a2z";

fn push_vec3(line: &mut String, v: &Vector3<f64>) {
    use std::fmt::Write;
    write!(line, ",{},{},{}", v.x, v.y, v.z).unwrap();
}

/// Writes an IMU log. Columns `gx..az` are integrated increments (rad, m/s)
/// over each interval; the comment line records the form and rate. Samples
/// carrying half-interval data get the extended column set.
pub fn write_imu_csv(path: &Path, samples: &[ImuSample], rate_hz: f64) -> Result<()> {
    let with_sub = samples.iter().all(|s| s.sub.is_some());
    let mut out = String::new();
    out.push_str(&format!("# form=increments rate_hz={rate_hz}\n"));
    out.push_str(if with_sub { IMU_SUB_HEADER } else { IMU_HEADER });
    out.push('\n');
    let mut t = 0.0;
    for s in samples {
        let mut line = format!("{t}");
        push_vec3(&mut line, &s.angle_increment());
        push_vec3(&mut line, &s.velocity_increment());
        if with_sub {
            let sub = s.sub.as_ref().unwrap();
            push_vec3(&mut line, &sub.angle_first);
            push_vec3(&mut line, &sub.angle_second);
            push_vec3(&mut line, &sub.velocity_first);
            push_vec3(&mut line, &sub.velocity_second);
        }
        out.push_str(&line);
        out.push('\n');
        t += s.dt;
    }
    fs::write(path, out).map_err(|e| Error::InvalidSpec(format!("writing {path:?}: {e}")))
}

/// Reads an IMU log written by [`write_imu_csv`] (or any file matching its
/// layout). Interval lengths come from consecutive timestamps plus the header
/// rate for the final row.
pub fn read_imu_csv(path: &Path) -> Result<Vec<ImuSample>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidSpec(format!("reading {path:?}: {e}")))?;
    let mut rate_hz: Option<f64> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut with_sub = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for field in comment.split_whitespace() {
                if let Some(value) = field.strip_prefix("rate_hz=") {
                    rate_hz = value.parse().ok();
                }
            }
            continue;
        }
        if line.starts_with('t') {
            with_sub = line == IMU_SUB_HEADER;
            if !with_sub && line != IMU_HEADER {
                return Err(Error::InvalidSpec(format!(
                    "unrecognized IMU header: {line}"
                )));
            }
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::InvalidSpec(format!("bad IMU row: {e}")))?);
    }
    let expected = if with_sub { 19 } else { 7 };
    let mut samples = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != expected {
            return Err(Error::InvalidSpec(format!(
                "IMU row {i} has {} fields, expected {expected}",
                row.len()
            )));
        }
        let dt = if i + 1 < rows.len() {
            rows[i + 1][0] - row[0]
        } else {
            match rate_hz {
                Some(r) => 1.0 / r,
                None => {
                    if i == 0 {
                        return Err(Error::InvalidSpec(
                            "single-row IMU file without a rate_hz header".into(),
                        ));
                    }
                    row[0] - rows[i - 1][0]
                }
            }
        };
        let angle = Vector3::new(row[1], row[2], row[3]);
        let velocity = Vector3::new(row[4], row[5], row[6]);
        let mut sample = ImuSample::from_increments(dt, angle, velocity)?;
        if with_sub {
            sample = sample.with_sub_increments(SubIncrements {
                angle_first: Vector3::new(row[7], row[8], row[9]),
                angle_second: Vector3::new(row[10], row[11], row[12]),
                velocity_first: Vector3::new(row[13], row[14], row[15]),
                velocity_second: Vector3::new(row[16], row[17], row[18]),
            })?;
        }
        samples.push(sample);
    }
    Ok(samples)
}

/// Writes truth states as CSV: time, flattened rotation (row major),
/// velocity, position — all in the earth-fixed frame.
pub fn write_truth_csv(path: &Path, truth: &[TruthPoint]) -> Result<()> {
    let mut out = String::new();
    out.push_str("t,c11,c12,c13,c21,c22,c23,c31,c32,c33,vx,vy,vz,rx,ry,rz\n");
    for p in truth {
        let mut line = format!("{}", p.t);
        let c: &Matrix3<f64> = &p.rot;
        for i in 0..3 {
            for j in 0..3 {
                use std::fmt::Write;
                write!(line, ",{}", c[(i, j)]).unwrap();
            }
        }
        push_vec3(&mut line, &p.vel);
        push_vec3(&mut line, &p.pos);
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::InvalidSpec(format!("writing {path:?}: {e}")))
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidSpec(format!("serializing JSON: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::InvalidSpec(format!("writing {path:?}: {e}")))
}
