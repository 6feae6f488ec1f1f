//! TUM trajectory text format: `t tx ty tz qx qy qz qw` per line.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{TrajSample, Trajectory};
use crate::se3::{Pose, UnitQuaternion, Vec3};

#[derive(Debug, Error)]
pub enum TumError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn to_string(tr: &Trajectory) -> String {
    let mut s = String::with_capacity(tr.len() * 96 + 40);
    s.push_str("# timestamp tx ty tz qx qy qz qw\n");
    for x in &tr.samples {
        let (p, q) = (x.pose.translation, x.pose.rotation);
        let _ = writeln!(s, "{} {} {} {} {} {} {} {}", x.t, p.x, p.y, p.z, q.x, q.y, q.z, q.w);
    }
    s
}

pub fn parse(text: &str) -> Result<Trajectory, TumError> {
    let mut samples: Vec<TrajSample> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let err = |msg: String| TumError::Parse { line, msg };
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err(format!("bad number '{t}'"))))
            .collect::<Result<_, _>>()?;
        if vals.len() != 8 {
            return Err(err(format!("expected 8 fields, got {}", vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        let q = UnitQuaternion::from_components(vals[7], vals[4], vals[5], vals[6])
            .ok_or_else(|| err("zero quaternion".into()))?;
        if let Some(prev) = samples.last() {
            if vals[0] <= prev.t {
                return Err(err("timestamps must strictly increase".into()));
            }
        }
        samples.push(TrajSample {
            t: vals[0],
            pose: Pose::new(q, Vec3::new(vals[1], vals[2], vals[3])),
        });
    }
    Ok(Trajectory { samples })
}

pub fn write(path: impl AsRef<Path>, tr: &Trajectory) -> Result<(), TumError> {
    std::fs::write(path, to_string(tr))?;
    Ok(())
}

pub fn read(path: impl AsRef<Path>) -> Result<Trajectory, TumError> {
    parse(&std::fs::read_to_string(path)?)
}
