//! Trajectory evaluation: time association, Umeyama alignment, ATE and
//! translational RPE, TUM file I/O.

mod metrics;
pub mod tum;
mod umeyama;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::se3::Pose;

pub use metrics::{ate, rpe_translational, AteResult, RpeResult};
pub use umeyama::{umeyama_align, AlignMode, AlignmentResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("timestamps must be finite and strictly increasing (sample {0})")]
    NotIncreasing(usize),
    #[error("trajectories have no samples within the association window")]
    NoOverlap,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("paired trajectories differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("positions are degenerate (collinear or coincident)")]
    DegenerateGeometry,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajSample {
    /// Seconds.
    pub t: f64,
    pub pose: Pose,
}

/// Time-ordered poses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajSample>,
}

impl Trajectory {
    /// Builds a trajectory, checking that timestamps strictly increase.
    pub fn new(samples: Vec<TrajSample>) -> Result<Self, EvalError> {
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || (i > 0 && s.t <= samples[i - 1].t) {
                return Err(EvalError::NotIncreasing(i));
            }
        }
        Ok(Trajectory { samples })
    }

    pub fn from_poses(times: &[f64], poses: &[Pose]) -> Result<Self, EvalError> {
        if times.len() != poses.len() {
            return Err(EvalError::LengthMismatch(times.len(), poses.len()));
        }
        Self::new(times.iter().zip(poses).map(|(&t, &pose)| TrajSample { t, pose }).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.samples.iter().map(|s| s.pose).collect()
    }

    /// Applies `g` on the left of every pose (a change of world frame).
    pub fn transformed(&self, g: &Pose) -> Trajectory {
        Trajectory {
            samples: self
                .samples
                .iter()
                .map(|s| TrajSample { t: s.t, pose: g.compose(&s.pose) })
                .collect(),
        }
    }
}

/// Pairs each sample of `a` with the nearest-in-time sample of `b` within
/// `max_dt` seconds. Pairs are strictly increasing in both inputs; a sample of
/// `b` is used at most once. Returns the two paired trajectories.
pub fn associate(
    a: &Trajectory,
    b: &Trajectory,
    max_dt: f64,
) -> Result<(Trajectory, Trajectory), EvalError> {
    if !(max_dt.is_finite() && max_dt >= 0.0) {
        return Err(EvalError::InvalidArgument(format!("max_dt {max_dt}")));
    }
    let bt = b.times();
    let mut pa = Vec::new();
    let mut pb = Vec::new();
    let mut next_b = 0usize;
    for s in &a.samples {
        if next_b >= bt.len() {
            break;
        }
        // First index in b[next_b..] with time >= s.t.
        let k = next_b + bt[next_b..].partition_point(|&t| t < s.t);
        let mut best: Option<usize> = None;
        for j in [k.checked_sub(1), Some(k)].into_iter().flatten() {
            if j < next_b || j >= bt.len() {
                continue;
            }
            let better = match best {
                None => true,
                Some(bj) => (bt[j] - s.t).abs() < (bt[bj] - s.t).abs(),
            };
            if better {
                best = Some(j);
            }
        }
        if let Some(j) = best {
            if (bt[j] - s.t).abs() <= max_dt {
                pa.push(*s);
                pb.push(b.samples[j]);
                next_b = j + 1;
            }
        }
    }
    if pa.is_empty() {
        return Err(EvalError::NoOverlap);
    }
    Ok((Trajectory { samples: pa }, Trajectory { samples: pb }))
}
