//! Multi-frame target fusion with exhaustive 1-point RANSAC.

use std::cmp::Ordering;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::se3::{Timestamp, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("no estimates to fuse")]
    NoEstimates,
    #[error("inlier threshold must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("window must be at least 1")]
    InvalidWindow,
    #[error("non-finite estimate at tick {0}")]
    NonFinite(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEstimate {
    pub point: Vec3,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusedTarget {
    pub point: Vec3,
    pub inlier_count: usize,
    pub inlier_fraction: f64,
    /// RMS distance of the inliers to the fused point.
    pub residual_rms: f64,
    /// Timestamp of the winning hypothesis.
    pub hypothesis_time: Timestamp,
    /// Latest timestamp among the inliers.
    pub latest_inlier: Timestamp,
}

/// Canonical order: timestamp, then coordinates. Fusion results depend only on
/// the multiset of estimates, never on input order.
fn canonical_order(a: &TargetEstimate, b: &TargetEstimate) -> Ordering {
    a.timestamp
        .cmp(&b.timestamp)
        .then(a.point.x.total_cmp(&b.point.x))
        .then(a.point.y.total_cmp(&b.point.y))
        .then(a.point.z.total_cmp(&b.point.z))
}

fn check(estimates: &[TargetEstimate], tau: f64) -> Result<(), FusionError> {
    if estimates.is_empty() {
        return Err(FusionError::NoEstimates);
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(FusionError::InvalidTau(tau));
    }
    if let Some(e) = estimates.iter().find(|e| !e.point.is_finite()) {
        return Err(FusionError::NonFinite(e.timestamp.0));
    }
    Ok(())
}

/// Every estimate is tried as a hypothesis; inliers are the estimates within
/// `tau` of it. The winner has the most inliers, then the smallest mean inlier
/// distance, then the earliest timestamp. The fused point is the mean of the
/// winner's inliers.
pub fn ransac_fuse(estimates: &[TargetEstimate], tau: f64) -> Result<FusedTarget, FusionError> {
    check(estimates, tau)?;
    let mut sorted = estimates.to_vec();
    sorted.sort_by(canonical_order);

    // (count, mean residual, index); the first best wins remaining ties, and
    // index order is timestamp order.
    let mut best: Option<(usize, f64, usize)> = None;
    let mut dists = Vec::with_capacity(sorted.len());
    for (i, h) in sorted.iter().enumerate() {
        dists.clear();
        dists.extend(sorted.iter().map(|e| e.point.distance(h.point)).filter(|&d| d <= tau));
        // Summing in ascending order makes the mean a function of the
        // distance multiset, so exact ties are detected reliably.
        dists.sort_by(f64::total_cmp);
        let count = dists.len();
        let mean = dists.iter().sum::<f64>() / count as f64;
        let better = match best {
            None => true,
            Some((bc, bm, _)) => count > bc || (count == bc && mean < bm),
        };
        if better {
            best = Some((count, mean, i));
        }
    }
    let (count, _, win) = best.expect("non-empty");
    let h = sorted[win].point;
    let inliers: Vec<&TargetEstimate> =
        sorted.iter().filter(|e| e.point.distance(h) <= tau).collect();
    let point = inliers.iter().fold(Vec3::ZERO, |a, e| a + e.point) / count as f64;
    let rms = (inliers.iter().map(|e| e.point.distance(point).powi(2)).sum::<f64>()
        / count as f64)
        .sqrt();
    Ok(FusedTarget {
        point,
        inlier_count: count,
        inlier_fraction: count as f64 / sorted.len() as f64,
        residual_rms: rms,
        hypothesis_time: sorted[win].timestamp,
        latest_inlier: inliers.iter().map(|e| e.timestamp).max().expect("winner is an inlier"),
    })
}

/// [`ransac_fuse`] over the `window` most recent estimates by timestamp.
pub fn fuse_window(
    estimates: &[TargetEstimate],
    tau: f64,
    window: usize,
) -> Result<FusedTarget, FusionError> {
    if window == 0 {
        return Err(FusionError::InvalidWindow);
    }
    check(estimates, tau)?;
    let mut sorted = estimates.to_vec();
    sorted.sort_by(canonical_order);
    let start = sorted.len().saturating_sub(window);
    ransac_fuse(&sorted[start..], tau)
}

/// Bounded buffer of the latest estimates for streaming use.
#[derive(Debug, Clone)]
pub struct FusionBuffer {
    tau: f64,
    window: usize,
    items: VecDeque<TargetEstimate>,
}

impl FusionBuffer {
    pub fn new(tau: f64, window: usize) -> Result<Self, FusionError> {
        if window == 0 {
            return Err(FusionError::InvalidWindow);
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(FusionError::InvalidTau(tau));
        }
        Ok(FusionBuffer { tau, window, items: VecDeque::with_capacity(window) })
    }

    pub fn push(&mut self, e: TargetEstimate) {
        if self.items.len() == self.window {
            self.items.pop_front();
        }
        self.items.push_back(e);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn latest(&self) -> Option<&TargetEstimate> {
        self.items.back()
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    pub fn fuse(&self) -> Result<FusedTarget, FusionError> {
        let v: Vec<TargetEstimate> = self.items.iter().copied().collect();
        fuse_window(&v, self.tau, self.window)
    }
}
