//! Point-cloud primitives used by the grasp planner.

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::se3::{Pose, Timestamp, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CloudError {
    #[error("point cloud is empty")]
    Empty,
    #[error("need at least {needed} points, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
}

/// Unordered set of 3-D points.
///
/// `sensor_origin` records where the points were observed from, when known.
/// It travels with rigid transforms and is used by symmetry completion to
/// tell the visible side from the hidden one.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub timestamp: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor_origin: Option<Vec3>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>, timestamp: Timestamp) -> Self {
        PointCloud { points, timestamp, sensor_origin: None }
    }

    pub fn from_points(points: Vec<Vec3>) -> Self {
        Self::new(points, Timestamp::default())
    }

    pub fn with_sensor_origin(mut self, origin: Vec3) -> Self {
        self.sensor_origin = Some(origin);
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same metadata, different points.
    pub fn with_points(&self, points: Vec<Vec3>) -> Self {
        PointCloud { points, timestamp: self.timestamp, sensor_origin: self.sensor_origin }
    }

    /// Axis-aligned bounds `(min, max)`, or `None` when empty.
    pub fn bounds(&self) -> Option<(Vec3, Vec3)> {
        let first = *self.points.first()?;
        Some(
            self.points
                .iter()
                .fold((first, first), |(lo, hi), &p| (lo.component_min(p), hi.component_max(p))),
        )
    }
}

/// Principal axes ordered by descending variance, right-handed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipalAxes {
    pub axes: [Vec3; 3],
    pub variances: [f64; 3],
    pub origin: Vec3,
}

pub fn centroid(c: &PointCloud) -> Result<Vec3, CloudError> {
    mean(&c.points).ok_or(CloudError::Empty)
}

pub(crate) fn mean(points: &[Vec3]) -> Option<Vec3> {
    if points.is_empty() {
        return None;
    }
    let sum = points.iter().fold(Vec3::ZERO, |acc, &p| acc + p);
    Some(sum / points.len() as f64)
}

/// Population covariance about `origin`.
pub(crate) fn covariance(points: &[Vec3], origin: Vec3) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for &p in points {
        let d = p - origin;
        let v = nalgebra::Vector3::new(d.x, d.y, d.z);
        m += v * v.transpose();
    }
    m / points.len() as f64
}

/// Flips `v` so its largest-magnitude component is positive.
pub(crate) fn canonical_sign(v: Vec3) -> Vec3 {
    let a = v.to_array();
    let mut idx = 0;
    for i in 1..3 {
        if a[i].abs() > a[idx].abs() {
            idx = i;
        }
    }
    if a[idx] < 0.0 {
        -v
    } else {
        v
    }
}

/// Eigen-decomposition of the covariance about the centroid.
///
/// Axes are sorted by descending variance and sign-canonicalized; the third
/// axis is `cross(first, second)`. When the top two variances differ by less
/// than `1e-9 * trace`, the first axis is the direction in their span closest
/// to vertical.
pub fn principal_axes(c: &PointCloud) -> Result<PrincipalAxes, CloudError> {
    if c.len() < 2 {
        return Err(CloudError::InsufficientPoints { needed: 2, got: c.len() });
    }
    let origin = centroid(c)?;
    let cov = covariance(&c.points, origin);
    let eig = SymmetricEigen::new(cov);

    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let col = |i: usize| {
        let v = eig.eigenvectors.column(i);
        Vec3::new(v[0], v[1], v[2])
    };
    let variances = order.map(|i| eig.eigenvalues[i].max(0.0));
    let mut first = col(order[0]);
    let mut second = col(order[1]);

    let trace = variances.iter().sum::<f64>();
    if trace > 0.0 && variances[0] - variances[1] < 1e-9 * trace {
        // Tie: pick the direction of the top plane closest to vertical.
        let along = Vec3::DOWN.dot(first) * first + Vec3::DOWN.dot(second) * second;
        if let Some(v) = along.try_normalize() {
            let normal = first.cross(second);
            first = v;
            second = normal.cross(first);
        }
    }

    let first = canonical_sign(first);
    let second = canonical_sign(second - first * first.dot(second))
        .try_normalize()
        .unwrap_or_else(|| any_perpendicular(first));
    let third = first.cross(second);
    Ok(PrincipalAxes { axes: [first, second, third], variances, origin })
}

fn any_perpendicular(v: Vec3) -> Vec3 {
    let trial = if v.x.abs() < 0.9 { Vec3::NORTH } else { Vec3::EAST };
    canonical_sign((trial - v * v.dot(trial)).try_normalize().unwrap_or(Vec3::EAST))
}

/// Points within `half_thickness` of the plane through `plane_point` with
/// unit normal `plane_normal`. An empty result is a valid empty cloud.
pub fn slab_points(
    c: &PointCloud,
    plane_point: Vec3,
    plane_normal: Vec3,
    half_thickness: f64,
) -> PointCloud {
    let pts = c
        .points
        .iter()
        .copied()
        .filter(|&p| (p - plane_point).dot(plane_normal).abs() <= half_thickness)
        .collect();
    c.with_points(pts)
}

/// The lowest physical points: those within `slice_height` of the largest
/// down coordinate.
pub fn base_slice(c: &PointCloud, slice_height: f64) -> Result<PointCloud, CloudError> {
    if c.is_empty() {
        return Err(CloudError::Empty);
    }
    let max_z = c.points.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
    Ok(c.with_points(c.points.iter().copied().filter(|p| p.z >= max_z - slice_height).collect()))
}

pub fn transform_cloud(c: &PointCloud, p: &Pose) -> PointCloud {
    PointCloud {
        points: c.points.iter().map(|&v| p.transform_point(v)).collect(),
        timestamp: c.timestamp,
        sensor_origin: c.sensor_origin.map(|o| p.transform_point(o)),
    }
}
