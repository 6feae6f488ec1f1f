//! Zero-shot grasp planning on partial point clouds of roughly symmetric
//! objects: symmetry completion, a cutting plane normal to the longest axis,
//! and grasp selection from the slab of points near that plane.

use nalgebra::{Matrix2, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{
    back_project_mask, CameraError, CameraIntrinsics, DepthImage, SegmentationMask,
};
use crate::cloud::{
    base_slice, canonical_sign, centroid, principal_axes, slab_points, CloudError, PointCloud,
};
use crate::se3::{Pose, Timestamp, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("too few points: need {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("cutting-plane slab contains no points")]
    EmptyCandidates,
    #[error("invalid planner parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Cloud(#[from] CloudError),
    #[error(transparent)]
    Camera(#[from] CameraError),
}

impl PlanError {
    /// Stable short name used in logs and CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            PlanError::TooFewPoints { .. } => "too_few_points",
            PlanError::EmptyCandidates => "empty_candidates",
            PlanError::InvalidParams(_) => "invalid_params",
            PlanError::Cloud(_) => "empty_cloud",
            PlanError::Camera(CameraError::EmptyCloud) => "empty_cloud",
            PlanError::Camera(_) => "camera",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryMode {
    Rotate180,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    pub slab_half_thickness: f64,
    pub base_slice_height: f64,
    pub min_points: usize,
    pub symmetry_mode: SymmetryMode,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            slab_half_thickness: 0.015,
            base_slice_height: 0.02,
            min_points: 50,
            symmetry_mode: SymmetryMode::Rotate180,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<(), PlanError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.slab_half_thickness) || !pos(self.base_slice_height) {
            return Err(PlanError::InvalidParams("thicknesses must be positive".into()));
        }
        if self.min_points < 4 {
            return Err(PlanError::InvalidParams("min_points must be at least 4".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspPlan {
    pub grasp_point: Vec3,
    /// Horizontal unit direction the fingers close along.
    pub closing_axis: Vec3,
    /// Always straight down.
    pub approach: Vec3,
    pub cutting_normal: Vec3,
    /// Point the cutting plane passes through.
    pub plane_point: Vec3,
    pub completed_centroid: Vec3,
    /// Down coordinate of the object's base, for ground-clearance checks.
    pub base_z: f64,
    pub candidates: PointCloud,
    pub timestamp: Timestamp,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let i = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[i.min(sorted.len() - 1)]
}

/// Point on the vertical rotation axis used by [`complete_by_symmetry`].
///
/// Without a known sensor origin this is the partial centroid. With one, the
/// centroid is moved along the horizontal viewing direction `h` toward the
/// hidden side. The shift blends two estimates of the object's center along
/// `h`: the far visible edge (right for side views, where only the near half
/// is seen) and the middle of the visible extent (right for top-down views).
/// The blend weight is the squared horizontal share of the viewing ray.
pub fn symmetry_pivot(partial: &PointCloud) -> Result<Vec3, CloudError> {
    let c = centroid(partial)?;
    let Some(origin) = partial.sensor_origin else { return Ok(c) };
    let view = c - origin;
    let Some(h) = view.horizontal().try_normalize() else { return Ok(c) };
    let w = view.horizontal().norm_squared() / view.norm_squared();
    let mut along: Vec<f64> = partial.points.iter().map(|&p| (p - c).dot(h)).collect();
    along.sort_by(f64::total_cmp);
    let near = percentile(&along, 0.05);
    let far = percentile(&along, 0.95);
    let shift = w * far + (1.0 - w) * 0.5 * (near + far);
    Ok(c + h * shift)
}

/// Union of the partial cloud and its copy rotated 180 degrees about the
/// vertical line through [`symmetry_pivot`].
pub fn complete_by_symmetry(partial: &PointCloud) -> Result<PointCloud, CloudError> {
    let pivot = symmetry_pivot(partial)?;
    let mut points = Vec::with_capacity(2 * partial.len());
    points.extend_from_slice(&partial.points);
    points.extend(
        partial
            .points
            .iter()
            .map(|p| Vec3::new(2.0 * pivot.x - p.x, 2.0 * pivot.y - p.y, p.z)),
    );
    Ok(partial.with_points(points))
}

/// `c` moved along `axis` to the middle of the cloud's robust extent on that
/// axis. Partial views oversample the sensor-facing end of an object (the top
/// cap, seen from above), which drags the centroid along the axis; the extent
/// midpoint does not depend on sampling density.
fn mid_extent_point(points: &[Vec3], c: Vec3, axis: Vec3) -> Vec3 {
    let mut along: Vec<f64> = points.iter().map(|&p| (p - c).dot(axis)).collect();
    along.sort_by(f64::total_cmp);
    let mid = 0.5 * (percentile(&along, 0.02) + percentile(&along, 0.98));
    c + axis * mid
}

/// Minor eigenvector of the horizontal covariance, sign-canonical.
fn thin_horizontal_direction(points: &[Vec3], c: Vec3) -> Vec3 {
    let mut m = Matrix2::zeros();
    for p in points {
        let (dx, dy) = (p.x - c.x, p.y - c.y);
        m[(0, 0)] += dx * dx;
        m[(0, 1)] += dx * dy;
        m[(1, 1)] += dy * dy;
    }
    m[(1, 0)] = m[(0, 1)];
    let eig = SymmetricEigen::new(m);
    let i = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let v = eig.eigenvectors.column(i);
    Vec3::new(v[0], v[1], 0.0)
        .try_normalize()
        .map(canonical_sign)
        .unwrap_or(Vec3::NORTH)
}

pub fn plan_grasp(partial: &PointCloud, params: &PlannerParams) -> Result<GraspPlan, PlanError> {
    params.validate()?;
    if partial.len() < params.min_points {
        return Err(PlanError::TooFewPoints { needed: params.min_points, got: partial.len() });
    }
    let completed = match params.symmetry_mode {
        SymmetryMode::Rotate180 => complete_by_symmetry(partial)?,
        SymmetryMode::Off => partial.clone(),
    };
    let center = centroid(&completed)?;
    let axes = principal_axes(&completed)?;
    let normal = axes.axes[0];
    let plane_point = mid_extent_point(&completed.points, center, normal);
    let mut candidates = slab_points(&completed, plane_point, normal, params.slab_half_thickness);
    if candidates.is_empty() {
        candidates = slab_points(&completed, plane_point, normal, 2.0 * params.slab_half_thickness);
    }
    if candidates.is_empty() {
        return Err(PlanError::EmptyCandidates);
    }
    let grasp_point = centroid(&candidates)?;
    let base = base_slice(&completed, params.base_slice_height)?;
    let base_z = base.points.iter().map(|p| p.z).fold(f64::NEG_INFINITY, f64::max);
    Ok(GraspPlan {
        grasp_point,
        closing_axis: thin_horizontal_direction(&completed.points, center),
        approach: Vec3::DOWN,
        cutting_normal: normal,
        plane_point,
        completed_centroid: center,
        base_z,
        candidates,
        timestamp: partial.timestamp,
    })
}

/// Back-projects one masked depth frame and plans on it. The returned point
/// is this frame's target estimate. Errors mean "not localized this frame".
pub fn frame_target_estimate(
    d: &DepthImage,
    m: &SegmentationMask,
    k: &CameraIntrinsics,
    cam_pose: &Pose,
    params: &PlannerParams,
) -> Result<(Vec3, GraspPlan), PlanError> {
    let cloud = back_project_mask(d, m, k, cam_pose)?;
    let plan = plan_grasp(&cloud, params)?;
    Ok((plan.grasp_point, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{PrimitiveShape, ShapeKind};
    use crate::se3::UnitQuaternion;
    use crate::surface::sample_surface;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bottle_upright() -> PrimitiveShape {
        PrimitiveShape::new(
            ShapeKind::Cylinder { radius: 0.05, height: 0.29 },
            Pose::from_translation(Vec3::new(0.0, 0.0, -0.145)),
        )
    }

    fn cloud_of(shape: &PrimitiveShape, n: usize, seed: u64) -> PointCloud {
        PointCloud::from_points(sample_surface(shape, n, seed))
    }

    fn mean(points: &[Vec3]) -> Vec3 {
        points.iter().fold(Vec3::ZERO, |a, &p| a + p) / points.len() as f64
    }

    #[test]
    fn single_point_completion() {
        let c = PointCloud::from_points(vec![Vec3::new(1.0, 2.0, 3.0)]);
        let done = complete_by_symmetry(&c).unwrap();
        assert_eq!(done.points, vec![Vec3::new(1.0, 2.0, 3.0); 2]);
        assert_eq!(complete_by_symmetry(&PointCloud::default()), Err(CloudError::Empty));
    }

    #[test]
    fn symmetric_cloud_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c0 = Vec3::new(0.3, -0.2, -0.1);
        let mut pts = Vec::new();
        for _ in 0..100 {
            let d = Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
            pts.push(c0 + d);
            pts.push(Vec3::new(c0.x - d.x, c0.y - d.y, c0.z + d.z));
        }
        let c = PointCloud::from_points(pts);
        let done = complete_by_symmetry(&c).unwrap();
        assert_eq!(done.len(), 2 * c.len());
        assert!(centroid(&done).unwrap().distance(centroid(&c).unwrap()) < 1e-9);
    }

    #[test]
    fn half_cylinder_completion_recovers_axis() {
        let full = sample_surface(&bottle_upright(), 20_000, 9);
        // Seen from the north at the object's mid-height.
        let sensor = Vec3::new(2.0, 0.0, -0.145);
        let front: Vec<Vec3> = full.into_iter().filter(|p| p.x >= 0.0).collect();
        let partial = PointCloud::from_points(front.clone()).with_sensor_origin(sensor);
        let axis = Vec3::new(0.0, 0.0, -0.145);
        let partial_err = mean(&front).horizontal_distance(axis);
        let done = complete_by_symmetry(&partial).unwrap();
        let done_err = mean(&done.points).horizontal_distance(axis);
        assert!(partial_err > 0.025, "{partial_err}");
        assert!(done_err < 0.01, "{done_err}");
    }

    #[test]
    fn upright_bottle_plan() {
        let plan = plan_grasp(&cloud_of(&bottle_upright(), 10_000, 2), &PlannerParams::default()).unwrap();
        assert!(plan.cutting_normal.dot(Vec3::DOWN).abs() > (1f64.to_radians()).cos());
        assert!(plan.grasp_point.distance(Vec3::new(0.0, 0.0, -0.145)) < 0.01);
        assert!(plan.closing_axis.z.abs() < 1e-6);
        assert!((plan.closing_axis.norm() - 1.0).abs() < 1e-12);
        assert!((plan.base_z - 0.0).abs() < 1e-3);
        assert_eq!(plan.approach, Vec3::DOWN);
    }

    #[test]
    fn sideways_bottle_plan() {
        let shape = PrimitiveShape::new(
            ShapeKind::Cylinder { radius: 0.05, height: 0.29 },
            Pose::new(
                UnitQuaternion::from_axis_angle(Vec3::NORTH, std::f64::consts::FRAC_PI_2),
                Vec3::new(0.4, 0.1, -0.05),
            ),
        );
        let plan = plan_grasp(&cloud_of(&shape, 10_000, 3), &PlannerParams::default()).unwrap();
        assert!(plan.cutting_normal.dot(Vec3::EAST).abs() > (2f64.to_radians()).cos());
        assert!(plan.grasp_point.distance(shape.center()) < 0.015);
        // Fingers close across the thin side, not along the bottle.
        assert!(plan.closing_axis.dot(Vec3::NORTH).abs() > 0.99);
    }

    #[test]
    fn ball_plan_uses_tie_break_path() {
        let ball = PrimitiveShape::new(ShapeKind::Sphere { radius: 0.07 }, Pose::from_translation(Vec3::new(0.0, 0.0, -0.07)));
        let plan = plan_grasp(&cloud_of(&ball, 10_000, 4), &PlannerParams::default()).unwrap();
        assert!(plan.grasp_point.distance(ball.center()) < 0.01);
    }

    #[test]
    fn too_few_points_and_params() {
        let c = PointCloud::from_points(vec![Vec3::ZERO; 3]);
        assert_eq!(
            plan_grasp(&c, &PlannerParams::default()),
            Err(PlanError::TooFewPoints { needed: 50, got: 3 })
        );
        let bad = PlannerParams { min_points: 2, ..Default::default() };
        assert!(matches!(plan_grasp(&c, &bad), Err(PlanError::InvalidParams(_))));
    }

    #[test]
    fn empty_slab_retries_then_errors() {
        // Two clusters far apart along north: the centroid plane sits in the gap.
        let mut pts = vec![Vec3::new(-1.0, 0.0, 0.0); 30];
        pts.extend(vec![Vec3::new(1.0, 0.0, 0.0); 30]);
        let params = PlannerParams { symmetry_mode: SymmetryMode::Off, ..Default::default() };
        assert_eq!(plan_grasp(&PointCloud::from_points(pts.clone()), &params), Err(PlanError::EmptyCandidates));
        // A point just outside h but inside 2h is picked up by the retry.
        pts.push(Vec3::new(0.02, 0.0, 0.0));
        let plan = plan_grasp(&PointCloud::from_points(pts), &params).unwrap();
        assert_eq!(plan.candidates.len(), 1);
    }

    fn box_cloud(seed: u64) -> PointCloud {
        let s = PrimitiveShape::new(
            ShapeKind::Box { extents: [0.08, 0.25, 0.15] },
            Pose::new(UnitQuaternion::from_yaw(0.3), Vec3::new(0.2, -0.1, -0.075)),
        );
        cloud_of(&s, 3000, seed)
    }

    #[test]
    fn yaw_translation_equivariance() {
        let c = box_cloud(5);
        let params = PlannerParams::default();
        let base = plan_grasp(&c, &params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let yaw = rng.random_range(-3.0..3.0);
            let t = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 0.0);
            let g = Pose::from_yaw(yaw, t);
            let moved = plan_grasp(&crate::cloud::transform_cloud(&c, &g), &params).unwrap();
            assert!(moved.grasp_point.distance(g.transform_point(base.grasp_point)) < 1e-6);
            let rotated = g.transform_vector(base.closing_axis);
            assert!(moved.closing_axis.dot(rotated).abs() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn candidates_and_hull_membership() {
        let c = box_cloud(7);
        let plan = plan_grasp(&c, &PlannerParams::default()).unwrap();
        let done = complete_by_symmetry(&c).unwrap();
        assert!(plan.candidates.points.iter().all(|p| done.points.contains(p)));
        // No direction separates the grasp point from the candidate set.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let max = plan.candidates.points.iter().map(|p| p.dot(d)).fold(f64::NEG_INFINITY, f64::max);
            assert!(plan.grasp_point.dot(d) <= max + 1e-12);
        }
        let (lo, hi) = plan.candidates.bounds().unwrap();
        let g = plan.grasp_point;
        let inflate = Vec3::new(0.01, 0.01, 0.01);
        assert!(g.component_max(lo - inflate) == g && g.component_min(hi + inflate) == g);
    }

    #[test]
    fn planning_is_deterministic() {
        let c = box_cloud(9);
        let a = plan_grasp(&c, &PlannerParams::default()).unwrap();
        let b = plan_grasp(&c, &PlannerParams::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn rendered_frame_estimates() {
        use crate::camera::{corrupt_mask, mount_pose, render::*};
        let k = CameraIntrinsics::default();
        let bottle = bottle_upright();
        let cam = Pose::new(mount_pose(Vec3::ZERO, 1.2).rotation, Vec3::new(-0.6, 0.1, -1.5));
        let buf = cast_rays(&[bottle], 0.0, &k, &cam, PixelRect::full(&k));
        let d = depth_from_hits(&buf, &k, Timestamp(0));
        let m = mask_from_hits(&buf, 0, Timestamp(0));
        let params = PlannerParams::default();
        let (clean, _) = frame_target_estimate(&d, &m, &k, &cam, &params).unwrap();
        assert!(clean.distance(bottle.center()) < 0.02, "{}", clean.distance(bottle.center()));
        let eroded = corrupt_mask(&m, 1, 0, 0.0, 0);
        let (shifted, _) = frame_target_estimate(&d, &eroded, &k, &cam, &params).unwrap();
        assert!(shifted.distance(clean) < 0.01);
        let none = SegmentationMask::empty(k.width, k.height, Timestamp(0));
        assert!(frame_target_estimate(&d, &none, &k, &cam, &params).is_err());
    }
}
