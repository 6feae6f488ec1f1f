//! Analytic ray-cast renderer for primitive scenes over a ground plane.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quantize_depth, CameraIntrinsics, DepthImage, SegmentationMask};
use crate::se3::{Pose, Timestamp, Vec3};

const EPS: f64 = 1e-9;

/// Primitive dimensions in meters. Cylinders and capsules have their axis
/// along the local z axis; capsule `height` is the full tip-to-tip length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeKind {
    Box { extents: [f64; 3] },
    Cylinder { radius: f64, height: f64 },
    Sphere { radius: f64 },
    Capsule { radius: f64, height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveShape {
    pub kind: ShapeKind,
    /// Local-to-world pose of the shape center.
    pub pose: Pose,
}

impl PrimitiveShape {
    pub fn new(kind: ShapeKind, pose: Pose) -> Self {
        PrimitiveShape { kind, pose }
    }

    pub fn validate(&self) -> Result<(), String> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        let ok = match self.kind {
            ShapeKind::Box { extents } => extents.iter().all(|&e| pos(e)),
            ShapeKind::Cylinder { radius, height } => pos(radius) && pos(height),
            ShapeKind::Sphere { radius } => pos(radius),
            ShapeKind::Capsule { radius, height } => {
                pos(radius) && pos(height) && height >= 2.0 * radius
            }
        };
        if !ok {
            return Err(format!("invalid dimensions for {:?}", self.kind));
        }
        if !self.pose.is_finite() {
            return Err("non-finite shape pose".into());
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        self.pose.translation
    }

    /// Half-extent of the shape along a world unit direction (support function
    /// about the center).
    pub fn half_extent_along(&self, dir: Vec3) -> f64 {
        let local = self.pose.rotation.conjugate().rotate(dir);
        match self.kind {
            ShapeKind::Box { extents } => {
                0.5 * (local.x.abs() * extents[0]
                    + local.y.abs() * extents[1]
                    + local.z.abs() * extents[2])
            }
            ShapeKind::Cylinder { radius, height } => {
                local.z.abs() * 0.5 * height + radius * (1.0 - local.z * local.z).max(0.0).sqrt()
            }
            ShapeKind::Sphere { radius } => radius,
            ShapeKind::Capsule { radius, height } => local.z.abs() * (0.5 * height - radius) + radius,
        }
    }

    /// World-frame `(top_z, bottom_z)`; top has the smaller down coordinate.
    pub fn vertical_extent(&self) -> (f64, f64) {
        let h = self.half_extent_along(Vec3::DOWN);
        (self.center().z - h, self.center().z + h)
    }

    /// World axis-aligned bounding box `(min, max)`.
    pub fn aabb(&self) -> (Vec3, Vec3) {
        let half = Vec3::new(
            self.half_extent_along(Vec3::NORTH),
            self.half_extent_along(Vec3::EAST),
            self.half_extent_along(Vec3::DOWN),
        );
        (self.center() - half, self.center() + half)
    }

    /// Smallest ray parameter `t > 0` with `origin + t * dir` on the surface.
    pub fn intersect(&self, origin: Vec3, dir: Vec3) -> Option<f64> {
        let inv = self.pose.inverse();
        let o = inv.transform_point(origin);
        let d = inv.transform_vector(dir);
        match self.kind {
            ShapeKind::Sphere { radius } => hit_sphere(o, d, Vec3::ZERO, radius),
            ShapeKind::Box { extents } => hit_box(o, d, extents),
            ShapeKind::Cylinder { radius, height } => {
                let hh = 0.5 * height;
                let side = hit_tube(o, d, radius, hh);
                let caps = [-hh, hh].into_iter().filter_map(|zc| hit_disc(o, d, zc, radius));
                min_opt(side.into_iter().chain(caps))
            }
            ShapeKind::Capsule { radius, height } => {
                let hh = 0.5 * height - radius;
                let side = hit_tube(o, d, radius, hh);
                let ends = [-hh, hh]
                    .into_iter()
                    .filter_map(|zc| hit_sphere(o, d, Vec3::new(0.0, 0.0, zc), radius));
                min_opt(side.into_iter().chain(ends))
            }
        }
    }
}

fn min_opt(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))))
}

/// Smallest positive root of `a t^2 + b t + c = 0`.
fn smallest_positive_root(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a <= 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Numerically stable pair of roots.
    let q = -0.5 * (b + b.signum() * sq);
    let (mut t0, mut t1) = if q != 0.0 { (q / a, c / q) } else { (0.0, 0.0) };
    if t0 > t1 {
        std::mem::swap(&mut t0, &mut t1);
    }
    Some((t0, t1))
}

fn hit_sphere(o: Vec3, d: Vec3, c: Vec3, r: f64) -> Option<f64> {
    let oc = o - c;
    let (t0, t1) = smallest_positive_root(d.dot(d), 2.0 * oc.dot(d), oc.dot(oc) - r * r)?;
    [t0, t1].into_iter().find(|&t| t > EPS)
}

fn hit_tube(o: Vec3, d: Vec3, r: f64, hh: f64) -> Option<f64> {
    let a = d.x * d.x + d.y * d.y;
    let b = 2.0 * (o.x * d.x + o.y * d.y);
    let c = o.x * o.x + o.y * o.y - r * r;
    let (t0, t1) = smallest_positive_root(a, b, c)?;
    [t0, t1].into_iter().find(|&t| t > EPS && (o.z + t * d.z).abs() <= hh)
}

fn hit_disc(o: Vec3, d: Vec3, zc: f64, r: f64) -> Option<f64> {
    if d.z == 0.0 {
        return None;
    }
    let t = (zc - o.z) / d.z;
    if t <= EPS {
        return None;
    }
    let (x, y) = (o.x + t * d.x, o.y + t * d.y);
    (x * x + y * y <= r * r).then_some(t)
}

fn hit_box(o: Vec3, d: Vec3, extents: [f64; 3]) -> Option<f64> {
    let (o, d) = (o.to_array(), d.to_array());
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for i in 0..3 {
        let h = 0.5 * extents[i];
        if d[i] == 0.0 {
            if o[i].abs() > h {
                return None;
            }
            continue;
        }
        let (mut a, mut b) = ((-h - o[i]) / d[i], (h - o[i]) / d[i]);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t_enter = t_enter.max(a);
        t_exit = t_exit.min(b);
    }
    if t_enter > t_exit || t_exit <= EPS {
        return None;
    }
    Some(if t_enter > EPS { t_enter } else { t_exit })
}

/// What the nearest hit along a pixel ray belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitOwner {
    Nothing,
    Ground,
    Shape(usize),
}

/// Inclusive-exclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub u0: usize,
    pub v0: usize,
    pub u1: usize,
    pub v1: usize,
}

impl PixelRect {
    pub fn full(k: &CameraIntrinsics) -> Self {
        PixelRect { u0: 0, v0: 0, u1: k.width, v1: k.height }
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        u >= self.u0 && u < self.u1 && v >= self.v0 && v < self.v1
    }
}

/// Per-pixel nearest hits: z-depth in meters (NaN on miss) and owner.
#[derive(Debug, Clone)]
pub struct HitBuffer {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
    pub owner: Vec<HitOwner>,
}

/// Casts one ray per pixel center inside `roi`; pixels outside stay misses.
pub fn cast_rays(
    shapes: &[PrimitiveShape],
    ground_z: f64,
    k: &CameraIntrinsics,
    cam_pose: &Pose,
    roi: PixelRect,
) -> HitBuffer {
    let (w, h) = (k.width, k.height);
    let origin = cam_pose.translation;
    let mut buf = HitBuffer {
        width: w,
        height: h,
        depth: vec![f64::NAN; w * h],
        owner: vec![HitOwner::Nothing; w * h],
    };
    let (v0, v1) = (roi.v0.min(h), roi.v1.min(h));
    let (u0, u1) = (roi.u0.min(w), roi.u1.min(w));
    if v0 >= v1 || u0 >= u1 {
        return buf;
    }
    buf.depth[v0 * w..v1 * w]
        .par_chunks_mut(w)
        .zip(buf.owner[v0 * w..v1 * w].par_chunks_mut(w))
        .enumerate()
        .for_each(|(i, (depth, owner))| {
            let v = v0 + i;
            for u in u0..u1 {
                let dir = cam_pose.transform_vector(k.ray(u as f64, v as f64));
                let mut best = f64::INFINITY;
                let mut who = HitOwner::Nothing;
                if dir.z > 0.0 {
                    let t = (ground_z - origin.z) / dir.z;
                    if t > EPS {
                        best = t;
                        who = HitOwner::Ground;
                    }
                }
                for (j, s) in shapes.iter().enumerate() {
                    if let Some(t) = s.intersect(origin, dir) {
                        if t < best {
                            best = t;
                            who = HitOwner::Shape(j);
                        }
                    }
                }
                if who != HitOwner::Nothing {
                    // The ray has unit z in the camera frame, so t is z-depth.
                    depth[u] = best;
                    owner[u] = who;
                }
            }
        });
    buf
}

/// Additive Gaussian depth noise with sigma(z) = sigma0 + kz * z^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthNoise {
    pub sigma0: f64,
    pub kz: f64,
}

impl Default for DepthNoise {
    fn default() -> Self {
        DepthNoise { sigma0: 0.001, kz: 0.002 }
    }
}

impl DepthNoise {
    pub const NONE: DepthNoise = DepthNoise { sigma0: 0.0, kz: 0.0 };

    pub fn is_zero(&self) -> bool {
        self.sigma0 == 0.0 && self.kz == 0.0
    }

    /// Perturbs every hit depth in row-major order; deterministic per seed.
    pub fn apply(&self, buf: &mut HitBuffer, seed: u64) {
        if self.is_zero() {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        for z in buf.depth.iter_mut().filter(|z| z.is_finite()) {
            let sigma = self.sigma0 + self.kz * *z * *z;
            let n: f64 = unit.sample(&mut rng);
            *z += sigma * n;
        }
    }
}

pub fn depth_from_hits(buf: &HitBuffer, k: &CameraIntrinsics, timestamp: Timestamp) -> DepthImage {
    DepthImage {
        width: buf.width,
        height: buf.height,
        data: buf.depth.iter().map(|&z| quantize_depth(z, k)).collect(),
        timestamp,
    }
}

pub fn mask_from_hits(buf: &HitBuffer, target: usize, timestamp: Timestamp) -> SegmentationMask {
    SegmentationMask {
        width: buf.width,
        height: buf.height,
        bitmap: buf.owner.iter().map(|&o| o == HitOwner::Shape(target)).collect(),
        timestamp,
    }
}

/// Noise-free z-depth image of the scene, quantized to millimeters. Misses and
/// hits outside the depth range are 0.
pub fn render_depth(
    shapes: &[PrimitiveShape],
    ground_z: f64,
    k: &CameraIntrinsics,
    cam_pose: &Pose,
) -> DepthImage {
    let buf = cast_rays(shapes, ground_z, k, cam_pose, PixelRect::full(k));
    depth_from_hits(&buf, k, Timestamp::default())
}

/// Oracle segmentation: a pixel is set iff its nearest hit is `shapes[target]`.
pub fn render_mask(
    target: usize,
    shapes: &[PrimitiveShape],
    ground_z: f64,
    k: &CameraIntrinsics,
    cam_pose: &Pose,
) -> SegmentationMask {
    let buf = cast_rays(shapes, ground_z, k, cam_pose, PixelRect::full(k));
    mask_from_hits(&buf, target, Timestamp::default())
}

/// Conservative pixel rectangle that contains every pixel the shape can
/// cover. `None` when the shape is certainly out of view.
pub fn shape_roi(shape: &PrimitiveShape, k: &CameraIntrinsics, cam_pose: &Pose) -> Option<PixelRect> {
    let (lo, hi) = shape.aabb();
    let to_cam = cam_pose.inverse();
    let mut corners = Vec::with_capacity(8);
    for i in 0..8 {
        let c = Vec3::new(
            if i & 1 == 0 { lo.x } else { hi.x },
            if i & 2 == 0 { lo.y } else { hi.y },
            if i & 4 == 0 { lo.z } else { hi.z },
        );
        corners.push(to_cam.transform_point(c));
    }
    if corners.iter().all(|c| c.z <= 0.0) {
        return None;
    }
    if corners.iter().any(|c| c.z <= 1e-6) {
        return Some(PixelRect::full(k));
    }
    let (mut umin, mut vmin) = (f64::INFINITY, f64::INFINITY);
    let (mut umax, mut vmax) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in &corners {
        let (u, v) = k.project(*c)?;
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    let clamp = |x: f64, n: usize| x.clamp(0.0, n as f64) as usize;
    let rect = PixelRect {
        u0: clamp(umin.floor() - 1.0, k.width),
        v0: clamp(vmin.floor() - 1.0, k.height),
        u1: clamp(umax.ceil() + 2.0, k.width),
        v1: clamp(vmax.ceil() + 2.0, k.height),
    };
    (rect.u0 < rect.u1 && rect.v0 < rect.v1).then_some(rect)
}
