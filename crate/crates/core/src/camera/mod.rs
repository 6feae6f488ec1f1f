//! Pinhole depth camera: intrinsics, depth/mask images and back-projection.
//!
//! Camera frame: x right, y down, z forward (optical axis). Depth is stored as
//! z-depth in millimeters, 16-bit, with 0 marking an invalid pixel.

pub mod mask;
pub mod pgm;
pub mod render;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::PointCloud;
use crate::se3::{Pose, Timestamp, UnitQuaternion, Vec3};

pub use mask::corrupt_mask;
pub use render::{render_depth, render_mask, PrimitiveShape, ShapeKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("invalid intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("pixel ({u}, {v}) is outside the image")]
    PixelOutOfImage { u: f64, v: f64 },
    #[error("depth {0} m is outside the valid range")]
    DepthOutOfRange(f64),
    #[error("depth image and mask are not paired: {0}")]
    Pairing(String),
    #[error("no valid masked depth pixels")]
    EmptyCloud,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub depth_min: f64,
    pub depth_max: f64,
}

impl Default for CameraIntrinsics {
    /// A 640x400 stereo-depth camera stand-in.
    fn default() -> Self {
        CameraIntrinsics {
            fx: 380.0,
            fy: 380.0,
            cx: 320.0,
            cy: 200.0,
            width: 640,
            height: 400,
            depth_min: 0.2,
            depth_max: 10.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), CameraError> {
        let bad = |m: &str| Err(CameraError::InvalidIntrinsics(m.to_string()));
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return bad("fx and fy must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image dimensions must be positive");
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64) {
            return bad("cx must lie inside the image");
        }
        if !(self.cy >= 0.0 && self.cy < self.height as f64) {
            return bad("cy must lie inside the image");
        }
        if !(self.depth_min > 0.0 && self.depth_min < self.depth_max) {
            return bad("need 0 < depth_min < depth_max");
        }
        Ok(())
    }

    pub fn contains_pixel(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }

    pub fn depth_in_range(&self, depth: f64) -> bool {
        depth >= self.depth_min && depth <= self.depth_max
    }

    /// Projects a camera-frame point to pixel coordinates; `None` behind the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Camera-frame ray through pixel `(u, v)`, scaled to unit z-depth.
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Ground width seen by a nadir-pointing camera at `altitude`.
    pub fn footprint_width(&self, altitude: f64) -> f64 {
        altitude * self.width as f64 / self.fx
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    /// Row-major z-depth in millimeters, 0 = invalid.
    pub data: Vec<u16>,
    pub timestamp: Timestamp,
}

impl DepthImage {
    pub fn zeros(width: usize, height: usize, timestamp: Timestamp) -> Self {
        DepthImage { width, height, data: vec![0; width * height], timestamp }
    }

    pub fn get(&self, u: usize, v: usize) -> u16 {
        self.data[v * self.width + u]
    }

    /// Depth in meters at a pixel, `None` if invalid.
    pub fn meters(&self, u: usize, v: usize) -> Option<f64> {
        match self.get(u, v) {
            0 => None,
            mm => Some(mm as f64 * 1e-3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationMask {
    pub width: usize,
    pub height: usize,
    pub bitmap: Vec<bool>,
    pub timestamp: Timestamp,
}

impl SegmentationMask {
    pub fn empty(width: usize, height: usize, timestamp: Timestamp) -> Self {
        SegmentationMask { width, height, bitmap: vec![false; width * height], timestamp }
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.bitmap[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.bitmap[v * self.width + u] = value;
    }

    pub fn count(&self) -> usize {
        self.bitmap.iter().filter(|&&b| b).count()
    }
}

/// Converts a z-depth in meters to the stored millimeter value, 0 when out of range.
pub fn quantize_depth(z: f64, k: &CameraIntrinsics) -> u16 {
    if !z.is_finite() || !k.depth_in_range(z) {
        return 0;
    }
    (z * 1000.0).round().clamp(1.0, u16::MAX as f64) as u16
}

pub fn back_project_pixel(
    u: f64,
    v: f64,
    depth: f64,
    k: &CameraIntrinsics,
) -> Result<Vec3, CameraError> {
    if !k.contains_pixel(u, v) {
        return Err(CameraError::PixelOutOfImage { u, v });
    }
    if !k.depth_in_range(depth) {
        return Err(CameraError::DepthOutOfRange(depth));
    }
    Ok(Vec3::new((u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth))
}

/// One world-frame point per masked pixel with valid depth. `cam_pose` maps
/// camera-frame points to the world. The cloud remembers the camera position.
pub fn back_project_mask(
    d: &DepthImage,
    m: &SegmentationMask,
    k: &CameraIntrinsics,
    cam_pose: &Pose,
) -> Result<PointCloud, CameraError> {
    if d.width != m.width || d.height != m.height {
        return Err(CameraError::Pairing(format!(
            "depth {}x{} vs mask {}x{}",
            d.width, d.height, m.width, m.height
        )));
    }
    if d.timestamp != m.timestamp {
        return Err(CameraError::Pairing(format!(
            "depth tick {} vs mask tick {}",
            d.timestamp.0, m.timestamp.0
        )));
    }
    if d.width != k.width || d.height != k.height {
        return Err(CameraError::Pairing("image size differs from intrinsics".into()));
    }
    let mut points = Vec::new();
    for v in 0..d.height {
        for u in 0..d.width {
            if !m.get(u, v) {
                continue;
            }
            let Some(z) = d.meters(u, v) else { continue };
            if let Ok(p) = back_project_pixel(u as f64, v as f64, z, k) {
                points.push(cam_pose.transform_point(p));
            }
        }
    }
    if points.is_empty() {
        return Err(CameraError::EmptyCloud);
    }
    Ok(PointCloud::new(points, m.timestamp).with_sensor_origin(cam_pose.translation))
}

/// Body-to-camera mount: camera at `translation` (body frame), optical axis
/// pitched `pitch` radians below the body's forward axis, image x to the right.
pub fn mount_pose(translation: Vec3, pitch: f64) -> Pose {
    let (s, c) = pitch.sin_cos();
    // Columns are the camera axes expressed in the body frame.
    let m = [[0.0, -s, c], [1.0, 0.0, 0.0], [0.0, c, s]];
    Pose::new(UnitQuaternion::from_matrix(m), translation)
}
