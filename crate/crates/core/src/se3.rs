//! Rigid-body math in the north-east-down (NED) world convention.
//!
//! Rotations are stored as unit quaternions, renormalized after every
//! composition and canonicalized to `w >= 0`.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// A 3-vector in meters. In the world frame: x north, y east, z down.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const NORTH: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const EAST: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const DOWN: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` for a (near) zero vector.
    pub fn try_normalize(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 1e-300 && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    /// Horizontal (north-east) part with the down component zeroed.
    pub fn horizontal(self) -> Vec3 {
        Vec3::new(self.x, self.y, 0.0)
    }

    pub fn horizontal_distance(self, o: Vec3) -> f64 {
        (self - o).horizontal().norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }

    pub fn component_min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Hamilton unit quaternion, canonicalized so that `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes and canonicalizes raw components. Returns `None` for a
    /// zero or non-finite input.
    pub fn try_new(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !(n.is_finite() && n > 1e-300) {
            return None;
        }
        Some(UnitQuaternion { w: w / n, x: x / n, y: y / n, z: z / n }.canonical())
    }

    /// Like [`try_new`](Self::try_new) but keeps components that are already
    /// unit to within `1e-9` untouched (apart from the sign flip), so parsed
    /// files round-trip bit-exactly.
    pub fn from_components(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let n2 = w * w + x * x + y * y + z * z;
        if !n2.is_finite() {
            return None;
        }
        if (n2.sqrt() - 1.0).abs() < 1e-9 {
            Some(UnitQuaternion { w, x, y, z }.canonical())
        } else {
            Self::try_new(w, x, y, z)
        }
    }

    /// Rotation of `angle` radians about `axis` (right-hand rule).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let a = match axis.try_normalize() {
            Some(a) => a,
            None => return Self::IDENTITY,
        };
        let (s, c) = (0.5 * angle).sin_cos();
        Self::try_new(c, a.x * s, a.y * s, a.z * s).unwrap_or(Self::IDENTITY)
    }

    /// Rotation about the down axis; positive yaw turns north toward east.
    pub fn from_yaw(yaw: f64) -> Self {
        Self::from_axis_angle(Vec3::DOWN, yaw)
    }

    /// Aerospace z-y-x (yaw, pitch, roll) Euler angles.
    pub fn from_euler(roll: f64, pitch: f64, yaw: f64) -> Self {
        Self::from_yaw(yaw)
            .mul(Self::from_axis_angle(Vec3::EAST, pitch))
            .mul(Self::from_axis_angle(Vec3::NORTH, roll))
    }

    /// Builds a rotation from an orthonormal right-handed matrix given by rows.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Self {
        let r = nalgebra::Matrix3::new(
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        );
        let rot = nalgebra::Rotation3::from_matrix_unchecked(r);
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(&rot);
        Self::try_new(q.w, q.i, q.j, q.k).unwrap_or(Self::IDENTITY)
    }

    fn canonical(self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            UnitQuaternion { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
        } else {
            self
        }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn conjugate(self) -> Self {
        UnitQuaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }.canonical()
    }

    /// Hamilton product `self * o`, renormalized.
    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, o: Self) -> Self {
        let w = self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z;
        let x = self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y;
        let y = self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x;
        let z = self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w;
        Self::try_new(w, x, y, z).unwrap_or(Self::IDENTITY)
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        // v' = v + 2w (q x v) + 2 q x (q x v)
        let q = Vec3::new(self.x, self.y, self.z);
        let t = q.cross(v) * 2.0;
        v + t * self.w + q.cross(t)
    }

    /// Row-major rotation matrix.
    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    /// Heading of the rotated north axis, in (-pi, pi].
    pub fn yaw(&self) -> f64 {
        let f = self.rotate(Vec3::NORTH);
        wrap_angle(f.y.atan2(f.x))
    }

    /// Rotation angle in [0, pi].
    pub fn angle(&self) -> f64 {
        2.0 * Vec3::new(self.x, self.y, self.z).norm().atan2(self.w.abs())
    }

    /// Angular distance to `o`, independent of the double cover.
    pub fn angle_to(&self, o: &Self) -> f64 {
        self.conjugate().mul(*o).angle()
    }
}

/// Wraps an angle to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Rigid transform: `p -> rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
}

impl Pose {
    pub const IDENTITY: Pose =
        Pose { rotation: UnitQuaternion::IDENTITY, translation: Vec3::ZERO };

    pub fn new(rotation: UnitQuaternion, translation: Vec3) -> Self {
        Pose { rotation, translation }
    }

    pub fn from_translation(t: Vec3) -> Self {
        Pose { rotation: UnitQuaternion::IDENTITY, translation: t }
    }

    pub fn from_yaw(yaw: f64, t: Vec3) -> Self {
        Pose { rotation: UnitQuaternion::from_yaw(yaw), translation: t }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation.mul(other.rotation),
            translation: self.rotation.rotate(other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let r = self.rotation.conjugate();
        Pose { rotation: r, translation: -r.rotate(self.translation) }
    }

    pub fn transform_point(&self, v: Vec3) -> Vec3 {
        self.rotation.rotate(v) + self.translation
    }

    pub fn transform_vector(&self, v: Vec3) -> Vec3 {
        self.rotation.rotate(v)
    }

    /// `inverse(self) ∘ other`: `other` expressed in the frame of `self`.
    pub fn relative_to(&self, other: &Pose) -> Pose {
        self.inverse().compose(other)
    }

    /// Equality up to `tol` on translation and rotation angle.
    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        self.translation.distance(other.translation) <= tol
            && self.rotation.angle_to(&other.rotation) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.translation.is_finite()
            && [self.rotation.w, self.rotation.x, self.rotation.y, self.rotation.z]
                .iter()
                .all(|c| c.is_finite())
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, o: Pose) -> Pose {
        self.compose(&o)
    }
}

pub fn compose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

pub fn inverse(p: &Pose) -> Pose {
    p.inverse()
}

pub fn transform_point(p: &Pose, v: Vec3) -> Vec3 {
    p.transform_point(v)
}

/// `inverse(a) ∘ b`.
pub fn relative_pose(a: &Pose, b: &Pose) -> Pose {
    a.relative_to(b)
}

/// Simulation tick count. Tick length is set by the simulator clock.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub fn ticks(self) -> u64 {
        self.0
    }

    pub fn seconds(self, tick_rate: f64) -> f64 {
        self.0 as f64 / tick_rate
    }
}
