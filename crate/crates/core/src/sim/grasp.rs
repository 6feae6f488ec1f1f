use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vehicle::VehicleState;
use crate::camera::PrimitiveShape;
use crate::mission::GripperGeometry;
use crate::se3::{Pose, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureMode {
    None,
    HorizontalMiss,
    ClosedAboveObject,
    ObjectShifted,
}

impl FailureMode {
    pub fn name(&self) -> &'static str {
        match self {
            FailureMode::None => "none",
            FailureMode::HorizontalMiss => "horizontal_miss",
            FailureMode::ClosedAboveObject => "closed_above_object",
            FailureMode::ObjectShifted => "object_shifted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspOutcome {
    pub success: bool,
    /// Palm center to true object centroid, horizontal, m.
    pub horizontal_error: f64,
    /// Fingertip depth below the object's top, m. Negative means the
    /// fingers closed above the object.
    pub vertical_error: f64,
    pub failure_mode: FailureMode,
}

/// Palm center for a vehicle pose; the gripper hangs straight down.
pub fn palm_position(pose: &Pose, g: &GripperGeometry) -> Vec3 {
    pose.translation + Vec3::DOWN * g.offset_down
}

/// Decides capture at the moment the fingers close.
///
/// Success needs the palm within `capture_radius` of the object's true
/// centroid horizontally and the fingertips between `min_wrap` below the top
/// and the base. `shift` is the accumulated downwash displacement: a miss
/// that would have been a capture at the unshifted position counts as
/// `ObjectShifted`.
pub fn evaluate_grasp(
    vehicle: &VehicleState,
    target: &PrimitiveShape,
    shift: Vec3,
    g: &GripperGeometry,
) -> GraspOutcome {
    let palm = palm_position(&vehicle.true_pose, g);
    let centroid = target.center();
    let horizontal_error = palm.horizontal_distance(centroid);
    let (top_z, base_z) = target.vertical_extent();
    let tips_z = palm.z + g.finger_length;
    let vertical_error = tips_z - top_z;
    let failure_mode = if horizontal_error > g.capture_radius {
        if palm.horizontal_distance(centroid - shift) <= g.capture_radius {
            FailureMode::ObjectShifted
        } else {
            FailureMode::HorizontalMiss
        }
    } else if vertical_error < g.min_wrap || tips_z > base_z {
        // Fingertips below the base cannot happen above the ground plane;
        // treat it as not wrapping the object either way.
        FailureMode::ClosedAboveObject
    } else {
        FailureMode::None
    };
    GraspOutcome {
        success: failure_mode == FailureMode::None,
        horizontal_error,
        vertical_error,
        failure_mode,
    }
}

/// Rotor downwash pushing light objects away from beneath the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownwashParams {
    /// Push speed is `gain / (height * mass_kg)`, m/s.
    pub gain: f64,
    /// Horizontal radius of the affected cone, m.
    pub cone_radius: f64,
    /// Vehicle height above the object top below which the push starts, m.
    pub activation_height: f64,
    /// Height floor in the push formula, m.
    pub min_height: f64,
    /// Push speed cap, m/s.
    pub max_speed: f64,
    /// Total displacement cap, m.
    pub max_total: f64,
}

impl Default for DownwashParams {
    fn default() -> Self {
        DownwashParams {
            gain: 4e-4,
            cone_radius: 0.25,
            activation_height: 0.6,
            min_height: 0.05,
            max_speed: 0.05,
            max_total: 0.1,
        }
    }
}

impl DownwashParams {
    pub const NONE: DownwashParams = DownwashParams {
        gain: 0.0,
        cone_radius: 0.0,
        activation_height: 0.0,
        min_height: 0.05,
        max_speed: 0.0,
        max_total: 0.0,
    };

    pub fn validate(&self) -> Result<(), String> {
        let v = [self.gain, self.cone_radius, self.activation_height, self.max_speed, self.max_total];
        if v.iter().all(|x| x.is_finite() && *x >= 0.0) && self.min_height > 0.0 {
            Ok(())
        } else {
            Err("downwash parameters must be non-negative with a positive min_height".into())
        }
    }
}

/// Moves `target` by one tick of downwash. `shift` accumulates the total
/// displacement and is capped at `max_total`. When the vehicle is directly
/// overhead the push direction is drawn from `rng`.
#[allow(clippy::too_many_arguments)]
pub fn apply_downwash(
    target: &PrimitiveShape,
    mass_g: f64,
    high_friction: bool,
    vehicle: &VehicleState,
    params: &DownwashParams,
    dt: f64,
    shift: &mut Vec3,
    rng: &mut ChaCha8Rng,
) -> PrimitiveShape {
    if high_friction || params.gain == 0.0 || vehicle.payload.is_some() {
        return *target;
    }
    let body = vehicle.true_pose.translation;
    let c = target.center();
    let (top_z, _) = target.vertical_extent();
    let height = top_z - body.z;
    let offset = (c - body).horizontal();
    if height < 0.0 || height > params.activation_height || offset.norm() > params.cone_radius {
        return *target;
    }
    let dir = match offset.try_normalize() {
        Some(d) => d,
        None => {
            let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            Vec3::new(a.cos(), a.sin(), 0.0)
        }
    };
    let speed = (params.gain / (height.max(params.min_height) * mass_g * 1e-3)).min(params.max_speed);
    let room = (params.max_total - shift.norm()).max(0.0);
    let step = (speed * dt).min(room);
    let d = dir * step;
    *shift += d;
    let mut moved = *target;
    moved.pose.translation += d;
    moved
}
