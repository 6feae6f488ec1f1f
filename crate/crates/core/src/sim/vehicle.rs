use serde::{Deserialize, Serialize};

use crate::mission::{GripperCommand, Setpoint};
use crate::se3::{wrap_angle, Pose, UnitQuaternion, Vec3};

/// First-order setpoint tracking standing in for the flight controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleParams {
    /// Position gain, 1/s.
    pub kp: f64,
    /// Speed limit, m/s.
    pub v_max: f64,
    /// Yaw gain, 1/s.
    pub yaw_kp: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams { kp: 3.0, v_max: 1.0, yaw_kp: 4.0 }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), String> {
        if [self.kp, self.v_max, self.yaw_kp].iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err("vehicle gains and speed limit must be positive".into())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub true_pose: Pose,
    pub velocity: Vec3,
    /// Localization output the autonomy stack sees.
    pub estimated_pose: Pose,
    pub gripper: GripperCommand,
    /// Index of the carried object.
    pub payload: Option<usize>,
}

impl VehicleState {
    pub fn at(pose: Pose) -> Self {
        VehicleState {
            true_pose: pose,
            velocity: Vec3::ZERO,
            estimated_pose: pose,
            gripper: GripperCommand::Open,
            payload: None,
        }
    }
}

/// One explicit-Euler tick: `v = clamp(kp * (sp - p), v_max)`, yaw follows
/// with a first-order lag. Roll and pitch stay level.
pub fn step_vehicle(s: &VehicleState, sp: &Setpoint, params: &VehicleParams, dt: f64) -> VehicleState {
    debug_assert!(dt > 0.0);
    let p = s.true_pose.translation;
    let mut v = (sp.position - p) * params.kp;
    let speed = v.norm();
    if speed > params.v_max {
        v = v * (params.v_max / speed);
    }
    let yaw = s.true_pose.rotation.yaw();
    let new_yaw = wrap_angle(yaw + wrap_angle(sp.yaw - yaw) * (params.yaw_kp * dt).min(1.0));
    VehicleState {
        true_pose: Pose::new(UnitQuaternion::from_yaw(new_yaw), p + v * dt),
        velocity: v,
        estimated_pose: s.estimated_pose,
        gripper: sp.gripper,
        payload: s.payload,
    }
}
