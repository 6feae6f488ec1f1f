//! Deterministic logical-clock simulation: kinematic vehicle, localization
//! noise, rendered perception, gripper outcome and downwash.

mod batch;
mod grasp;
mod noise;
mod runner;
mod scenario;
mod vehicle;

use thiserror::Error;

pub use batch::{batch_run, BatchReport, BatchRow};
pub use grasp::{apply_downwash, evaluate_grasp, palm_position, DownwashParams, FailureMode, GraspOutcome};
pub use noise::{apply_slam_noise, calibration_run, is_camera_tick, NoiseModel, SlamNoise};
pub use runner::{run_scenario, RunLog, RunOutcome, TickRecord};
pub use scenario::{Archetype, CameraMount, FusionParams, MaskCorruption, ObjectSpec, ScenarioConfig};
pub use vehicle::{step_vehicle, VehicleParams, VehicleState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("internal error: {0}")]
    Internal(String),
}
