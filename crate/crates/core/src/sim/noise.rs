use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use super::vehicle::{step_vehicle, VehicleParams, VehicleState};
use crate::eval::{TrajSample, Trajectory};
use crate::mission::{GripperCommand, Setpoint};
use crate::se3::{Pose, Timestamp, UnitQuaternion, Vec3};

/// Localization error model: accumulated random walk plus fresh jitter whose
/// magnitude grows with speed.
///
/// Jitter has a fixed length `sigma_jitter * (1 + k_v * |v|)` and a uniformly
/// random direction, so consecutive-read errors are bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Per-axis position random walk, m per sqrt(tick).
    pub sigma_walk: f64,
    /// Jitter length at rest, m.
    pub sigma_jitter: f64,
    /// Jitter growth per unit speed, 1/(m/s).
    pub k_v: f64,
    /// Yaw random walk, rad per sqrt(tick).
    pub sigma_yaw: f64,
    /// Mixed into the scenario seed for this stream.
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { sigma_walk: 3e-4, sigma_jitter: 0.018, k_v: 0.3, sigma_yaw: 1e-5, seed: 0 }
    }
}

impl NoiseModel {
    pub const NONE: NoiseModel =
        NoiseModel { sigma_walk: 0.0, sigma_jitter: 0.0, k_v: 0.0, sigma_yaw: 0.0, seed: 0 };

    pub fn validate(&self) -> Result<(), String> {
        let v = [self.sigma_walk, self.sigma_jitter, self.k_v, self.sigma_yaw];
        if v.iter().all(|x| x.is_finite() && *x >= 0.0) {
            Ok(())
        } else {
            Err("noise parameters must be finite and non-negative".into())
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_walk == 0.0 && self.sigma_jitter == 0.0 && self.sigma_yaw == 0.0
    }
}

/// Stateful noise stream for one run.
#[derive(Debug, Clone)]
pub struct SlamNoise {
    model: NoiseModel,
    rng: ChaCha8Rng,
    walk: Vec3,
    yaw_walk: f64,
}

impl SlamNoise {
    pub fn new(model: NoiseModel, seed: u64) -> Self {
        SlamNoise {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed ^ model.seed.rotate_left(32)),
            walk: Vec3::ZERO,
            yaw_walk: 0.0,
        }
    }

    pub fn walk(&self) -> Vec3 {
        self.walk
    }

    /// Advances the walk by one tick and returns the perturbed pose.
    pub fn sample(&mut self, true_pose: &Pose, velocity: Vec3) -> Pose {
        let m = self.model;
        if m.is_zero() {
            return *true_pose;
        }
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let mut g = || -> f64 { unit.sample(&mut self.rng) };
        self.walk += Vec3::new(g(), g(), g()) * m.sigma_walk;
        self.yaw_walk += g() * m.sigma_yaw;
        let dir: [f64; 3] = UnitSphere.sample(&mut self.rng);
        let jitter = Vec3::from_array(dir) * (m.sigma_jitter * (1.0 + m.k_v * velocity.norm()));
        Pose::new(
            UnitQuaternion::from_yaw(self.yaw_walk).mul(true_pose.rotation),
            true_pose.translation + self.walk + jitter,
        )
    }
}

/// Estimated pose for the vehicle's current truth; advances `noise`.
pub fn apply_slam_noise(true_pose: &Pose, s: &VehicleState, noise: &mut SlamNoise) -> Pose {
    noise.sample(true_pose, s.velocity)
}

/// Scripted flight used to calibrate [`NoiseModel`]: takeoff to 1.5 m, two
/// 4 m sweep lanes at 0.5 m/s, a fast descent to 0.3 m and a hover. Returns
/// `(reference, estimate)` sampled at `camera_rate`.
pub fn calibration_run(
    model: &NoiseModel,
    seed: u64,
    tick_rate: f64,
    camera_rate: f64,
) -> (Trajectory, Trajectory) {
    let legs: [(Vec3, f64); 5] = [
        (Vec3::new(0.0, 0.0, -1.5), 0.5),
        (Vec3::new(4.0, 0.0, -1.5), 0.5),
        (Vec3::new(4.0, 1.0, -1.5), 0.5),
        (Vec3::new(0.0, 1.0, -1.5), 0.5),
        (Vec3::new(0.0, 1.0, -0.3), 1.2),
    ];
    let dt = 1.0 / tick_rate;
    let mut s = VehicleState::at(Pose::IDENTITY);
    let mut noise = SlamNoise::new(*model, seed);
    let (mut reference, mut estimate) = (Vec::new(), Vec::new());
    let mut tick = 0u64;
    let mut record = |tick: u64, s: &VehicleState, est: Pose| {
        if is_camera_tick(tick, tick_rate, camera_rate) {
            let t = tick as f64 / tick_rate;
            reference.push(TrajSample { t, pose: s.true_pose });
            estimate.push(TrajSample { t, pose: est });
        }
    };
    let hover_ticks = (2.0 * tick_rate) as u64;
    for (i, &(goal, speed)) in legs.iter().enumerate() {
        let params = VehicleParams { v_max: speed, ..VehicleParams::default() };
        let yaw = if i == 3 { std::f64::consts::PI } else { 0.0 };
        let sp = Setpoint { position: goal, yaw, gripper: GripperCommand::Open, timestamp: Timestamp(0) };
        let mut settle = 0;
        while settle < hover_ticks / 4 || (i == legs.len() - 1 && settle < hover_ticks) {
            let est = apply_slam_noise(&s.true_pose, &s, &mut noise);
            record(tick, &s, est);
            s = step_vehicle(&s, &sp, &params, dt);
            if s.true_pose.translation.distance(goal) < 0.02 {
                settle += 1;
            }
            tick += 1;
        }
    }
    (Trajectory { samples: reference }, Trajectory { samples: estimate })
}

/// Nearest-tick camera schedule: frame `i` fires on tick `round(i * tick_rate / camera_rate)`.
pub fn is_camera_tick(tick: u64, tick_rate: f64, camera_rate: f64) -> bool {
    let ratio = tick_rate / camera_rate;
    let i = (tick as f64 / ratio).round();
    (i * ratio).round() as u64 == tick
}

/// Draws a fresh sub-seed from a seeded stream.
pub(crate) fn next_seed(rng: &mut ChaCha8Rng) -> u64 {
    rng.random()
}
