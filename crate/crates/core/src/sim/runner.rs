use std::collections::VecDeque;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::grasp::{apply_downwash, evaluate_grasp, GraspOutcome};
use super::noise::{apply_slam_noise, is_camera_tick, next_seed, SlamNoise};
use super::scenario::ScenarioConfig;
use super::vehicle::{step_vehicle, VehicleState};
use super::SimError;
use crate::camera::render::{cast_rays, depth_from_hits, mask_from_hits, shape_roi};
use crate::camera::{corrupt_mask, PrimitiveShape};
use crate::eval::{tum, TrajSample, Trajectory};
use crate::fusion::{FusionBuffer, TargetEstimate};
use crate::mission::{
    FusedInfo, GripperCommand, GripperFeedback, Mission, MissionInputs, MissionState, Setpoint,
};
use crate::planner::frame_target_estimate;
use crate::se3::{Pose, Timestamp, Vec3};

/// One line of `mission.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub state: MissionState,
    pub setpoint: Setpoint,
    pub fused: Option<FusedInfo>,
    pub truth: Pose,
    pub estimate: Pose,
    pub frames_used: usize,
    pub attempt: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub object: String,
    pub seed: u64,
    pub final_state: MissionState,
    /// Mission finished and the object was captured.
    pub success: bool,
    /// Set when the fingers closed.
    pub grasp: Option<GraspOutcome>,
    /// Failure label: a grasp failure mode, an abort reason or "tick_limit".
    pub failure: Option<String>,
    pub ticks: u64,
    pub attempts: u32,
    /// Segmentation frames consumed in each attempt.
    pub frames_per_attempt: Vec<usize>,
    pub camera_frames: usize,
    /// Frames where the target was localized.
    pub estimates: usize,
    /// Final true object centroid.
    pub object_centroid: Vec3,
    /// Total downwash displacement of the target.
    pub downwash_shift: Vec3,
}

/// Full trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    /// True poses at camera frames.
    pub truth: Trajectory,
    /// Estimated poses at the same frames.
    pub estimate: Trajectory,
    pub trace: Vec<TickRecord>,
    pub outcome: RunOutcome,
}

impl RunLog {
    /// File names and contents of the log directory.
    pub fn files(&self) -> Vec<(&'static str, Vec<u8>)> {
        let mut jsonl = String::with_capacity(self.trace.len() * 400);
        for r in &self.trace {
            jsonl.push_str(&serde_json::to_string(r).expect("record serializes"));
            jsonl.push('\n');
        }
        let mut outcome = serde_json::to_string_pretty(&self.outcome).expect("outcome serializes");
        outcome.push('\n');
        vec![
            ("truth.tum", tum::to_string(&self.truth).into_bytes()),
            ("estimate.tum", tum::to_string(&self.estimate).into_bytes()),
            ("mission.jsonl", jsonl.into_bytes()),
            ("outcome.json", outcome.into_bytes()),
        ]
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<(), SimError> {
        let dir = dir.as_ref();
        let io = |e: std::io::Error| SimError::Io(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        for (name, bytes) in self.files() {
            std::fs::write(dir.join(name), bytes).map_err(io)?;
        }
        Ok(())
    }
}

/// Per-frame plan details kept next to the fusion buffer.
#[derive(Debug, Clone, Copy)]
struct FrameInfo {
    estimate: TargetEstimate,
    closing_axis: Vec3,
}

struct Tracker {
    buffer: FusionBuffer,
    frames: VecDeque<FrameInfo>,
    window: usize,
    tau: f64,
}

impl Tracker {
    fn new(tau: f64, window: usize) -> Self {
        Tracker {
            buffer: FusionBuffer::new(tau, window).expect("validated fusion params"),
            frames: VecDeque::new(),
            window,
            tau,
        }
    }

    fn clear(&mut self) {
        self.buffer.clear();
        self.frames.clear();
    }

    fn push(&mut self, f: FrameInfo, tick: Timestamp) -> Option<FusedInfo> {
        self.buffer.push(f.estimate);
        self.frames.push_back(f);
        if self.frames.len() > self.window {
            self.frames.pop_front();
        }
        let fused = self.buffer.fuse().ok()?;
        // Plan details from the newest frame that agrees with the fused point.
        let best = self
            .frames
            .iter()
            .rev()
            .find(|x| x.estimate.point.distance(fused.point) <= self.tau)
            .unwrap_or(&f);
        Some(FusedInfo { point: fused.point, closing_axis: best.closing_axis, updated: tick })
    }
}

/// Runs one mission on the logical clock. Per tick: localization noise,
/// camera work on camera ticks, gripper actuation, mission step, downwash and
/// vehicle motion.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunLog, SimError> {
    cfg.validate()?;
    let k = cfg.camera;
    let dt = 1.0 / cfg.tick_rate;
    let mount = cfg.mount.pose();
    let target_idx = cfg.target;
    let target_spec = &cfg.objects[target_idx];
    let mut shapes: Vec<PrimitiveShape> = cfg.objects.iter().map(|o| o.shape()).collect();

    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut noise = SlamNoise::new(cfg.noise, next_seed(&mut master));
    let mut depth_rng = ChaCha8Rng::seed_from_u64(next_seed(&mut master));
    let mut mask_rng = ChaCha8Rng::seed_from_u64(next_seed(&mut master));
    let mut wash_rng = ChaCha8Rng::seed_from_u64(next_seed(&mut master));

    let mut mission =
        Mission::new(cfg.mission.clone(), &k).map_err(|e| SimError::Config(e.to_string()))?;
    let home = Pose::from_translation(Vec3::new(0.0, 0.0, cfg.ground_z));
    let mut vehicle = VehicleState::at(home);
    let mut tracker = Tracker::new(cfg.fusion.tau, cfg.fusion.window);
    let mut fused: Option<FusedInfo> = None;
    let mut designated = false;
    let mut attempt = mission.ctx.attempts;
    let mut frames_per_attempt = vec![0usize];
    let mut camera_frames = 0usize;
    let mut estimates = 0usize;
    let mut closed_since: Option<u64> = None;
    let mut grasp: Option<GraspOutcome> = None;
    let mut shift = Vec3::ZERO;
    let close_ticks = (cfg.gripper_close_s * cfg.tick_rate).round() as u64;

    let (mut truth_tr, mut est_tr) = (Vec::new(), Vec::new());
    let mut trace = Vec::new();
    let mut tick = 0u64;

    while tick < cfg.max_ticks && !mission.state.is_terminal() {
        let ts = Timestamp(tick);
        vehicle.estimated_pose = apply_slam_noise(&vehicle.true_pose, &vehicle, &mut noise);
        if mission.ctx.attempts != attempt {
            attempt = mission.ctx.attempts;
            frames_per_attempt.push(0);
            designated = false;
            tracker.clear();
            fused = None;
        }

        let camera_tick = is_camera_tick(tick, cfg.tick_rate, cfg.camera_rate);
        if camera_tick {
            camera_frames += 1;
            let t = tick as f64 / cfg.tick_rate;
            truth_tr.push(TrajSample { t, pose: vehicle.true_pose });
            est_tr.push(TrajSample { t, pose: vehicle.estimated_pose });
            let tracking = mission.state.is_tracking() && vehicle.payload.is_none();
            if tracking && tick >= cfg.designate_after_tick {
                let cam_true = vehicle.true_pose.compose(&mount);
                let cam_est = vehicle.estimated_pose.compose(&mount);
                let seen = shape_roi(&shapes[target_idx], &k, &cam_true).map(|roi| {
                    let mut hits = cast_rays(&shapes, cfg.ground_z, &k, &cam_true, roi);
                    cfg.depth_noise.apply(&mut hits, next_seed(&mut depth_rng));
                    let mut mask = mask_from_hits(&hits, target_idx, ts);
                    let m = cfg.mask;
                    if m.erode_px > 0 || m.dilate_px > 0 || m.flip_rate > 0.0 {
                        mask = corrupt_mask(&mask, m.erode_px, m.dilate_px, m.flip_rate, next_seed(&mut mask_rng));
                    }
                    (depth_from_hits(&hits, &k, ts), mask)
                });
                if !designated {
                    // The operator picks the target once enough of it is in view.
                    designated = seen.as_ref().is_some_and(|(_, m)| m.count() >= cfg.planner.min_points);
                }
                if designated {
                    *frames_per_attempt.last_mut().expect("one entry per attempt") += 1;
                    if let Some((depth, mask)) = seen {
                        if let Ok((p, plan)) = frame_target_estimate(&depth, &mask, &k, &cam_est, &cfg.planner) {
                            estimates += 1;
                            let info = FrameInfo {
                                estimate: TargetEstimate { point: p, timestamp: ts },
                                closing_axis: plan.closing_axis,
                            };
                            if let Some(f) = tracker.push(info, ts) {
                                fused = Some(f);
                            }
                        }
                    }
                }
            }
        }

        // Gripper actuation and the grasp decision when the fingers close.
        let commanded_closed = vehicle.gripper == GripperCommand::Closed;
        let feedback = match (commanded_closed, closed_since) {
            (true, Some(t0)) if tick - t0 >= close_ticks => GripperFeedback::Closed,
            _ => GripperFeedback::Open,
        };
        if feedback == GripperFeedback::Closed && grasp.is_none() {
            let g = evaluate_grasp(&vehicle, &shapes[target_idx], shift, &cfg.mission.gripper);
            if g.success {
                vehicle.payload = Some(target_idx);
            }
            grasp = Some(g);
        }

        let inputs = MissionInputs {
            pose_estimate: vehicle.estimated_pose,
            fused,
            gripper: feedback,
            tick: ts,
            frames_used: *frames_per_attempt.last().expect("one entry per attempt"),
        };
        let sp = mission.step(&inputs).map_err(|e| SimError::Internal(e.to_string()))?;

        trace.push(TickRecord {
            tick,
            state: mission.state,
            setpoint: sp,
            fused,
            truth: vehicle.true_pose,
            estimate: vehicle.estimated_pose,
            frames_used: inputs.frames_used,
            attempt,
        });

        shapes[target_idx] = apply_downwash(
            &shapes[target_idx],
            target_spec.mass_g,
            target_spec.high_friction,
            &vehicle,
            &cfg.downwash,
            dt,
            &mut shift,
            &mut wash_rng,
        );

        // Track the setpoint in the estimated frame.
        let correction = vehicle.true_pose.translation - vehicle.estimated_pose.translation;
        let tracked = Setpoint { position: sp.position + correction, ..sp };
        let was_closed = vehicle.gripper == GripperCommand::Closed;
        vehicle = step_vehicle(&vehicle, &tracked, &cfg.vehicle, dt);
        match (was_closed, vehicle.gripper == GripperCommand::Closed) {
            (false, true) => closed_since = Some(tick + 1),
            (_, false) => closed_since = None,
            _ => {}
        }
        if let Some(i) = vehicle.payload {
            if vehicle.gripper == GripperCommand::Open {
                vehicle.payload = None;
                // Released: the object drops straight down onto the ground.
                let (_, base) = shapes[i].vertical_extent();
                shapes[i].pose.translation.z += cfg.ground_z - base;
            } else {
                let palm = vehicle.true_pose.translation + Vec3::DOWN * cfg.mission.gripper.offset_down;
                shapes[i].pose.translation = palm;
            }
        }
        tick += 1;
    }

    let final_state = mission.state;
    let captured = grasp.is_some_and(|g| g.success);
    let success = final_state == MissionState::Done && captured;
    let failure = if success {
        None
    } else if let Some(g) = grasp.filter(|g| !g.success) {
        Some(g.failure_mode.name().to_string())
    } else {
        Some(match final_state {
            MissionState::Abort(r) => format!("abort_{}", r.name()),
            s if !s.is_terminal() => "tick_limit".to_string(),
            s => format!("ended_{}", s.name()),
        })
    };
    let object_centroid = shapes[target_idx].center();
    Ok(RunLog {
        truth: Trajectory { samples: truth_tr },
        estimate: Trajectory { samples: est_tr },
        trace,
        outcome: RunOutcome {
            object: target_spec.name.clone(),
            seed: cfg.seed,
            final_state,
            success,
            grasp,
            failure,
            ticks: tick,
            attempts: mission.ctx.attempts,
            frames_per_attempt,
            camera_frames,
            estimates,
            object_centroid,
            downwash_shift: shift,
        },
    })
}
