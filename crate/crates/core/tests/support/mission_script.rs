//! Scripted environment for driving a mission through chosen edges.

#![allow(dead_code)]

use std::collections::HashSet;

use aerograsp::camera::CameraIntrinsics;
use aerograsp::mission::*;
use aerograsp::se3::{Pose, Timestamp, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use AbortReason as A;
use MissionState as S;

pub fn small_cfg() -> MissionConfig {
    MissionConfig {
        search_area: SearchArea { north_min: 0.0, north_max: 2.0, east_min: 0.0, east_max: 2.0 },
        lane_spacing: Some(1.0),
        drop_point: Vec3::new(0.0, -0.5, -1.0),
        state_timeout_ticks: 3000,
        ..Default::default()
    }
}

/// Scripted environment: an ideal vehicle that sits on its setpoint and a
/// fused target that updates every 7 ticks while enabled.
pub struct Script {
    pub m: Mission,
    pub tick: u64,
    pub pose: Vec3,
    pub follow: bool,
    pub target: Option<Vec3>,
    pub spread: f64,
    pub gripper_works: bool,
    pub frames: usize,
    pub last_fused: Option<FusedInfo>,
    pub edges: Vec<(MissionState, MissionState)>,
    pub gripper_log: Vec<GripperCommand>,
}

impl Script {
    pub fn new(cfg: MissionConfig) -> Self {
        let m = Mission::new(cfg, &CameraIntrinsics::default()).unwrap();
        Script {
            m,
            tick: 0,
            pose: Vec3::ZERO,
            follow: true,
            target: None,
            spread: 0.0,
            gripper_works: true,
            frames: 0,
            last_fused: None,
            edges: Vec::new(),
            gripper_log: Vec::new(),
        }
    }

    pub fn step(&mut self) {
        if let Some(p) = self.target {
            if self.tick.is_multiple_of(7) {
                let k = (self.tick / 7) as f64;
                let wobble = Vec3::new(self.spread * (k * 1.3).sin(), self.spread * (k * 0.7).cos(), 0.0);
                self.last_fused = Some(FusedInfo {
                    point: p + wobble,
                    closing_axis: Vec3::EAST,
                    updated: Timestamp(self.tick),
                });
                if self.m.state.is_tracking() {
                    self.frames += 1;
                }
            }
        }
        let closed = self.gripper_works
            && self.m.ctx.last_setpoint.is_some_and(|s| s.gripper == GripperCommand::Closed);
        let inp = MissionInputs {
            pose_estimate: Pose::from_translation(self.pose),
            fused: self.last_fused,
            gripper: if closed { GripperFeedback::Closed } else { GripperFeedback::Open },
            tick: Timestamp(self.tick),
            frames_used: self.frames,
        };
        let before = self.m.state;
        let sp = self.m.step(&inp).unwrap();
        if self.m.state != before {
            self.edges.push((before, self.m.state));
        }
        if self.gripper_log.last() != Some(&sp.gripper) {
            self.gripper_log.push(sp.gripper);
        }
        if self.follow {
            self.pose = sp.position;
        }
        self.tick += 1;
    }

    pub fn run_until(&mut self, pred: impl Fn(&MissionState) -> bool, max: u64) -> bool {
        for _ in 0..max {
            if pred(&self.m.state) {
                return true;
            }
            self.step();
        }
        pred(&self.m.state)
    }

    pub fn reach(&mut self, s: MissionState) {
        assert!(self.run_until(|x| *x == s, 40_000), "never reached {s:?}; at {:?}", self.m.state);
    }
}

pub fn target() -> Vec3 {
    Vec3::new(1.0, 1.0, -0.1)
}

/// Drives scripted vectors through every edge of the transition graph.
pub fn exercise_every_edge() {
    let mut seen: HashSet<(MissionState, MissionState)> = HashSet::new();
    let mut record = |s: &Script| {
        for e in &s.edges {
            assert!(TRANSITIONS.contains(e), "undeclared edge {e:?}");
            seen.insert(*e);
        }
    };

    let mut s = Script::new(small_cfg());
    s.target = Some(target());
    s.reach(S::Done);
    record(&s);

    // Stuck vehicle: timeouts in each motion state.
    for stuck_in in [S::Takeoff, S::Lift, S::Transport, S::Land] {
        let mut s = Script::new(small_cfg());
        s.target = Some(target());
        s.reach(stuck_in);
        s.follow = false;
        s.reach(S::Abort(A::Timeout));
        record(&s);
    }
    let mut s = Script::new(small_cfg());
    s.target = Some(target());
    s.gripper_works = false;
    s.reach(S::Abort(A::Timeout));
    assert_eq!(s.edges.last().unwrap().0, S::CloseGripper);
    record(&s);

    // Lost target in each tracking state, with and without retries left.
    for lose_in in [S::Approach, S::Refine, S::Descend] {
        for retries in [1, 0] {
            let mut s = Script::new(MissionConfig { retry_limit: retries, ..small_cfg() });
            s.target = Some(target());
            s.reach(lose_in);
            s.target = None;
            s.follow = lose_in != S::Descend;
            let want = if retries == 0 { S::Abort(A::Retries) } else { S::Search };
            s.reach(want);
            record(&s);
        }
    }

    // Sweep ends with no target and no retries left.
    let mut s = Script::new(MissionConfig { retry_limit: 0, ..small_cfg() });
    s.reach(S::Abort(A::Retries));
    assert_eq!(s.edges.last().unwrap().0, S::Search);
    record(&s);

    // Frame budget: 400 frames consumed in each tracking state.
    for exhaust_in in [S::Search, S::Approach, S::Refine, S::Descend] {
        let mut s = Script::new(small_cfg());
        if exhaust_in != S::Search {
            s.target = Some(target());
            s.spread = 0.01;
        }
        s.reach(exhaust_in);
        s.frames = 399;
        s.step();
        assert_ne!(s.m.state, S::Abort(A::FrameBudget), "399 frames are within budget");
        s.frames = 400;
        s.step();
        assert_eq!(s.m.state, S::Abort(A::FrameBudget));
        assert_eq!(*s.edges.last().unwrap(), (exhaust_in, S::Abort(A::FrameBudget)));
        record(&s);
    }

    let missing: Vec<_> = TRANSITIONS.iter().filter(|e| !seen.contains(e)).collect();
    assert!(missing.is_empty(), "edges never exercised: {missing:?}");
}

/// Random input sequences; every state change must be a declared edge and
/// terminal states must stay put.
pub fn fuzz_transitions(sequences: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..sequences {
        let cfg = MissionConfig {
            retry_limit: rng.random_range(0..3),
            frame_budget: rng.random_range(1..500),
            state_timeout_ticks: rng.random_range(10..3000),
            ..small_cfg()
        };
        let mut m = Mission::new(cfg, &CameraIntrinsics::default()).unwrap();
        let mut tick = 0u64;
        let mut frames = 0usize;
        let mut pose = Vec3::ZERO;
        let mut fused: Option<FusedInfo> = None;
        for _ in 0..2000 {
            tick += rng.random_range(1..20);
            if rng.random_bool(0.3) {
                frames += rng.random_range(0..5);
            }
            if rng.random_bool(0.1) {
                frames = 0;
            }
            match rng.random_range(0..4) {
                0 => pose = m.ctx.last_setpoint.map_or(pose, |s| s.position),
                1 => pose = Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-2.0..0.5)),
                _ => {}
            }
            if rng.random_bool(0.2) {
                fused = if rng.random_bool(0.7) {
                    Some(FusedInfo {
                        point: Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-0.5..0.0)),
                        closing_axis: Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0),
                        updated: Timestamp(tick.saturating_sub(rng.random_range(0..200))),
                    })
                } else {
                    None
                };
            }
            let inp = MissionInputs {
                pose_estimate: Pose::from_translation(pose),
                fused,
                gripper: if rng.random_bool(0.5) { GripperFeedback::Closed } else { GripperFeedback::Open },
                tick: Timestamp(tick),
                frames_used: frames,
            };
            let before = m.state;
            let sp = m.step(&inp).expect("step is total on valid inputs");
            assert!(sp.position.is_finite() && sp.yaw.is_finite());
            assert!(sp.yaw > -std::f64::consts::PI && sp.yaw <= std::f64::consts::PI);
            if m.state != before {
                assert!(TRANSITIONS.contains(&(before, m.state)), "{before:?} -> {:?}", m.state);
            }
            if before.is_terminal() {
                assert_eq!(m.state, before);
            }
        }
    }
}
