//! Mission state machine and setpoint generation: takeoff, boustrophedon
//! search, approach, refine, descend, grasp, lift, transport, drop, land.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::CameraIntrinsics;
use crate::se3::{wrap_angle, Pose, Timestamp, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MissionError {
    #[error("invalid mission config: {0}")]
    Config(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    FrameBudget,
    Retries,
    Timeout,
}

impl AbortReason {
    pub fn name(&self) -> &'static str {
        match self {
            AbortReason::FrameBudget => "frame_budget",
            AbortReason::Retries => "retries",
            AbortReason::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state", content = "reason")]
pub enum MissionState {
    Init,
    Takeoff,
    Search,
    Approach,
    Refine,
    Descend,
    CloseGripper,
    Lift,
    Transport,
    Drop,
    Land,
    Done,
    Abort(AbortReason),
}

impl MissionState {
    pub fn is_terminal(&self) -> bool {
        matches!(self, MissionState::Done | MissionState::Abort(_))
    }

    /// States in which segmentation frames are consumed.
    pub fn is_tracking(&self) -> bool {
        matches!(
            self,
            MissionState::Search | MissionState::Approach | MissionState::Refine | MissionState::Descend
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            MissionState::Init => "init",
            MissionState::Takeoff => "takeoff",
            MissionState::Search => "search",
            MissionState::Approach => "approach",
            MissionState::Refine => "refine",
            MissionState::Descend => "descend",
            MissionState::CloseGripper => "close_gripper",
            MissionState::Lift => "lift",
            MissionState::Transport => "transport",
            MissionState::Drop => "drop",
            MissionState::Land => "land",
            MissionState::Done => "done",
            MissionState::Abort(AbortReason::FrameBudget) => "abort_frame_budget",
            MissionState::Abort(AbortReason::Retries) => "abort_retries",
            MissionState::Abort(AbortReason::Timeout) => "abort_timeout",
        }
    }
}

/// Every edge `step` may take, besides staying in the same state.
pub const TRANSITIONS: &[(MissionState, MissionState)] = {
    use AbortReason::*;
    use MissionState::*;
    &[
        (Init, Takeoff),
        (Takeoff, Search),
        (Takeoff, Abort(Timeout)),
        (Search, Approach),
        (Search, Abort(Retries)),
        (Search, Abort(FrameBudget)),
        (Approach, Refine),
        (Approach, Search),
        (Approach, Abort(Retries)),
        (Approach, Abort(FrameBudget)),
        (Refine, Descend),
        (Refine, Search),
        (Refine, Abort(Retries)),
        (Refine, Abort(FrameBudget)),
        (Descend, CloseGripper),
        (Descend, Search),
        (Descend, Abort(Retries)),
        (Descend, Abort(FrameBudget)),
        (CloseGripper, Lift),
        (CloseGripper, Abort(Timeout)),
        (Lift, Transport),
        (Lift, Abort(Timeout)),
        (Transport, Drop),
        (Transport, Abort(Timeout)),
        (Drop, Land),
        (Land, Done),
        (Land, Abort(Timeout)),
    ]
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GripperCommand {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setpoint {
    pub position: Vec3,
    pub yaw: f64,
    pub gripper: GripperCommand,
    pub timestamp: Timestamp,
}

/// Axis-aligned search rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchArea {
    pub north_min: f64,
    pub north_max: f64,
    pub east_min: f64,
    pub east_max: f64,
}

impl SearchArea {
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.north_min && p.x <= self.north_max && p.y >= self.east_min && p.y <= self.east_max
    }
}

/// Gripper hanging below the body center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GripperGeometry {
    /// Palm distance below the body origin.
    pub offset_down: f64,
    /// Fingertip distance below the palm.
    pub finger_length: f64,
    /// Largest horizontal palm-to-centroid offset the fingers still capture.
    pub capture_radius: f64,
    /// Fingertips must close at least this far below the object's top.
    pub min_wrap: f64,
    /// Fingertips are kept this far above the object's base.
    pub ground_clearance: f64,
}

impl Default for GripperGeometry {
    fn default() -> Self {
        GripperGeometry {
            offset_down: 0.15,
            finger_length: 0.09,
            capture_radius: 0.06,
            min_wrap: 0.02,
            ground_clearance: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionConfig {
    pub search_area: SearchArea,
    /// Height above the takeoff point, meters.
    pub search_altitude: f64,
    pub min_search_altitude: f64,
    /// Derived from the camera footprint when unset.
    pub lane_spacing: Option<f64>,
    pub cruise_speed: f64,
    /// Body height above the fused target while refining.
    pub refine_hover_height: f64,
    pub descent_speed: f64,
    /// Palm height above the fused target when the gripper closes.
    pub grasp_close_height: f64,
    pub drop_point: Vec3,
    pub retry_limit: u32,
    pub frame_budget: usize,
    pub refine_updates: usize,
    pub refine_spread: f64,
    pub approach_radius: f64,
    pub waypoint_radius: f64,
    /// Estimate-to-goal distance accepted once the descent setpoint has
    /// reached its goal.
    pub arrive_tolerance: f64,
    /// Hold time at the descent goal before closing, letting the vehicle
    /// catch up with its setpoint.
    pub settle_s: f64,
    pub close_dwell_s: f64,
    pub drop_dwell_s: f64,
    /// Fused targets older than this are ignored.
    pub stale_ticks: u64,
    pub lost_timeout_ticks: u64,
    pub descend_lost_timeout_ticks: u64,
    pub state_timeout_ticks: u64,
    pub tick_rate: f64,
    pub gripper: GripperGeometry,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            search_area: SearchArea { north_min: 0.0, north_max: 4.0, east_min: 0.0, east_max: 4.0 },
            search_altitude: 1.5,
            min_search_altitude: 0.8,
            lane_spacing: None,
            cruise_speed: 0.5,
            refine_hover_height: 0.7,
            descent_speed: 0.25,
            grasp_close_height: 0.05,
            drop_point: Vec3::new(0.0, -1.0, -1.0),
            retry_limit: 3,
            frame_budget: 400,
            refine_updates: 10,
            refine_spread: 0.03,
            approach_radius: 0.15,
            waypoint_radius: 0.1,
            arrive_tolerance: 0.04,
            settle_s: 0.5,
            close_dwell_s: 0.5,
            drop_dwell_s: 0.5,
            stale_ticks: 100,
            lost_timeout_ticks: 400,
            descend_lost_timeout_ticks: 1000,
            state_timeout_ticks: 12_000,
            tick_rate: 200.0,
            gripper: GripperGeometry::default(),
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), MissionError> {
        let bad = |m: &str| Err(MissionError::Config(m.to_string()));
        let a = &self.search_area;
        if !(a.north_max > a.north_min && a.east_max > a.east_min)
            || ![a.north_min, a.north_max, a.east_min, a.east_max].iter().all(|v| v.is_finite())
        {
            return bad("search_area must be a non-degenerate rectangle");
        }
        if !(self.search_altitude >= self.min_search_altitude && self.min_search_altitude > 0.0) {
            return bad("search_altitude is below min_search_altitude");
        }
        if let Some(s) = self.lane_spacing {
            if !(s > 0.0 && s.is_finite()) {
                return bad("lane_spacing must be positive");
            }
        }
        let pos = [
            self.cruise_speed,
            self.refine_hover_height,
            self.descent_speed,
            self.grasp_close_height,
            self.refine_spread,
            self.approach_radius,
            self.waypoint_radius,
            self.arrive_tolerance,
            self.tick_rate,
        ];
        if !pos.iter().all(|v| v.is_finite() && *v > 0.0) {
            return bad("speeds, heights, radii and tick_rate must be positive");
        }
        if !(self.close_dwell_s >= 0.0 && self.drop_dwell_s >= 0.0 && self.settle_s >= 0.0) {
            return bad("dwell times must be non-negative");
        }
        if self.frame_budget == 0 || self.refine_updates == 0 {
            return bad("frame_budget and refine_updates must be positive");
        }
        if !self.drop_point.is_finite() {
            return bad("drop_point must be finite");
        }
        let g = &self.gripper;
        if ![g.offset_down, g.finger_length, g.capture_radius].iter().all(|v| *v > 0.0)
            || g.min_wrap < 0.0
            || g.ground_clearance < 0.0
        {
            return bad("gripper geometry must be positive");
        }
        Ok(())
    }

    fn ticks(&self, seconds: f64) -> u64 {
        (seconds * self.tick_rate).round() as u64
    }
}

/// Serpentine sweep over the search rectangle. Lanes run north-south and
/// step east; consecutive lanes alternate direction. Without an explicit
/// spacing, lanes are 0.7 camera footprints apart.
pub fn generate_search_pattern(
    cfg: &MissionConfig,
    k: &CameraIntrinsics,
) -> Result<Vec<Vec3>, MissionError> {
    cfg.validate()?;
    let spacing = cfg.lane_spacing.unwrap_or(0.7 * k.footprint_width(cfg.search_altitude));
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(MissionError::Config("lane spacing must be positive".into()));
    }
    let a = &cfg.search_area;
    let width = a.east_max - a.east_min;
    let lanes: Vec<f64> = if width < spacing {
        vec![0.5 * (a.east_min + a.east_max)]
    } else {
        let n = (width / spacing - 1e-9).ceil() as usize + 1;
        (0..n).map(|i| a.east_min + width * i as f64 / (n - 1) as f64).collect()
    };
    let z = -cfg.search_altitude;
    let mut wps = Vec::with_capacity(2 * lanes.len());
    for (i, &e) in lanes.iter().enumerate() {
        let (n0, n1) = if i % 2 == 0 { (a.north_min, a.north_max) } else { (a.north_max, a.north_min) };
        wps.push(Vec3::new(n0, e, z));
        wps.push(Vec3::new(n1, e, z));
    }
    Ok(wps)
}

/// Latest fused target as seen by the mission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusedInfo {
    pub point: Vec3,
    /// Horizontal unit direction the fingers should close along.
    pub closing_axis: Vec3,
    /// Tick at which this fused value was produced.
    pub updated: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GripperFeedback {
    Open,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionInputs {
    pub pose_estimate: Pose,
    pub fused: Option<FusedInfo>,
    pub gripper: GripperFeedback,
    pub tick: Timestamp,
    /// Segmentation frames consumed in the current attempt.
    pub frames_used: usize,
}

/// Memory carried between ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionContext {
    pub home: Vec3,
    pub waypoint: usize,
    pub retries_left: u32,
    pub entered: Timestamp,
    pub last_tick: Option<Timestamp>,
    pub last_setpoint: Option<Setpoint>,
    pub last_update: Option<Timestamp>,
    /// Start of the current search attempt; older fused targets are ignored.
    pub search_started: Timestamp,
    /// Most recent fresh fused target of this attempt.
    pub target: Option<FusedInfo>,
    pub refine_history: Vec<Vec3>,
    pub locked: Option<FusedInfo>,
    /// First tick the descent setpoint sat on its goal.
    pub settled_since: Option<Timestamp>,
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub cfg: MissionConfig,
    pub waypoints: Vec<Vec3>,
    pub state: MissionState,
    pub ctx: MissionContext,
}

fn toward(from: Vec3, to: Vec3, max_step: f64) -> Vec3 {
    let d = to - from;
    let n = d.norm();
    if n <= max_step {
        to
    } else {
        from + d * (max_step / n)
    }
}

/// Yaw that puts the body y axis (the gripper closing direction) along
/// `axis`, choosing between the two equivalent headings the one closer to
/// `current`.
pub fn yaw_for_closing_axis(axis: Vec3, current: f64) -> f64 {
    let a = wrap_angle((-axis.x).atan2(axis.y));
    let b = wrap_angle(a + std::f64::consts::PI);
    if wrap_angle(a - current).abs() <= wrap_angle(b - current).abs() {
        a
    } else {
        b
    }
}

impl Mission {
    pub fn new(cfg: MissionConfig, k: &CameraIntrinsics) -> Result<Self, MissionError> {
        let waypoints = generate_search_pattern(&cfg, k)?;
        Ok(Self::with_waypoints(cfg, waypoints))
    }

    pub fn with_waypoints(cfg: MissionConfig, waypoints: Vec<Vec3>) -> Self {
        let ctx = MissionContext {
            home: Vec3::ZERO,
            waypoint: 0,
            retries_left: cfg.retry_limit,
            entered: Timestamp(0),
            last_tick: None,
            last_setpoint: None,
            last_update: None,
            search_started: Timestamp(0),
            target: None,
            refine_history: Vec::new(),
            locked: None,
            settled_since: None,
            attempts: 1,
        };
        Mission { cfg, waypoints, state: MissionState::Init, ctx }
    }

    fn goto(&mut self, next: MissionState, tick: Timestamp) {
        if next != self.state {
            self.state = next;
            self.ctx.entered = tick;
            self.ctx.refine_history.clear();
            self.ctx.settled_since = None;
        }
    }

    fn fresh(&self, fused: &Option<FusedInfo>, tick: Timestamp) -> Option<FusedInfo> {
        fused.filter(|f| {
            f.point.is_finite()
                && f.updated >= self.ctx.search_started
                && tick.0.saturating_sub(f.updated.0) <= self.cfg.stale_ticks
        })
    }

    /// Target lost or retries exhausted: back to Search or abort.
    fn lose_target(&mut self, tick: Timestamp) {
        if self.ctx.retries_left == 0 {
            self.goto(MissionState::Abort(AbortReason::Retries), tick);
        } else {
            self.ctx.retries_left -= 1;
            self.ctx.attempts += 1;
            self.ctx.waypoint = 0;
            self.ctx.locked = None;
            self.ctx.target = None;
            self.ctx.last_update = None;
            self.goto(MissionState::Search, tick);
            self.ctx.search_started = tick;
        }
    }

    /// Advances one tick and returns the setpoint to track.
    pub fn step(&mut self, inp: &MissionInputs) -> Result<Setpoint, MissionError> {
        if !inp.pose_estimate.is_finite() {
            return Err(MissionError::ContractViolation("non-finite pose estimate".into()));
        }
        if let Some(prev) = self.ctx.last_tick {
            if inp.tick <= prev {
                return Err(MissionError::ContractViolation(format!(
                    "tick {} does not advance past {}",
                    inp.tick.0, prev.0
                )));
            }
        }
        self.ctx.last_tick = Some(inp.tick);
        let tick = inp.tick;
        let est = inp.pose_estimate.translation;
        let cur_yaw = inp.pose_estimate.rotation.yaw();
        let dt = 1.0 / self.cfg.tick_rate;
        let in_state = tick.0.saturating_sub(self.ctx.entered.0);
        let fresh = self.fresh(&inp.fused, tick);
        if let Some(f) = fresh {
            let is_new = self.ctx.last_update.is_none_or(|t| f.updated > t);
            if is_new {
                self.ctx.last_update = Some(f.updated);
                self.ctx.target = Some(f);
                if self.state == MissionState::Refine {
                    self.ctx.refine_history.push(f.point);
                    let n = self.cfg.refine_updates;
                    if self.ctx.refine_history.len() > n {
                        self.ctx.refine_history.remove(0);
                    }
                }
            }
        }
        let since_update = |m: &Mission| {
            tick.0.saturating_sub(m.ctx.last_update.map_or(m.ctx.entered.0, |t| t.0))
        };

        // Transitions.
        use MissionState as S;
        let state_timeout = in_state > self.cfg.state_timeout_ticks;
        if self.state.is_tracking() && inp.frames_used >= self.cfg.frame_budget {
            self.goto(S::Abort(AbortReason::FrameBudget), tick);
        }
        match self.state {
            S::Init => {
                self.ctx.home = est;
                self.goto(S::Takeoff, tick);
                self.ctx.search_started = tick;
            }
            S::Takeoff => {
                if (est.z - self.cruise_z()).abs() < 0.05 {
                    self.goto(S::Search, tick);
                    self.ctx.search_started = tick;
                } else if state_timeout {
                    self.goto(S::Abort(AbortReason::Timeout), tick);
                }
            }
            S::Search => {
                if fresh.is_some() {
                    self.goto(S::Approach, tick);
                } else if let Some(&wp) = self.waypoints.get(self.ctx.waypoint) {
                    if est.distance(wp) < self.cfg.waypoint_radius {
                        self.ctx.waypoint += 1;
                    }
                }
                if self.state == S::Search && self.ctx.waypoint >= self.waypoints.len() {
                    // Sweep finished without a target.
                    self.lose_target(tick);
                }
            }
            S::Approach | S::Refine => {
                if since_update(self) > self.cfg.lost_timeout_ticks {
                    self.lose_target(tick);
                } else if let Some(f) = self.ctx.target {
                    let hover_z = f.point.z - self.cfg.refine_hover_height;
                    let near = est.horizontal_distance(f.point) < self.cfg.approach_radius
                        && (est.z - hover_z).abs() < 0.1;
                    if self.state == S::Approach && near {
                        self.goto(S::Refine, tick);
                    } else if self.state == S::Refine && self.refine_converged() {
                        self.ctx.locked = Some(f);
                        self.goto(S::Descend, tick);
                    }
                }
            }
            S::Descend => {
                let goal = self.descend_goal();
                let commanded = self.ctx.last_setpoint.is_some_and(|s| s.position.distance(goal) < 1e-9);
                if !commanded {
                    self.ctx.settled_since = None;
                } else if self.ctx.settled_since.is_none() {
                    self.ctx.settled_since = Some(tick);
                }
                let settled = self
                    .ctx
                    .settled_since
                    .is_some_and(|t| tick.0 - t.0 >= self.cfg.ticks(self.cfg.settle_s));
                if settled && est.distance(goal) < self.cfg.arrive_tolerance {
                    self.goto(S::CloseGripper, tick);
                } else if since_update(self) > self.cfg.descend_lost_timeout_ticks {
                    self.lose_target(tick);
                }
            }
            S::CloseGripper => {
                if in_state >= self.cfg.ticks(self.cfg.close_dwell_s)
                    && inp.gripper == GripperFeedback::Closed
                {
                    self.goto(S::Lift, tick);
                } else if state_timeout {
                    self.goto(S::Abort(AbortReason::Timeout), tick);
                }
            }
            S::Lift => {
                if (est.z - self.cruise_z()).abs() < 0.05 {
                    self.goto(S::Transport, tick);
                } else if state_timeout {
                    self.goto(S::Abort(AbortReason::Timeout), tick);
                }
            }
            S::Transport => {
                if est.distance(self.cfg.drop_point) < 0.15 {
                    self.goto(S::Drop, tick);
                } else if state_timeout {
                    self.goto(S::Abort(AbortReason::Timeout), tick);
                }
            }
            S::Drop => {
                if in_state >= self.cfg.ticks(self.cfg.drop_dwell_s) {
                    self.goto(S::Land, tick);
                }
            }
            S::Land => {
                if est.distance(self.ctx.home) < 0.05 {
                    self.goto(S::Done, tick);
                } else if state_timeout {
                    self.goto(S::Abort(AbortReason::Timeout), tick);
                }
            }
            S::Done | S::Abort(_) => {}
        }

        // Setpoint for the (possibly new) state.
        let last = self.ctx.last_setpoint.unwrap_or(Setpoint {
            position: est,
            yaw: wrap_angle(cur_yaw),
            gripper: GripperCommand::Open,
            timestamp: tick,
        });
        let cruise = self.cfg.cruise_speed * dt;
        let mut yaw = last.yaw;
        let mut gripper = GripperCommand::Open;
        let position = match self.state {
            S::Init | S::Done | S::Abort(_) => last.position,
            S::Takeoff => toward(last.position, self.takeoff_goal(), cruise),
            S::Search => {
                let i = self.ctx.waypoint.min(self.waypoints.len().saturating_sub(1));
                match self.waypoints.get(i) {
                    Some(&wp) => {
                        let prev = if i == 0 { last.position } else { self.waypoints[i - 1] };
                        let seg = (wp - prev).horizontal();
                        if seg.norm() > 1e-6 {
                            yaw = wrap_angle(seg.y.atan2(seg.x));
                        }
                        toward(last.position, wp, cruise)
                    }
                    None => last.position,
                }
            }
            S::Approach | S::Refine => match self.ctx.target {
                Some(f) => {
                    let goal = Vec3::new(f.point.x, f.point.y, f.point.z - self.cfg.refine_hover_height);
                    toward(last.position, goal, cruise)
                }
                None => last.position,
            },
            S::Descend => {
                if let Some(l) = self.ctx.locked {
                    yaw = yaw_for_closing_axis(l.closing_axis, last.yaw);
                }
                toward(last.position, self.descend_goal(), self.cfg.descent_speed * dt)
            }
            S::CloseGripper => {
                gripper = GripperCommand::Closed;
                last.position
            }
            S::Lift => {
                gripper = GripperCommand::Closed;
                let goal = Vec3::new(last.position.x, last.position.y, self.cruise_z());
                toward(last.position, goal, cruise)
            }
            S::Transport => {
                gripper = GripperCommand::Closed;
                toward(last.position, self.cfg.drop_point, cruise)
            }
            S::Drop => last.position,
            S::Land => {
                let above = Vec3::new(self.ctx.home.x, self.ctx.home.y, last.position.z);
                if last.position.horizontal_distance(self.ctx.home) > 1e-9 {
                    toward(last.position, above, cruise)
                } else {
                    toward(last.position, self.ctx.home, self.cfg.descent_speed * dt)
                }
            }
        };
        let sp = Setpoint { position, yaw: wrap_angle(yaw), gripper, timestamp: tick };
        self.ctx.last_setpoint = Some(sp);
        Ok(sp)
    }

    fn cruise_z(&self) -> f64 {
        self.ctx.home.z - self.cfg.search_altitude
    }

    fn takeoff_goal(&self) -> Vec3 {
        Vec3::new(self.ctx.home.x, self.ctx.home.y, self.cruise_z())
    }

    /// Body position at which the gripper closes.
    pub fn descend_goal(&self) -> Vec3 {
        let Some(l) = self.ctx.locked else {
            return self.ctx.last_setpoint.map_or(Vec3::ZERO, |s| s.position);
        };
        let g = &self.cfg.gripper;
        let mut palm_z = l.point.z - self.cfg.grasp_close_height;
        // The base is rarely visible from above; the takeoff height stands in
        // for the ground under the object.
        let lowest_palm = self.ctx.home.z - g.ground_clearance - g.finger_length;
        if palm_z > lowest_palm {
            palm_z = lowest_palm;
        }
        Vec3::new(l.point.x, l.point.y, palm_z - g.offset_down)
    }

    fn refine_converged(&self) -> bool {
        let h = &self.ctx.refine_history;
        if h.len() < self.cfg.refine_updates {
            return false;
        }
        let mean = h.iter().fold(Vec3::ZERO, |a, &p| a + p) / h.len() as f64;
        h.iter().all(|p| p.distance(mean) < self.cfg.refine_spread)
    }
}
