use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grasp::DownwashParams;
use super::noise::NoiseModel;
use super::vehicle::VehicleParams;
use super::SimError;
use crate::camera::render::DepthNoise;
use crate::camera::{CameraIntrinsics, PrimitiveShape, ShapeKind};
use crate::mission::MissionConfig;
use crate::planner::PlannerParams;
use crate::se3::{Pose, UnitQuaternion, Vec3};

/// One object on the ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    #[serde(default)]
    pub name: String,
    pub shape: ShapeKind,
    /// Center position, NED meters.
    pub position: [f64; 3],
    /// Roll, pitch, yaw in radians.
    #[serde(default)]
    pub rpy: [f64; 3],
    pub mass_g: f64,
    /// Taped down: immune to downwash.
    #[serde(default = "yes")]
    pub high_friction: bool,
}

fn yes() -> bool {
    true
}

impl ObjectSpec {
    pub fn shape(&self) -> PrimitiveShape {
        let [r, p, y] = self.rpy;
        PrimitiveShape::new(
            self.shape,
            Pose::new(UnitQuaternion::from_euler(r, p, y), Vec3::from_array(self.position)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraMount {
    /// Camera position in the body frame (x forward, y right, z down).
    pub translation: [f64; 3],
    /// Optical axis angle below the body's forward axis, rad.
    pub pitch: f64,
}

impl Default for CameraMount {
    fn default() -> Self {
        CameraMount { translation: [0.0; 3], pitch: 80f64.to_radians() }
    }
}

impl CameraMount {
    pub fn pose(&self) -> Pose {
        crate::camera::mount_pose(Vec3::from_array(self.translation), self.pitch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MaskCorruption {
    pub erode_px: usize,
    pub dilate_px: usize,
    pub flip_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    pub tau: f64,
    pub window: usize,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams { tau: 0.05, window: 30 }
    }
}

/// Declarative description of one simulated mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Simulation and control rate, Hz.
    pub tick_rate: f64,
    /// Depth and segmentation rate, Hz.
    pub camera_rate: f64,
    /// Hard stop for the whole run.
    pub max_ticks: u64,
    /// Index into `objects` of the object to grasp.
    pub target: usize,
    /// Earliest tick at which the operator designates the target.
    pub designate_after_tick: u64,
    /// Seconds between the close command and the fingers closing.
    pub gripper_close_s: f64,
    pub ground_z: f64,
    pub mission: MissionConfig,
    pub camera: CameraIntrinsics,
    pub mount: CameraMount,
    pub vehicle: VehicleParams,
    pub noise: NoiseModel,
    pub depth_noise: DepthNoise,
    pub mask: MaskCorruption,
    pub planner: PlannerParams,
    pub fusion: FusionParams,
    pub downwash: DownwashParams,
    pub objects: Vec<ObjectSpec>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            tick_rate: 200.0,
            camera_rate: 30.0,
            max_ticks: 60 * 200 * 5,
            target: 0,
            designate_after_tick: 0,
            gripper_close_s: 0.3,
            ground_z: 0.0,
            mission: MissionConfig::default(),
            camera: CameraIntrinsics::default(),
            mount: CameraMount::default(),
            vehicle: VehicleParams::default(),
            noise: NoiseModel::default(),
            depth_noise: DepthNoise::default(),
            mask: MaskCorruption::default(),
            planner: PlannerParams::default(),
            fusion: FusionParams::default(),
            downwash: DownwashParams::default(),
            objects: Vec::new(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.tick_rate > 0.0 && self.camera_rate > 0.0 && self.camera_rate <= self.tick_rate) {
            return bad("rates must be positive with camera_rate <= tick_rate".into());
        }
        if self.mission.tick_rate != self.tick_rate {
            return bad(format!(
                "mission.tick_rate {} differs from tick_rate {}",
                self.mission.tick_rate, self.tick_rate
            ));
        }
        if self.objects.is_empty() {
            return bad("at least one object is required".into());
        }
        if self.target >= self.objects.len() {
            return bad(format!("target {} out of range ({} objects)", self.target, self.objects.len()));
        }
        if !(self.gripper_close_s >= 0.0 && self.ground_z.is_finite()) {
            return bad("gripper_close_s must be non-negative and ground_z finite".into());
        }
        for (i, o) in self.objects.iter().enumerate() {
            o.shape().validate().map_err(|e| SimError::Config(format!("objects[{i}]: {e}")))?;
            if !(o.mass_g > 0.0 && o.mass_g.is_finite()) {
                return bad(format!("objects[{i}]: mass_g must be positive"));
            }
        }
        self.mission.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.camera.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.planner.validate().map_err(|e| SimError::Config(e.to_string()))?;
        self.vehicle.validate().map_err(SimError::Config)?;
        self.noise.validate().map_err(SimError::Config)?;
        self.downwash.validate().map_err(SimError::Config)?;
        if !(self.fusion.tau > 0.0 && self.fusion.window > 0) {
            return bad("fusion tau and window must be positive".into());
        }
        if !(self.depth_noise.sigma0 >= 0.0 && self.depth_noise.kz >= 0.0) {
            return bad("depth noise must be non-negative".into());
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            SimError::Parse(m) => SimError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Same scenario with localization noise, depth noise, mask corruption and
    /// downwash all switched off.
    pub fn noise_free(mut self) -> Self {
        self.noise = NoiseModel::NONE;
        self.depth_noise = DepthNoise::NONE;
        self.mask = MaskCorruption::default();
        self.downwash = DownwashParams::NONE;
        self
    }

    pub fn target_name(&self) -> &str {
        self.objects.get(self.target).map_or("", |o| o.name.as_str())
    }
}

/// The nine reference objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    BottleUpright,
    BottleSideways,
    Plush,
    Pouch,
    Styrofoam,
    KitchenRoll,
    Ramen,
    Ball,
    Cardboard,
}

impl Archetype {
    pub const ALL: [Archetype; 9] = [
        Archetype::BottleUpright,
        Archetype::BottleSideways,
        Archetype::Plush,
        Archetype::Pouch,
        Archetype::Styrofoam,
        Archetype::KitchenRoll,
        Archetype::Ramen,
        Archetype::Ball,
        Archetype::Cardboard,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Archetype::BottleUpright => "bottle_upright",
            Archetype::BottleSideways => "bottle_sideways",
            Archetype::Plush => "plush",
            Archetype::Pouch => "pouch",
            Archetype::Styrofoam => "styrofoam",
            Archetype::KitchenRoll => "kitchen_roll",
            Archetype::Ramen => "ramen",
            Archetype::Ball => "ball",
            Archetype::Cardboard => "cardboard",
        }
    }

    pub fn from_name(s: &str) -> Option<Archetype> {
        Archetype::ALL.into_iter().find(|a| a.name() == s)
    }

    pub fn mass_g(&self) -> f64 {
        match self {
            Archetype::BottleUpright | Archetype::BottleSideways => 248.9,
            Archetype::Plush => 68.8,
            Archetype::Pouch => 240.9,
            Archetype::Styrofoam => 88.7,
            Archetype::KitchenRoll => 140.1,
            Archetype::Ramen => 120.4,
            Archetype::Ball => 143.8,
            Archetype::Cardboard => 93.0,
        }
    }

    /// Shape and orientation. Boxes list (north, east, down) extents.
    fn geometry(&self) -> (ShapeKind, [f64; 3]) {
        use std::f64::consts::FRAC_PI_2;
        let up = [0.0; 3];
        match self {
            Archetype::BottleUpright => (ShapeKind::Cylinder { radius: 0.05, height: 0.29 }, up),
            Archetype::BottleSideways => {
                (ShapeKind::Cylinder { radius: 0.05, height: 0.29 }, [FRAC_PI_2, 0.0, 0.0])
            }
            Archetype::Plush => (ShapeKind::Capsule { radius: 0.055, height: 0.26 }, up),
            Archetype::Pouch => (ShapeKind::Box { extents: [0.08, 0.25, 0.15] }, up),
            Archetype::Styrofoam => (ShapeKind::Box { extents: [0.09, 0.15, 0.13] }, up),
            Archetype::KitchenRoll => (ShapeKind::Cylinder { radius: 0.045, height: 0.27 }, up),
            Archetype::Ramen => (ShapeKind::Cylinder { radius: 0.05, height: 0.12 }, up),
            Archetype::Ball => (ShapeKind::Sphere { radius: 0.07 }, up),
            Archetype::Cardboard => (ShapeKind::Box { extents: [0.08, 0.17, 0.11] }, up),
        }
    }

    /// Object resting on the ground with its center above `(north, east)`.
    pub fn object_at(&self, north: f64, east: f64) -> ObjectSpec {
        let (shape, rpy) = self.geometry();
        let mut spec = ObjectSpec {
            name: self.name().to_string(),
            shape,
            position: [north, east, 0.0],
            rpy,
            mass_g: self.mass_g(),
            high_friction: true,
        };
        let (_, base) = spec.shape().vertical_extent();
        spec.position[2] = -base;
        spec
    }

    /// Default scenario: the object alone in the search area, off the lanes.
    pub fn scenario(&self, seed: u64) -> ScenarioConfig {
        ScenarioConfig { seed, objects: vec![self.object_at(2.6, 1.3)], ..ScenarioConfig::default() }
    }
}
