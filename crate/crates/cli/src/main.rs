//! Command-line entry point: run missions, batch experiments, evaluate
//! trajectories, render debug frames and plan grasps from PLY files.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 domain failure
//! (mission failed, planner could not plan).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aerograsp::camera::{self, pgm, render::cast_rays, render::PixelRect, CameraError};
use aerograsp::cloud::PointCloud;
use aerograsp::eval::{self, tum, AlignMode};
use aerograsp::planner::{plan_grasp, PlannerParams, SymmetryMode};
use aerograsp::ply;
use aerograsp::se3::{Pose, Timestamp, Vec3};
use aerograsp::sim::{batch_run, run_scenario, Archetype, BatchReport, ScenarioConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "aerograsp", version, about = "Aerial grasping simulator and tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one mission and write its log directory.
    Run(RunArgs),
    /// Run scenarios over consecutive seeds and tabulate success.
    Batch(BatchArgs),
    /// Compare an estimated trajectory against a reference (ATE and RPE).
    Eval(EvalArgs),
    /// Render one depth frame, its target mask and the back-projected cloud.
    Render(RenderArgs),
    /// Plan a grasp on a PLY point cloud.
    Plan(PlanArgs),
}

#[derive(Args, Debug)]
struct Source {
    /// Scenario TOML file.
    #[arg(required_unless_present = "archetype", conflicts_with = "archetype")]
    scenario: Option<PathBuf>,
    /// Built-in single-object scenario instead of a file.
    #[arg(long)]
    archetype: Option<String>,
    /// Zero all noise and disturbances.
    #[arg(long)]
    noise_free: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Output directory for truth.tum, estimate.tum, mission.jsonl, outcome.json.
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
struct BatchArgs {
    /// Scenario TOML files, one table row each.
    scenarios: Vec<PathBuf>,
    /// Add a row for every built-in archetype.
    #[arg(long)]
    archetypes: bool,
    /// Seeds per scenario.
    #[arg(long, default_value_t = 16)]
    seeds: u64,
    /// First seed; runs use first_seed..first_seed+seeds.
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[arg(long)]
    noise_free: bool,
    /// Directory for batch.csv, batch.txt and batch.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Rigid,
    Similarity,
}

#[derive(Args, Debug)]
struct EvalArgs {
    estimate: PathBuf,
    reference: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Rigid)]
    mode: ModeArg,
    /// RPE step in associated samples.
    #[arg(long, default_value_t = 1)]
    delta: usize,
    /// Association window, seconds.
    #[arg(long, default_value_t = 0.01)]
    max_dt: f64,
    /// Directory for metrics.json and rpe.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    source: Source,
    /// Output prefix; writes PREFIX_depth.pgm, PREFIX_mask.pgm, PREFIX_cloud.ply.
    #[arg(long)]
    out: PathBuf,
    /// Vehicle north, meters. Defaults to above the target.
    #[arg(long, allow_hyphen_values = true)]
    north: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    east: Option<f64>,
    /// Vehicle down coordinate. Defaults to the search altitude.
    #[arg(long, allow_hyphen_values = true)]
    down: Option<f64>,
    /// Heading, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    yaw_deg: f64,
    /// Leave out the ground plane.
    #[arg(long)]
    no_ground: bool,
}

#[derive(Args, Debug)]
struct PlanArgs {
    cloud: PathBuf,
    /// Output prefix; writes PREFIX.json and PREFIX_candidates.ply.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    no_symmetry: bool,
    #[arg(long)]
    min_points: Option<usize>,
    #[arg(long)]
    slab_half_thickness: Option<f64>,
    #[arg(long)]
    base_slice_height: Option<f64>,
    /// Sensor position "n,e,d" when the PLY does not record one.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    sensor: Option<Vec3>,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err("expected three finite numbers n,e,d".into()),
    }
}

enum Failure {
    Config(String),
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Domain(_) => 2,
        }
    }
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

type CmdResult = Result<(), Failure>;

fn load(source: &Source) -> Result<ScenarioConfig, Failure> {
    let cfg = match (&source.scenario, &source.archetype) {
        (Some(path), _) => ScenarioConfig::load(path).map_err(config)?,
        (None, Some(name)) => Archetype::from_name(name)
            .ok_or_else(|| {
                let names: Vec<&str> = Archetype::ALL.iter().map(|a| a.name()).collect();
                Failure::Config(format!("unknown archetype '{name}' (one of {})", names.join(", ")))
            })?
            .scenario(0),
        (None, None) => return Err(Failure::Config("no scenario given".into())),
    };
    Ok(if source.noise_free { cfg.noise_free() } else { cfg })
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CmdResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_run(a: &RunArgs) -> CmdResult {
    let mut cfg = load(&a.source)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let log = run_scenario(&cfg).map_err(config)?;
    log.write_dir(&a.out).map_err(config)?;
    let o = &log.outcome;
    println!(
        "{} seed {}: {:?} after {} ticks, {} attempt(s)",
        o.object, o.seed, o.final_state, o.ticks, o.attempts
    );
    if o.success {
        println!("grasp succeeded");
        Ok(())
    } else {
        Err(Failure::Domain(format!("mission failed: {}", o.failure.as_deref().unwrap_or("unknown"))))
    }
}

fn cmd_batch(a: &BatchArgs) -> CmdResult {
    if a.seeds == 0 {
        return Err(Failure::Config("--seeds must be at least 1".into()));
    }
    let mut cfgs = Vec::new();
    for path in &a.scenarios {
        cfgs.push(load(&Source { scenario: Some(path.clone()), archetype: None, noise_free: a.noise_free })?);
    }
    if a.archetypes {
        cfgs.extend(Archetype::ALL.iter().map(|t| {
            let cfg = t.scenario(0);
            if a.noise_free { cfg.noise_free() } else { cfg }
        }));
    }
    if cfgs.is_empty() {
        return Err(Failure::Config("give scenario files or --archetypes".into()));
    }
    let end = a.first_seed.checked_add(a.seeds).ok_or_else(|| Failure::Config("seed range overflows".into()))?;
    let seeds: Vec<u64> = (a.first_seed..end).collect();
    let rows = cfgs.iter().map(|c| batch_run(c, &seeds)).collect::<Result<Vec<_>, _>>().map_err(config)?;
    let report = BatchReport::new(rows);
    let json = serde_json::to_string_pretty(&report).map_err(config)? + "\n";
    if let Some(dir) = &a.out {
        write_file(&dir.join("batch.csv"), report.csv())?;
        write_file(&dir.join("batch.txt"), report.table())?;
        write_file(&dir.join("batch.json"), &json)?;
    }
    if a.json {
        print!("{json}");
    } else {
        print!("{}", report.table());
    }
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> CmdResult {
    let read = |p: &Path| tum::read(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())));
    let (est, reference) = (read(&a.estimate)?, read(&a.reference)?);
    let (pe, pr) = eval::associate(&est, &reference, a.max_dt).map_err(config)?;
    let mode = match a.mode {
        ModeArg::Rigid => AlignMode::Rigid,
        ModeArg::Similarity => AlignMode::Similarity,
    };
    let ate = eval::ate(&pe, &pr, mode).map_err(config)?;
    let rpe = eval::rpe_translational(&pe, &pr, a.delta).map_err(config)?;
    let metrics = json!({
        "pairs": pe.len(),
        "mode": mode,
        "delta": a.delta,
        "ate": { "rmse": ate.rmse, "mean": ate.mean, "max": ate.max },
        "rpe": { "mean": rpe.mean, "max": rpe.max, "rmse": rpe.rmse },
        "alignment": ate.alignment,
    });
    let text = serde_json::to_string_pretty(&metrics).map_err(config)? + "\n";
    if let Some(dir) = &a.out {
        let mut csv = String::from("t,rpe\n");
        for (t, e) in rpe.times.iter().zip(&rpe.series) {
            let _ = writeln!(csv, "{t},{e}");
        }
        write_file(&dir.join("metrics.json"), &text)?;
        write_file(&dir.join("rpe.csv"), csv)?;
    }
    if a.json {
        print!("{text}");
    } else {
        println!("pairs      {}", pe.len());
        println!("ATE  rmse  {:.6} m  mean {:.6}  max {:.6}", ate.rmse, ate.mean, ate.max);
        println!("RPE  mean  {:.6} m  max  {:.6}  rmse {:.6}", rpe.mean, rpe.max, rpe.rmse);
    }
    Ok(())
}

fn cmd_render(a: &RenderArgs) -> CmdResult {
    let cfg = load(&a.source)?;
    let shapes: Vec<_> = cfg.objects.iter().map(|o| o.shape()).collect();
    let above = shapes.get(cfg.target).map(|s| s.center()).unwrap_or(Vec3::ZERO);
    let body = Vec3::new(
        a.north.unwrap_or(above.x),
        a.east.unwrap_or(above.y),
        a.down.unwrap_or(cfg.ground_z - cfg.mission.search_altitude),
    );
    if !(body.x.is_finite() && body.y.is_finite() && body.z.is_finite() && a.yaw_deg.is_finite()) {
        return Err(Failure::Config("camera pose must be finite".into()));
    }
    let cam = Pose::from_yaw(a.yaw_deg.to_radians(), body).compose(&cfg.mount.pose());
    // Ground far beyond the depth range renders as misses.
    let ground = if a.no_ground { f64::INFINITY } else { cfg.ground_z };
    let hits = cast_rays(&shapes, ground, &cfg.camera, &cam, PixelRect::full(&cfg.camera));
    let depth = camera::render::depth_from_hits(&hits, &cfg.camera, Timestamp::default());
    let mask = camera::render::mask_from_hits(&hits, cfg.target, Timestamp::default());
    let cloud = match camera::back_project_mask(&depth, &mask, &cfg.camera, &cam) {
        Err(CameraError::EmptyCloud) => PointCloud::default().with_sensor_origin(cam.translation),
        other => other.map_err(config)?,
    };
    write_file(&with_suffix(&a.out, "_depth.pgm"), pgm::encode_depth(&depth))?;
    write_file(&with_suffix(&a.out, "_mask.pgm"), pgm::encode_mask(&mask))?;
    write_file(&with_suffix(&a.out, "_cloud.ply"), ply::to_string(&cloud))?;
    println!("mask pixels {}, cloud points {}", mask.count(), cloud.len());
    Ok(())
}

fn cmd_plan(a: &PlanArgs) -> CmdResult {
    let mut cloud = ply::read(&a.cloud).map_err(|e| Failure::Config(format!("{}: {e}", a.cloud.display())))?;
    if let Some(s) = a.sensor {
        cloud.sensor_origin = Some(s);
    }
    let d = PlannerParams::default();
    let params = PlannerParams {
        slab_half_thickness: a.slab_half_thickness.unwrap_or(d.slab_half_thickness),
        base_slice_height: a.base_slice_height.unwrap_or(d.base_slice_height),
        min_points: a.min_points.unwrap_or(d.min_points),
        symmetry_mode: if a.no_symmetry { SymmetryMode::Off } else { d.symmetry_mode },
    };
    params.validate().map_err(config)?;
    let plan = plan_grasp(&cloud, &params).map_err(|e| Failure::Domain(format!("{}: {e}", e.name())))?;
    let summary = json!({
        "grasp_point": plan.grasp_point,
        "closing_axis": plan.closing_axis,
        "approach": plan.approach,
        "cutting_normal": plan.cutting_normal,
        "plane_point": plan.plane_point,
        "completed_centroid": plan.completed_centroid,
        "base_z": plan.base_z,
        "candidate_count": plan.candidates.len(),
        "params": params,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(config)? + "\n";
    write_file(&with_suffix(&a.out, ".json"), &text)?;
    write_file(&with_suffix(&a.out, "_candidates.ply"), ply::to_string(&plan.candidates))?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let r = match &cli.cmd {
        Command::Run(a) => cmd_run(a),
        Command::Batch(a) => cmd_batch(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Render(a) => cmd_render(a),
        Command::Plan(a) => cmd_plan(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Domain(m) => eprintln!("failed: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
