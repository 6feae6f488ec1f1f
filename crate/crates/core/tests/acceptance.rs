//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

#[path = "support/mission_script.rs"]
mod mission_script;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use aerograsp::camera::{back_project_mask, render_depth, render_mask, PrimitiveShape, ShapeKind};
use aerograsp::eval::{rpe_translational, tum, umeyama_align, AlignMode, TrajSample, Trajectory};
use aerograsp::fusion::{ransac_fuse, TargetEstimate};
use aerograsp::mission::{MissionState, TRANSITIONS};
use aerograsp::planner::{plan_grasp, PlannerParams, SymmetryMode};
use aerograsp::ply;
use aerograsp::se3::{Pose, Timestamp, UnitQuaternion, Vec3};
use aerograsp::sim::{
    batch_run, calibration_run, run_scenario, Archetype, BatchReport, BatchRow, NoiseModel, RunLog,
};
use aerograsp::cloud::PointCloud;
use aerograsp::camera::CameraIntrinsics;
use aerograsp::surface::sample_surface;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn run_noise_free() -> Vec<RunLog> {
    Archetype::ALL
        .iter()
        .map(|a| run_scenario(&a.scenario(1).noise_free()).expect("valid scenario"))
        .collect()
}

fn c1_noise_free_grasping() -> Outcome {
    let t = Instant::now();
    let logs = run_noise_free();
    let elapsed = t.elapsed();
    let ok: Vec<_> = logs
        .iter()
        .filter(|l| l.outcome.final_state == MissionState::Done && l.outcome.success)
        .collect();
    let failed: Vec<String> = logs
        .iter()
        .filter(|l| !l.outcome.success)
        .map(|l| format!("{}: {:?}", l.outcome.object, l.outcome.failure))
        .collect();
    ensure!(ok.len() == 9, "{}/9 succeeded; {}", ok.len(), failed.join(", "));
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("9/9 Done with success in {:.1} s", elapsed.as_secs_f64()))
}

fn calibrated_batch() -> BatchReport {
    let seeds: Vec<u64> = (1000..1016).collect();
    let rows: Vec<BatchRow> = Archetype::ALL
        .iter()
        .map(|a| batch_run(&a.scenario(0), &seeds).expect("valid scenario"))
        .collect();
    BatchReport::new(rows)
}

fn c2_success_band(report: &BatchReport) -> Outcome {
    for line in report.table().lines() {
        println!("    {line}");
    }
    ensure!(report.attempts == 144, "{} attempts", report.attempts);
    ensure!(
        report.success_rate >= 0.70,
        "aggregate success {:.1}% < 70%",
        100.0 * report.success_rate
    );
    Ok(format!(
        "aggregate {}/{} = {:.1}% (reference hardware figure 85% over 144, not reproduced)",
        report.successes,
        report.attempts,
        100.0 * report.success_rate
    ))
}

fn c3_failure_modes(report: &BatchReport) -> Outcome {
    const NAMED: [&str; 3] = ["horizontal_miss", "closed_above_object", "object_shifted"];
    let modes = report.failure_modes();
    let failures: usize = modes.iter().filter(|(k, _)| k.as_str() != "none").map(|(_, v)| v).sum();
    let unclassified: Vec<String> = modes
        .iter()
        .filter(|(k, _)| k.as_str() != "none" && !NAMED.contains(&k.as_str()))
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    ensure!(unclassified.is_empty(), "unclassified failures: {}", unclassified.join(" "));
    ensure!(
        report.attempts - report.successes == failures,
        "{} failures but {} labelled",
        report.attempts - report.successes,
        failures
    );
    Ok(format!("{failures} failures, all classified ({modes:?})"))
}

fn c4_rpe_calibration() -> Outcome {
    let t = Instant::now();
    let mut worst = (0.0f64, 0.0f64);
    let mut lines = Vec::new();
    for seed in 0..10 {
        let (reference, estimate) = calibration_run(&NoiseModel::default(), seed, 200.0, 30.0);
        let rpe = rpe_translational(&estimate, &reference, 1).map_err(|e| e.to_string())?;
        let mean_dev = (rpe.mean / 0.028 - 1.0).abs();
        let max_dev = (rpe.max / 0.042 - 1.0).abs();
        worst = (worst.0.max(mean_dev), worst.1.max(max_dev));
        lines.push(format!("seed {seed}: mean {:.4} max {:.4}", rpe.mean, rpe.max));
        ensure!(mean_dev <= 0.15, "mean RPE {:.4} off by {:.1}%", rpe.mean, 100.0 * mean_dev);
        ensure!(max_dev <= 0.30, "max RPE {:.4} off by {:.1}%", rpe.max, 100.0 * max_dev);
    }
    let elapsed = t.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "10 seeds, worst deviation mean {:.1}% max {:.1}% ({}), {:.2} s",
        100.0 * worst.0,
        100.0 * worst.1,
        lines[0],
        elapsed.as_secs_f64()
    ))
}

fn random_trajectory(rng: &mut ChaCha8Rng, n: usize) -> Trajectory {
    let mut p = Vec3::ZERO;
    let samples = (0..n)
        .map(|i| {
            p += Vec3::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.1..0.1));
            let q = UnitQuaternion::from_euler(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(-3.1..3.1),
            );
            TrajSample { t: i as f64 / 30.0, pose: Pose::new(q, p) }
        })
        .collect();
    Trajectory { samples }
}

fn c5_umeyama() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let reference = random_trajectory(&mut rng, 60);
        let s: f64 = rng.random_range(0.5..2.0);
        let r = UnitQuaternion::from_euler(
            rng.random_range(-3.1..3.1),
            rng.random_range(-1.5..1.5),
            rng.random_range(-3.1..3.1),
        );
        let t = Vec3::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        // The estimate is the reference under x -> s R x + t; the alignment
        // must recover the inverse map.
        let estimate = Trajectory {
            samples: reference
                .samples
                .iter()
                .map(|x| TrajSample { t: x.t, pose: Pose::new(x.pose.rotation, r.rotate(x.pose.translation) * s + t) })
                .collect(),
        };
        let a = umeyama_align(&estimate, &reference, AlignMode::Similarity).map_err(|e| e.to_string())?;
        let inv_r = r.conjugate();
        let inv_t = -(inv_r.rotate(t) / s);
        let errs = [
            (a.scale - 1.0 / s).abs(),
            a.rotation.angle_to(&inv_r),
            a.translation.distance(inv_t),
        ];
        let e = errs.iter().copied().fold(0.0, f64::max);
        worst = worst.max(e);
        ensure!(e <= 1e-9, "case {case}: parameter error {e:e} ({errs:?})");
        let rigid = umeyama_align(&estimate, &reference, AlignMode::Rigid).map_err(|e| e.to_string())?;
        ensure!(rigid.scale == 1.0, "case {case}: rigid scale {}", rigid.scale);
    }
    Ok(format!("100 similarity transforms recovered, worst parameter error {worst:.1e}; rigid scale == 1"))
}

fn c6_rpe_drift() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let reference = random_trajectory(&mut rng, 200);
        let d = Vec3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05));
        // Drift expressed in each body frame so every relative step is off by d.
        let mut offset = Vec3::ZERO;
        let mut samples = Vec::new();
        for (i, x) in reference.samples.iter().enumerate() {
            if i > 0 {
                offset += reference.samples[i - 1].pose.rotation.rotate(d);
            }
            samples.push(TrajSample { t: x.t, pose: Pose::new(x.pose.rotation, x.pose.translation + offset) });
        }
        let estimate = Trajectory { samples };
        let rpe = rpe_translational(&estimate, &reference, 1).map_err(|e| e.to_string())?;
        let e = (rpe.mean - d.norm()).abs();
        worst = worst.max(e);
        ensure!(e <= 1e-9, "mean RPE {} vs |d| {} (error {e:e})", rpe.mean, d.norm());
    }
    Ok(format!("20 trajectories, worst |mean RPE - |d|| = {worst:.1e}"))
}

/// Independent brute force: enumerate hypotheses in input order, keep the
/// best by (count desc, mean asc, timestamp asc, coordinates asc).
fn oracle_fuse(est: &[TargetEstimate], tau: f64) -> (Vec3, usize) {
    let mut best: Option<(usize, f64, TargetEstimate, Vec<Vec3>)> = None;
    for h in est {
        let mut ds: Vec<(f64, Vec3)> = est
            .iter()
            .map(|e| (e.point.distance(h.point), e.point))
            .filter(|(d, _)| *d <= tau)
            .collect();
        ds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mean = ds.iter().map(|x| x.0).sum::<f64>() / ds.len() as f64;
        let key_better = |b: &(usize, f64, TargetEstimate, Vec<Vec3>)| {
            let (c, m) = (ds.len(), mean);
            if c != b.0 {
                return c > b.0;
            }
            if m != b.1 {
                return m < b.1;
            }
            let (x, y) = (h, &b.2);
            (x.timestamp, x.point.x, x.point.y, x.point.z)
                .partial_cmp(&(y.timestamp, y.point.x, y.point.y, y.point.z))
                == Some(std::cmp::Ordering::Less)
        };
        if best.as_ref().is_none_or(key_better) {
            best = Some((ds.len(), mean, *h, ds.iter().map(|x| x.1).collect()));
        }
    }
    let (count, _, _, inliers) = best.expect("non-empty");
    // Mean of inliers in canonical (timestamp, coordinate) order.
    let mut members: Vec<&TargetEstimate> = est.iter().filter(|e| inliers.contains(&e.point)).collect();
    members.sort_by(|a, b| {
        (a.timestamp, a.point.x, a.point.y, a.point.z)
            .partial_cmp(&(b.timestamp, b.point.x, b.point.y, b.point.z))
            .expect("finite")
    });
    let sum = members.iter().fold(Vec3::ZERO, |s, e| s + e.point);
    (sum / count as f64, count)
}

fn c7_ransac_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let tau = 0.05;
    for case in 0..1000 {
        let n = rng.random_range(1..=50);
        let center = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-1.0..0.0));
        let spread = rng.random_range(0.01..0.2);
        let est: Vec<TargetEstimate> = (0..n)
            .map(|i| TargetEstimate {
                point: center
                    + Vec3::new(rng.random_range(-spread..spread), rng.random_range(-spread..spread), rng.random_range(-spread..spread)),
                timestamp: Timestamp(rng.random_range(0..(2 * n as u64)) + i as u64 % 2),
            })
            .collect();
        let got = ransac_fuse(&est, tau).map_err(|e| e.to_string())?;
        let (p, count) = oracle_fuse(&est, tau);
        ensure!(
            got.inlier_count == count && got.point == p,
            "case {case}: fuse {:?}/{} vs oracle {:?}/{}",
            got.point,
            got.inlier_count,
            p,
            count
        );
    }
    // Outlier rejection at up to 30% outliers beyond 3 tau.
    for case in 0..1000 {
        let n_in = rng.random_range(5..=35);
        let n_out = rng.random_range(0..=(3 * n_in / 7));
        let truth = Vec3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), -0.1);
        let mut est = Vec::new();
        for i in 0..n_in {
            let dir: Vec3 = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let dir = dir.try_normalize().unwrap_or(Vec3::NORTH);
            est.push(TargetEstimate { point: truth + dir * rng.random_range(0.0..tau / 2.0), timestamp: Timestamp(i as u64) });
        }
        let inlier_mean = est.iter().fold(Vec3::ZERO, |s, e| s + e.point) / n_in as f64;
        for j in 0..n_out {
            let dir = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                .try_normalize()
                .unwrap_or(Vec3::EAST);
            est.push(TargetEstimate {
                point: truth + dir * rng.random_range(3.5 * tau..1.0),
                timestamp: Timestamp((n_in + j) as u64),
            });
        }
        let got = ransac_fuse(&est, tau).map_err(|e| e.to_string())?;
        ensure!(
            got.point.distance(inlier_mean) <= tau / 2.0,
            "case {case}: fused {:?} is {:.4} from inlier mean",
            got.point,
            got.point.distance(inlier_mean)
        );
    }
    Ok("1000/1000 oracle matches; 1000/1000 outlier cases within tau/2".into())
}

fn angle_deg(a: Vec3, b: Vec3) -> f64 {
    a.dot(b).abs().min(1.0).acos().to_degrees()
}

fn c8_planner_geometry() -> Outcome {
    let params = PlannerParams::default();
    let cases: [(&str, Archetype, Option<Vec3>); 4] = [
        ("upright bottle", Archetype::BottleUpright, Some(Vec3::DOWN)),
        ("sideways bottle", Archetype::BottleSideways, Some(Vec3::EAST)),
        ("sphere", Archetype::Ball, None),
        ("box", Archetype::Pouch, Some(Vec3::EAST)),
    ];
    let mut report = Vec::new();
    for (i, (name, a, axis)) in cases.iter().enumerate() {
        let shape = a.object_at(0.7, -0.4).shape();
        let cloud = PointCloud::from_points(sample_surface(&shape, 20_000, 80 + i as u64));
        let plan = plan_grasp(&cloud, &params).map_err(|e| format!("{name}: {e}"))?;
        let err = plan.grasp_point.distance(shape.center());
        ensure!(err <= 0.02, "{name}: grasp point {:.4} m from centroid", err);
        match axis {
            Some(axis) => {
                let ang = angle_deg(plan.cutting_normal, *axis);
                ensure!(ang <= 2.0, "{name}: normal {ang:.2} deg from longest axis");
                report.push(format!("{name} {:.1} mm/{ang:.2} deg", 1e3 * err));
            }
            None => report.push(format!("{name} {:.1} mm", 1e3 * err)),
        }
    }
    // Half-view cylinders seen from a horizontal sensor.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_ratio = f64::INFINITY;
    for case in 0..10 {
        let shape = Archetype::BottleUpright.object_at(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).shape();
        let c = shape.center();
        let bearing: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let h = Vec3::new(bearing.cos(), bearing.sin(), 0.0);
        let sensor = c + h * 1.5;
        let visible: Vec<Vec3> = sample_surface(&shape, 20_000, 90 + case)
            .into_iter()
            .filter(|p| (*p - c).dot(h) >= 0.0)
            .collect();
        let partial = PointCloud::from_points(visible).with_sensor_origin(sensor);
        let on = plan_grasp(&partial, &params).map_err(|e| e.to_string())?;
        let off = plan_grasp(&partial, &PlannerParams { symmetry_mode: SymmetryMode::Off, ..params })
            .map_err(|e| e.to_string())?;
        let (e_on, e_off) = (on.grasp_point.distance(c), off.grasp_point.distance(c));
        let ratio = e_off / e_on.max(1e-12);
        worst_ratio = worst_ratio.min(ratio);
        ensure!(ratio >= 3.0, "half view {case}: completion error {e_on:.4} vs off {e_off:.4} (ratio {ratio:.2})");
    }
    Ok(format!("{}; half-view completion reduces error by >= {worst_ratio:.1}x", report.join(", ")))
}

/// Distance from a local-frame point to the primitive surface.
fn surface_distance(kind: &ShapeKind, p: Vec3) -> f64 {
    match *kind {
        ShapeKind::Box { extents } => {
            let q = [p.x.abs() - extents[0] / 2.0, p.y.abs() - extents[1] / 2.0, p.z.abs() - extents[2] / 2.0];
            let outside = Vec3::new(q[0].max(0.0), q[1].max(0.0), q[2].max(0.0)).norm();
            let inside = q[0].max(q[1]).max(q[2]).min(0.0);
            (outside + inside).abs()
        }
        ShapeKind::Cylinder { radius, height } => {
            let d = (p.x.hypot(p.y) - radius, p.z.abs() - height / 2.0);
            let outside = d.0.max(0.0).hypot(d.1.max(0.0));
            (outside + d.0.max(d.1).min(0.0)).abs()
        }
        ShapeKind::Sphere { radius } => (p.norm() - radius).abs(),
        ShapeKind::Capsule { radius, height } => {
            let a = height / 2.0 - radius;
            (p.distance(Vec3::new(0.0, 0.0, p.z.clamp(-a, a))) - radius).abs()
        }
    }
}

fn c9_perception_round_trip() -> Outcome {
    let k = CameraIntrinsics::default();
    let kinds = [
        ("box", ShapeKind::Box { extents: [0.2, 0.12, 0.15] }),
        ("cylinder", ShapeKind::Cylinder { radius: 0.06, height: 0.25 }),
        ("sphere", ShapeKind::Sphere { radius: 0.08 }),
        ("capsule", ShapeKind::Capsule { radius: 0.05, height: 0.24 }),
    ];
    let cam_poses = [
        Pose::new(UnitQuaternion::from_euler(0.0, 0.0, 0.0), Vec3::ZERO),
        Pose::new(UnitQuaternion::from_euler(0.2, -0.1, 0.3), Vec3::new(0.05, -0.02, 0.0)),
    ];
    let mut report = Vec::new();
    for (name, kind) in kinds {
        let mut worst = 0.0f64;
        for (j, cam) in cam_poses.iter().enumerate() {
            // Object about 1 m in front of the camera, tilted.
            let obj_pose = Pose::new(
                UnitQuaternion::from_euler(0.4, 0.7 + j as f64 * 0.3, 0.2),
                cam.transform_point(Vec3::new(0.05, -0.03, 1.0)),
            );
            let shape = PrimitiveShape::new(kind, obj_pose);
            let scene = [shape];
            let depth = render_depth(&scene, 50.0, &k, cam);
            let mask = render_mask(0, &scene, 50.0, &k, cam);
            let cloud = back_project_mask(&depth, &mask, &k, cam).map_err(|e| e.to_string())?;
            let inv = obj_pose.inverse();
            let mut d: Vec<f64> = cloud.points.iter().map(|p| surface_distance(&kind, inv.transform_point(*p))).collect();
            d.sort_by(|a, b| a.total_cmp(b));
            let p95 = d[(0.95 * (d.len() - 1) as f64).round() as usize];
            ensure!(d.len() > 1000, "{name}: only {} points", d.len());
            ensure!(p95 <= 0.003, "{name}: 95th percentile {:.2} mm", 1e3 * p95);
            worst = worst.max(p95);
        }
        report.push(format!("{name} {:.2} mm", 1e3 * worst));
    }
    Ok(format!("p95 point-to-surface: {}", report.join(", ")))
}

fn c10_determinism() -> Outcome {
    let cfg = Archetype::KitchenRoll.scenario(42);
    let a = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let b = run_scenario(&cfg).map_err(|e| e.to_string())?;
    let (fa, fb) = (a.files(), b.files());
    ensure!(fa == fb, "RunLog files differ between identical runs");
    let bytes: usize = fa.iter().map(|(_, b)| b.len()).sum();

    let back = tum::parse(&tum::to_string(&a.estimate)).map_err(|e| e.to_string())?;
    ensure!(back.len() == a.estimate.len(), "TUM length changed");
    for (x, y) in back.samples.iter().zip(&a.estimate.samples) {
        let bits = |s: &TrajSample| {
            let (p, q) = (s.pose.translation, s.pose.rotation);
            [s.t, p.x, p.y, p.z, q.x, q.y, q.z, q.w].map(f64::to_bits)
        };
        ensure!(bits(x) == bits(y), "TUM round trip changed bits at t={}", y.t);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pts: Vec<Vec3> = (0..5000)
        .map(|_| Vec3::new(rng.random_range(-1e3..1e3), rng.random::<f64>() * 1e-7, -rng.random::<f64>()))
        .collect();
    let cloud = PointCloud::from_points(pts);
    let back = ply::parse(&ply::to_string(&cloud)).map_err(|e| e.to_string())?;
    ensure!(back.points.len() == cloud.points.len(), "PLY length changed");
    for (x, y) in back.points.iter().zip(&cloud.points) {
        ensure!(x.to_array().map(f64::to_bits) == y.to_array().map(f64::to_bits), "PLY round trip changed bits");
    }
    Ok(format!("identical RunLogs ({bytes} bytes); TUM and PLY bit-exact"))
}

fn c11_state_machine() -> Outcome {
    mission_script::exercise_every_edge();
    mission_script::fuzz_transitions(300, 11);
    Ok(format!("all {} edges exercised incl. frame-budget and retry aborts; 300 fuzzed sequences stayed on the graph", TRANSITIONS.len()))
}

fn main() {
    let started = Instant::now();
    let mut failures = 0;
    let mut report_line = |n: usize, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {n:>2} PASS  {title} [{secs:.1} s]: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n:>2} FAIL  {title} [{secs:.1} s]: {detail}");
            }
        }
    };
    report_line(1, "noise-free end-to-end grasping", &mut c1_noise_free_grasping);
    let mut batch = None;
    report_line(2, "calibrated-noise success band", &mut || {
        let r = batch.insert(calibrated_batch());
        c2_success_band(r)
    });
    report_line(3, "failure-mode classification", &mut || match &batch {
        Some(r) => c3_failure_modes(r),
        None => Err("criterion 2 batch did not complete".into()),
    });
    report_line(4, "localization noise calibration", &mut c4_rpe_calibration);
    report_line(5, "Umeyama exactness", &mut c5_umeyama);
    report_line(6, "RPE closed form", &mut c6_rpe_drift);
    report_line(7, "RANSAC oracle equivalence", &mut c7_ransac_oracle);
    report_line(8, "grasp-planner geometry", &mut c8_planner_geometry);
    report_line(9, "perception round trip", &mut c9_perception_round_trip);
    report_line(10, "determinism", &mut c10_determinism);
    report_line(11, "mission state machine", &mut c11_state_machine);
    println!(
        "acceptance: {} of 11 criteria passed in {:.1} s",
        11 - failures,
        started.elapsed().as_secs_f64()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
