use serde::{Deserialize, Serialize};

use super::{umeyama_align, AlignMode, AlignmentResult, EvalError, Trajectory};
use crate::se3::relative_pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpeResult {
    /// Start time of each pair `(i, i + delta)`.
    pub times: Vec<f64>,
    /// Translation norm of each relative error, meters.
    pub series: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AteResult {
    pub rmse: f64,
    pub mean: f64,
    pub max: f64,
    pub alignment: AlignmentResult,
}

fn stats(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let max = xs.iter().copied().fold(0.0, f64::max);
    let rmse = (xs.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    (mean, max, rmse)
}

/// Translational relative pose error over steps of `delta` samples, on
/// paired trajectories. `E_i = rel(rel(Q_i, Q_i+d), rel(P_i, P_i+d))` with `Q`
/// the reference and `P` the estimate.
pub fn rpe_translational(
    estimate: &Trajectory,
    reference: &Trajectory,
    delta: usize,
) -> Result<RpeResult, EvalError> {
    if estimate.len() != reference.len() {
        return Err(EvalError::LengthMismatch(estimate.len(), reference.len()));
    }
    if delta == 0 {
        return Err(EvalError::InvalidArgument("delta must be at least 1".into()));
    }
    let n = estimate.len();
    if n <= delta {
        return Err(EvalError::InsufficientSamples { needed: delta + 1, got: n });
    }
    let (p, q) = (&estimate.samples, &reference.samples);
    let mut times = Vec::with_capacity(n - delta);
    let mut series = Vec::with_capacity(n - delta);
    for i in 0..n - delta {
        let dq = relative_pose(&q[i].pose, &q[i + delta].pose);
        let dp = relative_pose(&p[i].pose, &p[i + delta].pose);
        series.push(relative_pose(&dq, &dp).translation.norm());
        times.push(q[i].t);
    }
    let (mean, max, rmse) = stats(&series);
    Ok(RpeResult { times, series, mean, max, rmse })
}

/// Absolute trajectory error: residual statistics of paired positions after
/// aligning the estimate onto the reference.
pub fn ate(
    estimate: &Trajectory,
    reference: &Trajectory,
    mode: AlignMode,
) -> Result<AteResult, EvalError> {
    let alignment = umeyama_align(estimate, reference, mode)?;
    let res: Vec<f64> = estimate
        .samples
        .iter()
        .zip(&reference.samples)
        .map(|(e, r)| alignment.apply_point(e.pose.translation).distance(r.pose.translation))
        .collect();
    let (mean, max, rmse) = stats(&res);
    Ok(AteResult { rmse, mean, max, alignment })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::TrajSample;
    use crate::se3::{Pose, UnitQuaternion, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wiggly(n: usize, seed: u64) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pos = Vec3::ZERO;
        let samples = (0..n)
            .map(|i| {
                pos += Vec3::new(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1), rng.random_range(-0.05..0.05));
                let q = UnitQuaternion::from_euler(0.1 * (i as f64 * 0.1).sin(), 0.05, i as f64 * 0.02);
                TrajSample { t: i as f64 / 30.0, pose: Pose::new(q, pos) }
            })
            .collect();
        Trajectory { samples }
    }

    #[test]
    fn identical_is_zero() {
        let r = wiggly(100, 1);
        let rpe = rpe_translational(&r, &r, 1).unwrap();
        assert!(rpe.max < 1e-12);
        let a = ate(&r, &r, AlignMode::Rigid).unwrap();
        assert!(a.rmse < 1e-9);
        assert!(matches!(rpe_translational(&r, &r, 100), Err(EvalError::InsufficientSamples { .. })));
    }

    #[test]
    fn constant_drift_gives_its_norm() {
        let r = wiggly(200, 2);
        let d = Vec3::new(0.013, -0.004, 0.002);
        let e = Trajectory {
            samples: r
                .samples
                .iter()
                .enumerate()
                .map(|(i, s)| TrajSample { t: s.t, pose: Pose::new(s.pose.rotation, s.pose.translation + d * i as f64) })
                .collect(),
        };
        let rpe = rpe_translational(&e, &r, 1).unwrap();
        assert!((rpe.mean - d.norm()).abs() < 1e-9);
        assert!(rpe.series.iter().all(|x| (x - d.norm()).abs() < 1e-9));
    }

    #[test]
    fn constant_offset_and_sinusoid_ate() {
        let r = wiggly(200, 3);
        let off = r.transformed(&Pose::new(UnitQuaternion::from_yaw(0.7), Vec3::new(3.0, -1.0, 2.0)));
        assert!(ate(&off, &r, AlignMode::Rigid).unwrap().rmse < 1e-9);

        // Large circle with a fast vertical sinusoid: alignment cannot absorb it.
        let a = 0.05;
        let n = 20_000;
        let mk = |amp: f64| Trajectory {
            samples: (0..n)
                .map(|i| {
                    let s = i as f64 / n as f64 * std::f64::consts::TAU;
                    let p = Vec3::new(20.0 * s.cos(), 20.0 * s.sin(), amp * (97.0 * s).sin());
                    TrajSample { t: i as f64, pose: Pose::from_translation(p) }
                })
                .collect(),
        };
        let res = ate(&mk(a), &mk(0.0), AlignMode::Rigid).unwrap();
        assert!((res.rmse / (a / 2f64.sqrt()) - 1.0).abs() < 0.02, "{}", res.rmse);
    }

    #[test]
    fn metrics_invariant_under_rigid_pretransform() {
        let r = wiggly(150, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noisy = Trajectory {
            samples: r
                .samples
                .iter()
                .map(|s| {
                    let j = Vec3::new(rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02), rng.random_range(-0.02..0.02));
                    TrajSample { t: s.t, pose: Pose::new(s.pose.rotation, s.pose.translation + j) }
                })
                .collect(),
        };
        let g = Pose::new(UnitQuaternion::from_euler(0.3, -0.5, 2.0), Vec3::new(10.0, -4.0, 1.0));
        let moved = noisy.transformed(&g);
        let (a0, a1) = (ate(&noisy, &r, AlignMode::Rigid).unwrap(), ate(&moved, &r, AlignMode::Rigid).unwrap());
        assert!((a0.rmse - a1.rmse).abs() < 1e-9);
        let (r0, r1) = (rpe_translational(&noisy, &r, 1).unwrap(), rpe_translational(&moved, &r, 1).unwrap());
        assert!((r0.mean - r1.mean).abs() < 1e-9 && (r0.max - r1.max).abs() < 1e-9);
        assert!(r0.mean > 0.0 && a0.rmse > 0.0);
    }
}
