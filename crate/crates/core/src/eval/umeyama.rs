use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{EvalError, TrajSample, Trajectory};
use crate::se3::{Pose, UnitQuaternion, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMode {
    #[default]
    Rigid,
    Similarity,
}

/// Transform `x -> scale * R x + t` taking estimate positions onto reference
/// positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub rotation: UnitQuaternion,
    pub translation: Vec3,
    pub scale: f64,
    pub rmse_after: f64,
}

impl AlignmentResult {
    pub fn apply_point(&self, p: Vec3) -> Vec3 {
        self.rotation.rotate(p) * self.scale + self.translation
    }

    /// Maps a pose into the reference frame. Orientation is rotated; the
    /// position is scaled, rotated and shifted.
    pub fn apply_pose(&self, p: &Pose) -> Pose {
        Pose::new(self.rotation.mul(p.rotation), self.apply_point(p.translation))
    }

    pub fn apply(&self, tr: &Trajectory) -> Trajectory {
        Trajectory {
            samples: tr
                .samples
                .iter()
                .map(|s| TrajSample { t: s.t, pose: self.apply_pose(&s.pose) })
                .collect(),
        }
    }
}

fn nv(v: Vec3) -> Vector3<f64> {
    Vector3::new(v.x, v.y, v.z)
}

/// Closed-form least-squares alignment of paired positions (Umeyama 1991):
/// SVD of the cross-covariance with a determinant sign correction.
pub fn umeyama_align(
    estimate: &Trajectory,
    reference: &Trajectory,
    mode: AlignMode,
) -> Result<AlignmentResult, EvalError> {
    if estimate.len() != reference.len() {
        return Err(EvalError::LengthMismatch(estimate.len(), reference.len()));
    }
    let n = estimate.len();
    if n < 3 {
        return Err(EvalError::InsufficientSamples { needed: 3, got: n });
    }
    let p: Vec<Vector3<f64>> = estimate.samples.iter().map(|s| nv(s.pose.translation)).collect();
    let q: Vec<Vector3<f64>> = reference.samples.iter().map(|s| nv(s.pose.translation)).collect();
    let nf = n as f64;
    let mu_p = p.iter().sum::<Vector3<f64>>() / nf;
    let mu_q = q.iter().sum::<Vector3<f64>>() / nf;
    let mut cov = Matrix3::zeros();
    let mut var_p = 0.0;
    for (pi, qi) in p.iter().zip(&q) {
        let (dp, dq) = (pi - mu_p, qi - mu_q);
        cov += dq * dp.transpose();
        var_p += dp.norm_squared();
    }
    cov /= nf;
    var_p /= nf;

    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    if !sv[0].is_finite() || sv[0] <= 0.0 || sv[1] <= 1e-12 * sv[0] || var_p <= 0.0 {
        return Err(EvalError::DegenerateGeometry);
    }
    let mut s = Matrix3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        // Flip the axis of the smallest singular value.
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("three values");
        s[(imin, imin)] = -1.0;
    }
    let r = u * s * v_t;
    let scale = match mode {
        AlignMode::Rigid => 1.0,
        AlignMode::Similarity => {
            let d = Matrix3::from_diagonal(&svd.singular_values);
            (d * s).trace() / var_p
        }
    };
    let t = mu_q - r * mu_p * scale;
    let rows = [
        [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
        [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
        [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
    ];
    let mut out = AlignmentResult {
        rotation: UnitQuaternion::from_matrix(rows),
        translation: Vec3::new(t[0], t[1], t[2]),
        scale,
        rmse_after: 0.0,
    };
    let sq: f64 = estimate
        .samples
        .iter()
        .zip(&reference.samples)
        .map(|(e, r)| out.apply_point(e.pose.translation).distance(r.pose.translation).powi(2))
        .sum();
    out.rmse_after = (sq / nf).sqrt();
    Ok(out)
}
