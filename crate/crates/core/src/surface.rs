//! Area-uniform random sampling of primitive surfaces.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::camera::{PrimitiveShape, ShapeKind};
use crate::se3::Vec3;

/// Total surface area in square meters.
pub fn surface_area(kind: &ShapeKind) -> f64 {
    match *kind {
        ShapeKind::Box { extents: [a, b, c] } => 2.0 * (a * b + b * c + a * c),
        ShapeKind::Cylinder { radius, height } => 2.0 * PI * radius * (radius + height),
        ShapeKind::Sphere { radius } => 4.0 * PI * radius * radius,
        ShapeKind::Capsule { radius, height } => {
            2.0 * PI * radius * (height - 2.0 * radius) + 4.0 * PI * radius * radius
        }
    }
}

fn unit_sphere(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if let Some(u) = v.try_normalize() {
            return u;
        }
    }
}

fn sample_local(kind: &ShapeKind, rng: &mut ChaCha8Rng) -> Vec3 {
    match *kind {
        ShapeKind::Sphere { radius } => unit_sphere(rng) * radius,
        ShapeKind::Box { extents } => {
            let [a, b, c] = extents;
            let areas = [b * c, a * c, a * b];
            let total: f64 = areas.iter().sum();
            let mut pick = rng.random_range(0.0..total);
            let mut axis = 2;
            for (i, &ar) in areas.iter().enumerate() {
                if pick < ar {
                    axis = i;
                    break;
                }
                pick -= ar;
            }
            let mut p = [0.0; 3];
            for i in 0..3 {
                p[i] = if i == axis {
                    if rng.random::<bool>() { 0.5 * extents[i] } else { -0.5 * extents[i] }
                } else {
                    rng.random_range(-0.5..0.5) * extents[i]
                };
            }
            Vec3::from_array(p)
        }
        ShapeKind::Cylinder { radius, height } => {
            let side = 2.0 * PI * radius * height;
            let cap = PI * radius * radius;
            let pick = rng.random_range(0.0..side + 2.0 * cap);
            let a = rng.random_range(0.0..2.0 * PI);
            if pick < side {
                let z = rng.random_range(-0.5..0.5) * height;
                Vec3::new(radius * a.cos(), radius * a.sin(), z)
            } else {
                let rr = radius * rng.random::<f64>().sqrt();
                let z = if pick < side + cap { -0.5 * height } else { 0.5 * height };
                Vec3::new(rr * a.cos(), rr * a.sin(), z)
            }
        }
        ShapeKind::Capsule { radius, height } => {
            let hh = 0.5 * height - radius;
            let side = 2.0 * PI * radius * 2.0 * hh;
            let ends = 4.0 * PI * radius * radius;
            if rng.random_range(0.0..side + ends) < side {
                let a = rng.random_range(0.0..2.0 * PI);
                Vec3::new(radius * a.cos(), radius * a.sin(), rng.random_range(-hh..=hh))
            } else {
                let u = unit_sphere(rng) * radius;
                let shift = if u.z >= 0.0 { hh } else { -hh };
                Vec3::new(u.x, u.y, u.z + shift)
            }
        }
    }
}

/// `n` world-frame points distributed uniformly by area over the surface.
pub fn sample_surface(shape: &PrimitiveShape, n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| shape.pose.transform_point(sample_local(&shape.kind, &mut rng))).collect()
}
