//! Mask corruption used to imitate imperfect segmentation boundaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::SegmentationMask;

/// One step of 3x3 morphology. Pixels outside the image count as unset.
fn morph_step(m: &SegmentationMask, dilate: bool) -> SegmentationMask {
    let (w, h) = (m.width as isize, m.height as isize);
    let mut out = m.clone();
    for v in 0..h {
        for u in 0..w {
            let mut any = false;
            let mut all = true;
            for dv in -1..=1 {
                for du in -1..=1 {
                    let (x, y) = (u + du, v + dv);
                    let on = x >= 0 && y >= 0 && x < w && y < h && m.get(x as usize, y as usize);
                    any |= on;
                    all &= on;
                }
            }
            out.set(u as usize, v as usize, if dilate { any } else { all });
        }
    }
    out
}

pub fn erode(m: &SegmentationMask, px: usize) -> SegmentationMask {
    (0..px).fold(m.clone(), |acc, _| morph_step(&acc, false))
}

pub fn dilate(m: &SegmentationMask, px: usize) -> SegmentationMask {
    (0..px).fold(m.clone(), |acc, _| morph_step(&acc, true))
}

/// Pixels with at least one 4-neighbor of the opposite value.
pub fn boundary(m: &SegmentationMask) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for v in 0..m.height {
        for u in 0..m.width {
            let here = m.get(u, v);
            let differs = (u > 0 && m.get(u - 1, v) != here)
                || (u + 1 < m.width && m.get(u + 1, v) != here)
                || (v > 0 && m.get(u, v - 1) != here)
                || (v + 1 < m.height && m.get(u, v + 1) != here);
            if differs {
                out.push((u, v));
            }
        }
    }
    out
}

/// Erodes `erode_px` times, dilates `dilate_px` times, then flips each
/// boundary pixel of the result independently with probability `flip_rate`.
/// `flip_rate` is clamped to `[0, 1)`.
pub fn corrupt_mask(
    m: &SegmentationMask,
    erode_px: usize,
    dilate_px: usize,
    flip_rate: f64,
    seed: u64,
) -> SegmentationMask {
    let mut out = dilate(&erode(m, erode_px), dilate_px);
    let p = if flip_rate.is_finite() { flip_rate.clamp(0.0, 1.0 - f64::EPSILON) } else { 0.0 };
    if p > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (u, v) in boundary(&out) {
            if rng.random::<f64>() < p {
                let cur = out.get(u, v);
                out.set(u, v, !cur);
            }
        }
    }
    out
}
