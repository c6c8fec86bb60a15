//! Seeded synthetic instances: random grid energies for solver tests and
//! geometric segmentation scenes with exact ground-truth masks.
//!
//! Scenes are one bright shape on a darker background plus a few bright
//! distractor blobs and pixel noise. The distractors match the foreground
//! closely enough that an unconstrained cut picks some of them up, which is
//! what statistic constraints are meant to clean up.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{grid_edges, Labeling, PairwiseEnergy};
use crate::imaging::{save_mask_png, write_pgm, IntensityImage, Mask};
use crate::Result;

/// Random grid energy with unaries in `[-5, 5]` and pairwise weights in
/// `[0, 3]`, the stock test instance family.
pub fn random_grid_energy(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> PairwiseEnergy {
    let unary = (0..rows * cols)
        .map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
        .collect();
    let edges = grid_edges(cols, rows)
        .into_iter()
        .map(|(i, j)| (i, j, rng.gen_range(0.0..3.0)))
        .collect();
    PairwiseEnergy::new(unary, edges).expect("generated energies are valid")
}

/// A random nonempty target labeling, used to derive satisfiable bounds.
pub fn random_nonempty_labeling(n: usize, rng: &mut ChaCha8Rng) -> Labeling {
    loop {
        let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        if bits.iter().any(|&b| b) {
            return Labeling::new(bits);
        }
    }
}

/// One synthetic segmentation problem.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub image: IntensityImage,
    pub mask: Mask,
}

const BG_LEVEL: f64 = 0.30;
const FG_LEVEL: f64 = 0.68;
const DISTRACTOR_LEVEL: f64 = 0.62;
const NOISE_SIGMA: f64 = 0.055;

/// Deterministically generates a `size x size` scene from a seed: one main
/// shape (circle or rectangle) as ground truth, plus 3-6 bright distractor
/// blobs in the background and Gaussian pixel noise.
pub fn scene(size: usize, seed: u64) -> SyntheticScene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let mut fg = vec![false; size * size];

    let cx = rng.gen_range(0.38 * s..0.62 * s);
    let cy = rng.gen_range(0.38 * s..0.62 * s);
    if rng.gen_bool(0.5) {
        let radius = rng.gen_range(0.18 * s..0.27 * s);
        stamp_disk(&mut fg, size, cx, cy, radius, true);
    } else {
        let half_w = rng.gen_range(0.14 * s..0.24 * s);
        let half_h = rng.gen_range(0.14 * s..0.24 * s);
        for r in 0..size {
            for c in 0..size {
                if (c as f64 - cx).abs() <= half_w && (r as f64 - cy).abs() <= half_h {
                    fg[r * size + c] = true;
                }
            }
        }
    }

    let mut distractors = vec![false; size * size];
    let blob_count = rng.gen_range(3..=6);
    let mut placed = 0;
    for _ in 0..200 {
        if placed == blob_count {
            break;
        }
        let radius = rng.gen_range(0.035 * s..0.07 * s).max(1.5);
        let bx = rng.gen_range(radius..s - radius);
        let by = rng.gen_range(radius..s - radius);
        // Keep blobs clear of the object so the ground truth stays one shape.
        let margin = radius + 0.06 * s;
        let near_object = (0..size).step_by(2).any(|r| {
            (0..size).step_by(2).any(|c| {
                fg[r * size + c]
                    && ((c as f64 - bx).powi(2) + (r as f64 - by).powi(2)).sqrt() < margin
            })
        });
        if near_object {
            continue;
        }
        stamp_disk(&mut distractors, size, bx, by, radius, true);
        placed += 1;
    }

    let mut pixels = Vec::with_capacity(size * size);
    for idx in 0..size * size {
        let base = if fg[idx] {
            FG_LEVEL
        } else if distractors[idx] {
            DISTRACTOR_LEVEL
        } else {
            BG_LEVEL
        };
        let noise: f64 = {
            // Box-Muller from two uniforms.
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        pixels.push((base + NOISE_SIGMA * noise).clamp(0.0, 1.0));
    }

    SyntheticScene {
        image: IntensityImage::new(size, size, pixels).expect("scene dimensions are valid"),
        mask: Mask::new(size, size, fg).expect("scene dimensions are valid"),
    }
}

fn stamp_disk(bits: &mut [bool], size: usize, cx: f64, cy: f64, radius: f64, value: bool) {
    let r0 = ((cy - radius).floor().max(0.0)) as usize;
    let r1 = ((cy + radius).ceil().min(size as f64 - 1.0)) as usize;
    for r in r0..=r1 {
        for c in 0..size {
            let d2 = (c as f64 - cx).powi(2) + (r as f64 - cy).powi(2);
            if d2 <= radius * radius {
                bits[r * size + c] = value;
            }
        }
    }
}

/// Writes `count` scenes per size into `dir` as `scene_<size>_<k>.pgm` with
/// `scene_<size>_<k>.gt.png` masks. Returns the (image, mask) path pairs.
pub fn write_dataset(
    dir: impl AsRef<Path>,
    count: usize,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<(PathBuf, PathBuf)>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut pairs = Vec::new();
    for &size in sizes {
        for k in 0..count {
            let sc = scene(size, seed ^ ((size as u64) << 32) ^ k as u64);
            let img_path = dir.join(format!("scene_{size}_{k}.pgm"));
            let mask_path = dir.join(format!("scene_{size}_{k}.gt.png"));
            let mut file = std::fs::File::create(&img_path)?;
            write_pgm(&sc.image, &mut file)?;
            save_mask_png(&sc.mask, &mask_path)?;
            pairs.push((img_path, mask_path));
        }
    }
    Ok(pairs)
}
