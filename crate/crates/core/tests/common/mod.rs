#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use convradon::operators::adjoint_gap;
use convradon::weights::{intersection_length, pixel_weight, Line};
use convradon::{forward, Geometry, Image, Sinogram, WeightFunction, WeightKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(geom: &Geometry, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Image {
    let v = (0..geom.image.len())
        .map(|_| rng.gen_range(lo..hi))
        .collect();
    Image::from_values(geom.image, v).unwrap()
}

pub fn random_sinogram(geom: &Geometry, rng: &mut ChaCha8Rng) -> Sinogram {
    let v = (0..geom.angles.len() * geom.detector.n())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    Sinogram::from_values(geom.angles.clone(), geom.detector, v).unwrap()
}

/// Worst per-cell relative deviation between the ray-driven forward
/// projection and the sum of pixel chord lengths, over `images` random
/// nonnegative images. Cells the oracle leaves empty must be exactly zero.
pub fn exact_rd_worst(geom: &Geometry, images: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let w = WeightFunction::for_geometry(WeightKind::RayDriven, geom);
    let grid = geom.image;
    let n = grid.n();
    // chord lengths do not depend on the image
    let mut chords = Vec::with_capacity(geom.angles.len() * geom.detector.n());
    for &phi in geom.angles.angles() {
        for s in geom.detector.centers() {
            let line = Line::new(phi, s);
            let row: Vec<(usize, f64)> = (0..n * n)
                .filter_map(|k| {
                    let c = grid.center(k / n, k % n).unwrap();
                    let len = intersection_length(c, grid.delta(), line);
                    (len > 0.0).then_some((k, len))
                })
                .collect();
            chords.push(row);
        }
    }
    let mut worst: f64 = 0.0;
    for _ in 0..images {
        let f = random_image(geom, &mut rng, 0.0, 1.0);
        let g = forward(geom, &w, &f).unwrap();
        for (cell, row) in chords.iter().enumerate() {
            let want: f64 = row.iter().map(|&(k, len)| f.values()[k] * len).sum();
            let got = g.values()[cell];
            let dev = if want == 0.0 {
                if got == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (got - want).abs() / want.abs()
            };
            worst = worst.max(dev);
        }
    }
    worst
}

/// Worst relative deviation of `Σ_p w^pd(x·ϑ − s_p)` from `1/δ_s` and the
/// largest number of nonzero summands, over random points and directions
/// with `|x·ϑ| ≤ 1 − 3δ_s/2`.
pub fn partition_worst(samples: usize, seed: u64) -> (f64, usize) {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    let mut most = 0;
    for _ in 0..samples {
        let n_s = rng.gen_range(8..=400);
        let ds = 2.0 / n_s as f64;
        let phi = rng.gen_range(0.0..std::f64::consts::PI);
        let limit = 1.0 - 1.5 * ds;
        let (x, y) = loop {
            let x = rng.gen_range(-1.0..1.0);
            let y = rng.gen_range(-1.0..1.0);
            if (x * phi.cos() + y * phi.sin()).abs() <= limit {
                break (x, y);
            }
        };
        let t = x * phi.cos() + y * phi.sin();
        let mut sum = 0.0;
        let mut nonzero = 0;
        for p in 0..n_s {
            let v = pixel_weight(t - ((p as f64 + 0.5) * ds - 1.0), ds).unwrap();
            if v != 0.0 {
                nonzero += 1;
            }
            sum += v;
        }
        worst = worst.max((sum * ds - 1.0).abs());
        most = most.max(nonzero);
    }
    (worst, most)
}

pub const ADJOINT_GEOMETRIES: [(usize, usize, usize, f64); 3] =
    [(16, 16, 12, 0.0), (24, 40, 17, 0.25), (40, 20, 30, 0.5)];

/// Largest relative adjoint gap over `trials` random pairs per geometry and
/// weight kind.
pub fn adjoint_worst(trials: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for (nx, ns, nphi, off) in ADJOINT_GEOMETRIES {
        let geom = Geometry::uniform(nx, ns, nphi, off).unwrap();
        for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
            let w = WeightFunction::for_geometry(kind, &geom);
            for _ in 0..trials {
                let f = random_image(&geom, &mut rng, -1.0, 1.0);
                let g = random_sinogram(&geom, &mut rng);
                let gap = adjoint_gap(&geom, &w, &f, &g).unwrap();
                assert!(gap.relative);
                worst = worst.max(gap.value);
            }
        }
    }
    worst
}
