mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use proptest::prelude::*;

use convradon::operators::assemble_sparse;
use convradon::weights::{intersection_length, pixel_weight, ray_weight, Line, RayWeightParams};
use convradon::{backproject, forward, Geometry, Image, WeightFunction, WeightKind};

#[test]
fn ray_driven_forward_is_exact_for_pixel_images() {
    for nx in [16, 64] {
        let geom = Geometry::uniform(nx, nx, 12, 0.0).unwrap();
        let worst = common::exact_rd_worst(&geom, 50, nx as u64);
        assert!(worst <= 1e-10, "n_x={nx}: {worst:e}");
    }
    // unbalanced detector and shifted angles
    let geom = Geometry::uniform(16, 27, 9, 0.3).unwrap();
    assert!(common::exact_rd_worst(&geom, 10, 1) <= 1e-10);
}

#[test]
fn hat_weights_partition_unity() {
    let (worst, most) = common::partition_worst(10_000, 7);
    assert!(worst <= 1e-12, "{worst:e}");
    assert!(most <= 2);
}

#[test]
fn adjoint_identity() {
    let worst = common::adjoint_worst(100, 11);
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn ray_weight_matches_chords_on_a_grid() {
    let dx = 0.1;
    let mut worst: f64 = 0.0;
    for a in 0..1000 {
        let phi = PI * a as f64 / 1000.0;
        for b in 0..1000 {
            // offset grid keeps t off the branch boundaries
            let t = dx * (2.0 * (b as f64 + 0.37) / 1000.0 - 1.0);
            let w = ray_weight(phi, t, dx).unwrap();
            let len = intersection_length([0.0, 0.0], dx, Line::new(phi, t));
            worst = worst.max((dx * dx * w - len).abs());
        }
    }
    assert!(worst <= 1e-10, "{worst:e}");
}

/// Midpoint rule on each piece between consecutive breakpoints, so jumps
/// and kinks never fall inside a subinterval.
fn piecewise_midpoint(f: impl Fn(f64) -> f64, breaks: &[f64], m: usize) -> f64 {
    breaks
        .windows(2)
        .map(|w| {
            let h = (w[1] - w[0]) / m as f64;
            h * (0..m).map(|k| f(w[0] + (k as f64 + 0.5) * h)).sum::<f64>()
        })
        .sum()
}

#[test]
fn weights_integrate_to_one() {
    let dx = 0.05;
    for phi in [0.0, 0.1, 0.5, PI / 4.0, 1.0, FRAC_PI_2, 2.0, 3.0] {
        let k = RayWeightParams::new(phi, dx);
        let breaks = [-dx, -k.s_bar, -k.s_under, k.s_under, k.s_bar, dx];
        let total = piecewise_midpoint(|t| ray_weight(phi, t, dx).unwrap(), &breaks, 200_000);
        assert!((total - 1.0).abs() <= 1e-8, "phi={phi}: {total}");
    }
    let ds = 0.02;
    let total = piecewise_midpoint(|t| pixel_weight(t, ds).unwrap(), &[-ds, 0.0, ds], 200_000);
    assert!((total - 1.0).abs() <= 1e-8);
}

#[test]
fn sparse_apply_matches_operators_bitwise() {
    let mut rng = common::rng(3);
    for kind in [WeightKind::RayDriven, WeightKind::PixelDriven] {
        let geom = Geometry::uniform(32, 32, 18, 0.0).unwrap();
        let w = WeightFunction::for_geometry(kind, &geom);
        let a = assemble_sparse(&geom, &w).unwrap();
        let f = common::random_image(&geom, &mut rng, -1.0, 1.0);
        let g = common::random_sinogram(&geom, &mut rng);
        assert_eq!(
            a.apply(f.values()).unwrap(),
            forward(&geom, &w, &f).unwrap().values()
        );
        assert_eq!(
            a.apply_adjoint(g.values()).unwrap(),
            backproject(&geom, &w, &g).unwrap().values()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ray_weight_is_even(phi in 0.0..PI, t in -0.2..0.2f64, dx in 0.001..0.5f64) {
        prop_assert_eq!(ray_weight(phi, t, dx).unwrap(), ray_weight(phi, -t, dx).unwrap());
    }

    #[test]
    fn ray_weight_mirror_symmetry(phi in 0.0..FRAC_PI_2, t in -0.2..0.2f64, dx in 0.001..0.5f64) {
        prop_assume!(phi > 0.0);
        let a = ray_weight(phi, t, dx).unwrap();
        let b = ray_weight(FRAC_PI_2 - phi, t, dx).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0 / dx), "{} vs {}", a, b);
    }

    #[test]
    fn weights_are_nonnegative_and_bounded(phi in 0.0..PI, t in -1.0..1.0f64, dx in 0.001..0.5f64) {
        let w = ray_weight(phi, t, dx).unwrap();
        prop_assert!(w >= 0.0 && w <= std::f64::consts::SQRT_2 / dx * (1.0 + 1e-12));
        let p = pixel_weight(t, dx).unwrap();
        prop_assert!(p >= 0.0 && p <= 1.0 / dx + 1e-12);
    }

    #[test]
    fn weight_support(phi in 0.0..PI, t in -1.0..1.0f64, dx in 0.001..0.5f64) {
        let w = WeightFunction::ray_driven(dx).unwrap();
        if t.abs() > w.support_radius(phi) {
            prop_assert_eq!(w.eval(phi, t), 0.0);
        }
    }

    #[test]
    fn forward_is_linear(seed in any::<u64>(), alpha in -3.0..3.0f64, beta in -3.0..3.0f64, pixel in any::<bool>()) {
        let geom = Geometry::uniform(12, 15, 7, 0.0).unwrap();
        let kind = if pixel { WeightKind::PixelDriven } else { WeightKind::RayDriven };
        let w = WeightFunction::for_geometry(kind, &geom);
        let mut rng = common::rng(seed);
        let f1 = common::random_image(&geom, &mut rng, -1.0, 1.0);
        let f2 = common::random_image(&geom, &mut rng, -1.0, 1.0);
        let mix: Vec<f64> = f1.values().iter().zip(f2.values()).map(|(a, b)| alpha * a + beta * b).collect();
        let lhs = forward(&geom, &w, &Image::from_values(geom.image, mix).unwrap()).unwrap();
        let g1 = forward(&geom, &w, &f1).unwrap();
        let g2 = forward(&geom, &w, &f2).unwrap();
        let scale = alpha.abs() * g1.norm() + beta.abs() * g2.norm();
        let mut diff = lhs.clone();
        for (k, d) in diff.values_mut().iter_mut().enumerate() {
            *d -= alpha * g1.values()[k] + beta * g2.values()[k];
        }
        prop_assert!(diff.norm() <= 1e-13 * scale.max(f64::MIN_POSITIVE));
    }
}
