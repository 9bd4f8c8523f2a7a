//! Backprojection error studies and discretization convergence tables.
//!
//! Errors are relative discrete L² errors over pixel centers inside
//! `B(0, mask_radius)`; membership is decided by the center alone.

use std::f64::consts::FRAC_PI_4;
use std::time::Instant;

use crate::analytic::{exact_backprojection, riemann_cos_sum, riemann_sin_sum, Phantom};
use crate::error::{Error, Result};
use crate::grid::{Geometry, Image, ImageGrid};
use crate::operators::{backproject, forward};
use crate::weights::{WeightFunction, WeightKind};

pub const DEFAULT_MASK_RADIUS: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleId {
    /// Constant sinogram.
    One,
    /// Single angular cell.
    Two,
    /// Sinogram linear in the detector coordinate.
    Three,
    ForwardConvergence,
    AdjointCheck,
}

impl ExampleId {
    pub fn label(self) -> &'static str {
        match self {
            ExampleId::One => "1",
            ExampleId::Two => "2",
            ExampleId::Three => "3",
            ExampleId::ForwardConvergence => "forward-convergence",
            ExampleId::AdjointCheck => "adjoint-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    pub n_x: usize,
    pub n_s: usize,
    pub n_phi: usize,
    pub weight: WeightKind,
    pub angle_offset: f64,
    pub mask_radius: f64,
    pub example: ExampleId,
}

impl ExperimentConfig {
    pub fn new(
        example: ExampleId,
        weight: WeightKind,
        n_x: usize,
        n_s: usize,
        n_phi: usize,
    ) -> Self {
        Self {
            n_x,
            n_s,
            n_phi,
            weight,
            angle_offset: 0.0,
            mask_radius: DEFAULT_MASK_RADIUS,
            example,
        }
    }

    pub fn with_offset(mut self, angle_offset: f64) -> Self {
        self.angle_offset = angle_offset;
        self
    }

    pub fn geometry(&self) -> Result<Geometry> {
        if !(self.mask_radius > 0.0 && self.mask_radius < 1.0) {
            return Err(Error::invalid(format!(
                "mask radius {} outside (0, 1)",
                self.mask_radius
            )));
        }
        Geometry::uniform(self.n_x, self.n_s, self.n_phi, self.angle_offset)
    }

    fn expect(&self, example: ExampleId) -> Result<()> {
        if self.example != example {
            return Err(Error::invalid(format!(
                "config is for example {}, not {}",
                self.example.label(),
                example.label()
            )));
        }
        Ok(())
    }
}

/// A relative error, or the absolute one when the reference vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedError {
    pub value: f64,
    pub relative: bool,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rel_error: MaskedError,
    /// `exact − computed` at masked pixel centers, zero elsewhere.
    pub error_field: Image,
    pub runtime_seconds: f64,
    /// Largest deviation between the measured error field and the Riemann
    /// sum prediction (pixel-driven runs of the linear sinogram only).
    pub prediction_max_deviation: Option<f64>,
}

fn in_mask(c: [f64; 2], mask_radius: f64) -> bool {
    c[0] * c[0] + c[1] * c[1] <= mask_radius * mask_radius
}

/// Masked relative L² distance between `computed` and `exact` sampled at
/// pixel centers.
pub fn masked_rel_error(
    computed: &Image,
    exact: impl Fn([f64; 2]) -> f64,
    mask_radius: f64,
) -> MaskedError {
    compare(computed, exact, mask_radius).0
}

fn compare(
    computed: &Image,
    exact: impl Fn([f64; 2]) -> f64,
    mask_radius: f64,
) -> (MaskedError, Image) {
    let grid = computed.grid();
    let n = grid.n();
    let mut field = vec![0.0; grid.len()];
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let c = [grid.coord(i), grid.coord(j)];
            if !in_mask(c, mask_radius) {
                continue;
            }
            let e = exact(c);
            let d = e - computed.get(i, j);
            field[i * n + j] = d;
            num += d * d;
            den += e * e;
        }
    }
    let err = if den > 0.0 {
        MaskedError {
            value: (num / den).sqrt(),
            relative: true,
        }
    } else {
        MaskedError {
            value: num.sqrt(),
            relative: false,
        }
    };
    (
        err,
        Image::from_values(grid, field).expect("finite error field"),
    )
}

fn run_backprojection(cfg: &ExperimentConfig, phantom: Phantom) -> Result<ExperimentReport> {
    let geom = cfg.geometry()?;
    exact_backprojection(&phantom, [0.0, 0.0])?;
    let start = Instant::now();
    let w = WeightFunction::for_geometry(cfg.weight, &geom);
    let g = phantom.sinogram(&geom)?;
    let b = backproject(&geom, &w, &g)?;
    let runtime_seconds = start.elapsed().as_secs_f64();
    let (rel_error, error_field) = compare(
        &b,
        |x| exact_backprojection(&phantom, x).expect("sinogram phantom"),
        cfg.mask_radius,
    );
    Ok(ExperimentReport {
        config: *cfg,
        rel_error,
        error_field,
        runtime_seconds,
        prediction_max_deviation: None,
    })
}

/// Backprojects `g ≡ 1`; the exact backprojection is π.
pub fn run_example1(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.expect(ExampleId::One)?;
    run_backprojection(cfg, Phantom::UniformSinogram(1.0))
}

/// Index of the angle at π/4, if the uniform set contains it.
pub fn quarter_turn_index(cfg: &ExperimentConfig) -> Result<usize> {
    let geom = cfg.geometry()?;
    let q = geom.angles.nearest(FRAC_PI_4);
    if (geom.angles.angles()[q] - FRAC_PI_4).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "no angle at π/4 among {} angles with offset {}",
            cfg.n_phi, cfg.angle_offset
        )));
    }
    Ok(q)
}

/// Backprojects the single-angle sinogram on cell `q_hat`; the exact
/// backprojection is 1.
pub fn run_example2(cfg: &ExperimentConfig, q_hat: usize) -> Result<ExperimentReport> {
    cfg.expect(ExampleId::Two)?;
    if q_hat >= cfg.n_phi {
        return Err(Error::invalid(format!(
            "angle index {q_hat} outside {} angles",
            cfg.n_phi
        )));
    }
    run_backprojection(cfg, Phantom::SingleAngleSinogram(q_hat))
}

/// Backprojects `g(φ, s) = s`; the exact backprojection is `2y`. Pixel-driven
/// runs also compare the error field to the Riemann sum prediction.
pub fn run_example3(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.expect(ExampleId::Three)?;
    let mut report = run_backprojection(cfg, Phantom::LinearSinogram)?;
    if cfg.weight == WeightKind::PixelDriven {
        let angles = cfg.geometry()?.angles;
        let (cos_sum, sin_sum) = (riemann_cos_sum(&angles), riemann_sin_sum(&angles));
        let field = &report.error_field;
        let grid = field.grid();
        let mut worst: f64 = 0.0;
        for i in 0..grid.n() {
            for j in 0..grid.n() {
                let c = [grid.coord(i), grid.coord(j)];
                if in_mask(c, cfg.mask_radius) {
                    // same expression as predicted_example3_error_field, sums hoisted
                    let predicted = -c[0] * cos_sum + c[1] * (2.0 - sin_sum);
                    worst = worst.max((field.get(i, j) - predicted).abs());
                }
            }
        }
        report.prediction_max_deviation = Some(worst);
    }
    Ok(report)
}

/// Dispatches on `cfg.example`; example 2 uses the angle at π/4.
pub fn run_example(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.example {
        ExampleId::One => run_example1(cfg),
        ExampleId::Two => run_example2(cfg, quarter_turn_index(cfg)?),
        ExampleId::Three => run_example3(cfg),
        other => Err(Error::invalid(format!(
            "{} is not a backprojection example",
            other.label()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Size {
    pub n_x: usize,
    pub n_s: usize,
    pub n_phi: usize,
}

impl Size {
    pub fn new(n_x: usize, n_s: usize, n_phi: usize) -> Self {
        Self { n_x, n_s, n_phi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub size: Size,
    pub error: MaskedError,
}

fn check_sizes(sizes: &[Size]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::invalid("convergence study needs at least one size"));
    }
    for w in sizes.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b.n_x <= a.n_x || b.n_s <= a.n_s || b.n_phi <= a.n_phi {
            return Err(Error::invalid(format!(
                "sizes must increase in every component: {a:?} then {b:?}"
            )));
        }
    }
    Ok(())
}

/// Relative V-norm error of the ray-driven forward projection of an image
/// phantom against its exact Radon transform at the cell centers.
pub fn run_forward_convergence(phantom: &Phantom, sizes: &[Size]) -> Result<Vec<ConvergenceRow>> {
    check_sizes(sizes)?;
    sizes
        .iter()
        .map(|&size| {
            let geom = Geometry::uniform(size.n_x, size.n_s, size.n_phi, 0.0)?;
            let f = phantom.image(geom.image)?;
            let exact = phantom.sinogram(&geom)?;
            let w = WeightFunction::for_geometry(WeightKind::RayDriven, &geom);
            let mut diff = forward(&geom, &w, &f)?;
            for (d, e) in diff.values_mut().iter_mut().zip(exact.values()) {
                *d -= e;
            }
            let den = exact.norm();
            let error = if den > 0.0 {
                MaskedError {
                    value: diff.norm() / den,
                    relative: true,
                }
            } else {
                MaskedError {
                    value: diff.norm(),
                    relative: false,
                }
            };
            Ok(ConvergenceRow { size, error })
        })
        .collect()
}

/// How detector and pixel resolutions relate along a backprojection study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `n_s = n_x`.
    Balanced,
    /// `n_s/n_x` grows, so `δ_s/δ_x → 0`.
    ShrinkingDs,
    /// `n_x/n_s` grows, so `δ_x/δ_s → 0`.
    ShrinkingDx,
}

/// Sinogram used in a backprojection convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackprojTest {
    /// The constant sinogram of example 1.
    Constant,
    /// The single-angle sinogram of example 2 at π/4.
    SingleAngle,
}

fn check_regime(regime: Regime, sizes: &[Size]) -> Result<()> {
    let ok = match regime {
        Regime::Balanced => sizes.iter().all(|s| s.n_s == s.n_x),
        Regime::ShrinkingDs => {
            sizes.iter().all(|s| s.n_s > s.n_x)
                && sizes
                    .windows(2)
                    .all(|w| w[1].n_s * w[0].n_x > w[0].n_s * w[1].n_x)
        }
        Regime::ShrinkingDx => {
            sizes.iter().all(|s| s.n_x > s.n_s)
                && sizes
                    .windows(2)
                    .all(|w| w[1].n_x * w[0].n_s > w[0].n_x * w[1].n_s)
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "sizes do not follow the {regime:?} regime"
        )))
    }
}

/// Masked relative error of the backprojection of `test` across `sizes`.
pub fn run_backproj_convergence(
    weight: WeightKind,
    regime: Regime,
    test: BackprojTest,
    sizes: &[Size],
) -> Result<Vec<ConvergenceRow>> {
    check_sizes(sizes)?;
    check_regime(regime, sizes)?;
    sizes
        .iter()
        .map(|&size| {
            let example = match test {
                BackprojTest::Constant => ExampleId::One,
                BackprojTest::SingleAngle => ExampleId::Two,
            };
            let cfg = ExperimentConfig::new(example, weight, size.n_x, size.n_s, size.n_phi);
            let report = run_example(&cfg)?;
            Ok(ConvergenceRow {
                size,
                error: report.rel_error,
            })
        })
        .collect()
}

/// Pixel-center mask as an image of zeros and ones.
pub fn mask_image(grid: ImageGrid, mask_radius: f64) -> Image {
    Image::from_fn(grid, |c| if in_mask(c, mask_radius) { 1.0 } else { 0.0 }).expect("finite mask")
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::analytic::Disk;

    #[test]
    fn masked_error_basics() {
        let grid = ImageGrid::new(40).unwrap();
        let exact = |c: [f64; 2]| 1.0 + c[0] * c[1];
        let same = Image::from_fn(grid, exact).unwrap();
        assert_eq!(masked_rel_error(&same, exact, 0.9).value, 0.0);
        let double = Image::from_fn(grid, |c| 2.0 * exact(c)).unwrap();
        assert!((masked_rel_error(&double, exact, 0.9).value - 1.0).abs() < 1e-14);
        // values outside the mask are ignored
        let mut outside = same.clone();
        outside.values_mut()[0] = 1e6;
        assert_eq!(masked_rel_error(&outside, exact, 0.9).value, 0.0);
        // zero reference falls back to the absolute error
        let e = masked_rel_error(&same, |_| 0.0, 0.9);
        assert!(!e.relative && e.value > 0.0);
    }

    #[test]
    fn config_checks() {
        let cfg = ExperimentConfig::new(ExampleId::One, WeightKind::PixelDriven, 16, 16, 8);
        assert!(run_example2(&cfg, 0).is_err());
        let cfg2 = ExperimentConfig {
            example: ExampleId::Two,
            ..cfg
        };
        assert!(run_example2(&cfg2, 8).is_err());
        assert_eq!(quarter_turn_index(&cfg2).unwrap(), 2);
        let odd = ExperimentConfig { n_phi: 6, ..cfg2 };
        assert!(quarter_turn_index(&odd).is_err());
        let bad_mask = ExperimentConfig {
            mask_radius: 1.0,
            ..cfg
        };
        assert!(run_example1(&bad_mask).is_err());
        let conv = ExperimentConfig {
            example: ExampleId::AdjointCheck,
            ..cfg
        };
        assert!(run_example(&conv).is_err());
    }

    #[test]
    fn pixel_driven_examples_are_exact() {
        for n in [64, 100] {
            let cfg = ExperimentConfig::new(ExampleId::One, WeightKind::PixelDriven, n, n, 12);
            let r = run_example1(&cfg).unwrap();
            assert!(
                r.rel_error.relative && r.rel_error.value <= 1e-12,
                "{}",
                r.rel_error.value
            );
            let cfg = ExperimentConfig {
                example: ExampleId::Two,
                ..cfg
            };
            for q in [0, 3, 7] {
                let r = run_example2(&cfg, q).unwrap();
                assert!(r.rel_error.value <= 1e-12, "q={q}: {}", r.rel_error.value);
            }
        }
    }

    #[test]
    fn pixel_backprojection_of_constant_is_pi() {
        let cfg = ExperimentConfig::new(ExampleId::One, WeightKind::PixelDriven, 50, 50, 7);
        let geom = cfg.geometry().unwrap();
        let w = WeightFunction::for_geometry(WeightKind::PixelDriven, &geom);
        let b = backproject(
            &geom,
            &w,
            &Phantom::UniformSinogram(1.0).sinogram(&geom).unwrap(),
        )
        .unwrap();
        let limit = 1.0 - 1.5 * geom.detector.delta();
        for i in 0..50 {
            for j in 0..50 {
                let c = geom.image.center(i, j).unwrap();
                if c[0].hypot(c[1]) <= limit {
                    assert!((b.get(i, j) - PI).abs() <= 1e-12 * PI);
                }
            }
        }
    }

    #[test]
    fn hoisted_prediction_matches_library() {
        let angles = crate::grid::AngleSet::uniform(36, 0.0).unwrap();
        let (cs, ss) = (riemann_cos_sum(&angles), riemann_sin_sum(&angles));
        for c in [[0.3, -0.2], [-0.7, 0.1]] {
            let p = crate::analytic::predicted_example3_error_field(&angles, c);
            assert_eq!(p, -c[0] * cs + c[1] * (2.0 - ss));
        }
    }

    #[test]
    fn example3_pixel_matches_prediction() {
        for off in [0.0, 0.5] {
            let cfg =
                ExperimentConfig::new(ExampleId::Three, WeightKind::PixelDriven, 128, 128, 36)
                    .with_offset(off);
            let r = run_example3(&cfg).unwrap();
            assert!(r.prediction_max_deviation.unwrap() <= 1e-9);
            assert_eq!(r.error_field.grid().n(), 128);
        }
        let cfg = ExperimentConfig::new(ExampleId::Three, WeightKind::RayDriven, 32, 32, 8);
        assert!(run_example3(&cfg)
            .unwrap()
            .prediction_max_deviation
            .is_none());
    }

    #[test]
    fn forward_convergence_degenerate_tables() {
        let zero = run_forward_convergence(
            &Phantom::Zero,
            &[Size::new(16, 16, 8), Size::new(32, 32, 16)],
        )
        .unwrap();
        assert!(zero.iter().all(|r| r.error.value == 0.0));
        let disk = Phantom::Disk(Disk::new([0.1, 0.0], 0.5).unwrap());
        let one = run_forward_convergence(&disk, &[Size::new(32, 32, 32)]).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0].error.relative && one[0].error.value > 0.0);
        assert!(run_forward_convergence(&disk, &[]).is_err());
        assert!(
            run_forward_convergence(&disk, &[Size::new(32, 32, 32), Size::new(64, 64, 32)])
                .is_err()
        );
        assert!(run_forward_convergence(&Phantom::LinearSinogram, &[Size::new(8, 8, 8)]).is_err());
    }

    #[test]
    fn regime_validation() {
        let balanced = [Size::new(16, 16, 8), Size::new(32, 32, 16)];
        assert!(check_regime(Regime::Balanced, &balanced).is_ok());
        assert!(check_regime(Regime::ShrinkingDs, &balanced).is_err());
        assert!(check_regime(
            Regime::ShrinkingDs,
            &[Size::new(16, 32, 8), Size::new(32, 128, 16)]
        )
        .is_ok());
        assert!(check_regime(
            Regime::ShrinkingDs,
            &[Size::new(16, 64, 8), Size::new(32, 128, 16)]
        )
        .is_err());
        assert!(check_regime(
            Regime::ShrinkingDx,
            &[Size::new(32, 16, 8), Size::new(128, 32, 16)]
        )
        .is_ok());
    }
}
