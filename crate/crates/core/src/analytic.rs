//! Closed-form reference values: disk phantoms and their line integrals,
//! the three test sinograms with known backprojections, and the angular
//! Riemann sums that govern the pixel-driven error for a sinogram linear in
//! the detector coordinate.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{direction, AngleSet, Geometry, Image, ImageGrid, Sinogram};

/// Phantoms stay inside this radius so pixels near `∂B(0,1)` never matter.
pub const SUPPORT_RADIUS: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    center: [f64; 2],
    radius: f64,
}

impl Disk {
    pub fn new(center: [f64; 2], radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid(format!(
                "disk radius {radius} must be positive"
            )));
        }
        if center[0].hypot(center[1]) + radius > SUPPORT_RADIUS + 1e-12 {
            return Err(Error::invalid(format!(
                "disk at {center:?} with radius {radius} leaves B(0, {SUPPORT_RADIUS})"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Line integral of the disk indicator along `L_{φ,s}`.
    pub fn line_integral(&self, phi: f64, s: f64) -> f64 {
        disk_sinogram(self.center, self.radius, phi, s)
    }

    /// Mean of the indicator over the axis-aligned pixel of side `delta`
    /// centred at `c`.
    pub fn pixel_average(&self, c: [f64; 2], delta: f64) -> f64 {
        let h = 0.5 * delta;
        let area = disk_rect_area(
            self.radius,
            c[0] - h - self.center[0],
            c[0] + h - self.center[0],
            c[1] - h - self.center[1],
            c[1] + h - self.center[1],
        );
        area / (delta * delta)
    }
}

/// Test objects with known transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phantom {
    /// Indicator of a disk, used as an image.
    Disk(Disk),
    /// The zero image.
    Zero,
    /// `g ≡ level`; backprojects to `π·level`.
    UniformSinogram(f64),
    /// `1/|Φ_q̂|` on the angular cell `q̂`, zero elsewhere; backprojects to 1.
    SingleAngleSinogram(usize),
    /// `g(φ, s) = s`; backprojects to `2y`.
    LinearSinogram,
}

impl Phantom {
    /// Pixel averages `f_ij` of an image phantom.
    pub fn image(&self, grid: ImageGrid) -> Result<Image> {
        match self {
            Phantom::Disk(d) => Image::from_fn(grid, |c| d.pixel_average(c, grid.delta())),
            Phantom::Zero => Ok(Image::zeros(grid)),
            other => Err(Error::invalid(format!(
                "{other:?} is a sinogram, not an image"
            ))),
        }
    }

    /// Cell values of the phantom's sinogram. Image phantoms give their
    /// exact Radon transform at the cell centers `(φ_q, s_p)`.
    pub fn sinogram(&self, geom: &Geometry) -> Result<Sinogram> {
        let angles = geom.angles.clone();
        let det = geom.detector;
        match *self {
            Phantom::Disk(d) => Sinogram::from_fn(angles, det, |_, phi, s| d.line_integral(phi, s)),
            Phantom::Zero => Ok(Sinogram::zeros(angles, det)),
            Phantom::UniformSinogram(level) => Sinogram::from_fn(angles, det, |_, _, _| level),
            Phantom::SingleAngleSinogram(q_hat) => {
                if q_hat >= angles.len() {
                    return Err(Error::invalid(format!(
                        "angle index {q_hat} outside {} angles",
                        angles.len()
                    )));
                }
                let amplitude = 1.0 / angles.widths()[q_hat];
                Sinogram::from_fn(
                    angles,
                    det,
                    |q, _, _| if q == q_hat { amplitude } else { 0.0 },
                )
            }
            // The detector-cell average of s equals its center value.
            Phantom::LinearSinogram => Sinogram::from_fn(angles, det, |_, _, s| s),
        }
    }
}

/// Chord length `2√(r² − (s − c·ϑ_φ)²)` of `L_{φ,s}` through a disk.
pub fn disk_sinogram(center: [f64; 2], radius: f64, phi: f64, s: f64) -> f64 {
    let (theta, _) = direction(phi);
    let d = s - (center[0] * theta[0] + center[1] * theta[1]);
    2.0 * (radius * radius - d * d).max(0.0).sqrt()
}

/// `[R* g](x)` for the sinogram phantoms.
pub fn exact_backprojection(phantom: &Phantom, x: [f64; 2]) -> Result<f64> {
    match *phantom {
        Phantom::UniformSinogram(level) => Ok(PI * level),
        Phantom::SingleAngleSinogram(_) => Ok(1.0),
        Phantom::LinearSinogram => Ok(2.0 * x[1]),
        Phantom::Disk(_) | Phantom::Zero => Err(Error::UnsupportedPhantom(format!("{phantom:?}"))),
    }
}

/// `Σ_q |Φ_q| cos φ_q`, a quadrature of `∫₀^π cos = 0`.
pub fn riemann_cos_sum(angles: &AngleSet) -> f64 {
    angles
        .angles()
        .iter()
        .zip(angles.widths())
        .map(|(phi, w)| w * phi.cos())
        .sum()
}

/// `Σ_q |Φ_q| sin φ_q`, a quadrature of `∫₀^π sin = 2`.
pub fn riemann_sin_sum(angles: &AngleSet) -> f64 {
    angles
        .angles()
        .iter()
        .zip(angles.widths())
        .map(|(phi, w)| w * phi.sin())
        .sum()
}

/// Exact minus pixel-driven backprojection of [`Phantom::LinearSinogram`]
/// at `x`, valid wherever every projection `x·ϑ_q` stays inside
/// `[s_0, s_{n_s−1}]`: there linear interpolation reproduces `s` exactly and
/// only the angular quadrature error is left.
pub fn predicted_example3_error_field(angles: &AngleSet, x: [f64; 2]) -> f64 {
    -x[0] * riemann_cos_sum(angles) + x[1] * (2.0 - riemann_sin_sum(angles))
}

/// Area of `B(0, r) ∩ [x0, x1] × [y0, y1]`.
fn disk_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let (a, b) = (x0.max(-r), x1.min(r));
    if a >= b || y0 >= y1 {
        return 0.0;
    }
    // Between consecutive breaks, the clipped top and bottom of the slice
    // each follow either the rectangle or the circle.
    let mut breaks = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let x = (r * r - y * y).sqrt();
            breaks.extend([-x, x].into_iter().filter(|&v| v > a && v < b));
        }
    }
    breaks.sort_by(f64::total_cmp);

    let half_height = |x: f64| (r * r - x * x).max(0.0).sqrt();
    // ∫ √(r² − x²) dx
    let arc = |x: f64| 0.5 * (x * half_height(x) + r * r * (x / r).clamp(-1.0, 1.0).asin());

    let mut area = 0.0;
    for w in breaks.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let h = half_height(0.5 * (u + v));
        if h.min(y1) <= (-h).max(y0) {
            continue;
        }
        let top = if h < y1 {
            arc(v) - arc(u)
        } else {
            y1 * (v - u)
        };
        let bottom = if -h > y0 {
            -(arc(v) - arc(u))
        } else {
            y0 * (v - u)
        };
        area += top - bottom;
    }
    area
}
