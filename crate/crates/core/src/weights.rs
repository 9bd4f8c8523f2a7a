//! Ray-driven and pixel-driven weight functions.
//!
//! Both projectors weight pixel `X_ij` in the cell `(q, p)` by `ω(φ_q, t)`
//! with `t = x_ij·ϑ_q − s_p`. For the ray-driven kernel `δ_x²·ω` is the
//! length of the chord of `L_{φ,s}` through the pixel: a trapezoid in `t`
//! with plateau `δ_x·κ(φ)` on `|t| < s̲(φ)` falling linearly to zero at
//! `s̄(φ)`. The pixel-driven kernel is the detector hat `max(δ_s − |t|, 0)/δ_s²`.
//! Both integrate to one over `t`.
//!
//! [`intersection_length`] computes chord lengths by clipping the line
//! against the pixel faces and never touches the closed form, so it can be
//! used to check it.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::grid::{direction, Geometry};

/// Ramp widths below this fraction of `δ_x` are treated as axis-aligned.
const AXIS_ALIGNED_RAMP: f64 = 1e-14;

/// A weight function restricted to one projection angle.
pub trait AngleKernel: Copy + Send + Sync {
    /// `ω(φ, t)` for the angle this kernel was built for.
    fn eval(&self, t: f64) -> f64;

    /// Smallest `r` with `ω(φ, t) = 0` for all `|t| > r`.
    fn support(&self) -> f64;
}

/// Angle-dependent constants of the ray-driven kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayWeightParams {
    /// `s̄(φ) = (δ_x/2)(|cos φ| + |sin φ|)`
    pub s_bar: f64,
    /// `s̲(φ) = (δ_x/2)·||cos φ| − |sin φ||`
    pub s_under: f64,
    /// `κ(φ) = min(1/|cos φ|, 1/|sin φ|)`, computed as `1/max(|cos φ|, |sin φ|)`
    pub kappa: f64,
    delta_x: f64,
    abs_cos_sin: f64,
    axis_aligned: bool,
}

impl RayWeightParams {
    pub fn new(phi: f64, delta_x: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let (c, s) = (c.abs(), s.abs());
        let s_bar = 0.5 * delta_x * (c + s);
        let s_under = 0.5 * delta_x * (c - s).abs();
        Self {
            s_bar,
            s_under,
            kappa: 1.0 / c.max(s),
            delta_x,
            abs_cos_sin: c * s,
            axis_aligned: s_bar - s_under <= AXIS_ALIGNED_RAMP * delta_x,
        }
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.axis_aligned
    }
}

impl AngleKernel for RayWeightParams {
    #[inline]
    fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        let dx = self.delta_x;
        if a < self.s_under {
            self.kappa / dx
        } else if self.axis_aligned {
            // Edge shared by two pixels: each gets half of it.
            if a <= self.s_bar {
                0.5 * self.kappa / dx
            } else {
                0.0
            }
        } else if a < self.s_bar {
            (self.s_bar - a) / (dx * self.abs_cos_sin) / dx
        } else {
            0.0
        }
    }

    #[inline]
    fn support(&self) -> f64 {
        self.s_bar
    }
}

/// The detector hat `max(δ_s − |t|, 0)/δ_s²`; independent of the angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelWeightParams {
    delta_s: f64,
    inv_delta_s2: f64,
}

impl PixelWeightParams {
    pub fn new(delta_s: f64) -> Self {
        Self {
            delta_s,
            inv_delta_s2: 1.0 / (delta_s * delta_s),
        }
    }
}

impl AngleKernel for PixelWeightParams {
    #[inline]
    fn eval(&self, t: f64) -> f64 {
        (self.delta_s - t.abs()).max(0.0) * self.inv_delta_s2
    }

    #[inline]
    fn support(&self) -> f64 {
        self.delta_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    RayDriven,
    PixelDriven,
}

impl WeightKind {
    pub fn name(self) -> &'static str {
        match self {
            WeightKind::RayDriven => "ray",
            WeightKind::PixelDriven => "pixel",
        }
    }
}

impl std::str::FromStr for WeightKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ray" => Ok(WeightKind::RayDriven),
            "pixel" => Ok(WeightKind::PixelDriven),
            other => Err(Error::invalid(format!(
                "unknown weight '{other}', expected ray or pixel"
            ))),
        }
    }
}

/// A weight function `ω` together with the spacing it is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFunction {
    RayDriven { delta_x: f64 },
    PixelDriven { delta_s: f64 },
}

impl WeightFunction {
    pub fn ray_driven(delta_x: f64) -> Result<Self> {
        check_spacing(delta_x, "delta_x")?;
        Ok(WeightFunction::RayDriven { delta_x })
    }

    pub fn pixel_driven(delta_s: f64) -> Result<Self> {
        check_spacing(delta_s, "delta_s")?;
        Ok(WeightFunction::PixelDriven { delta_s })
    }

    /// The weight of the requested kind for `geom`'s pixel or detector spacing.
    pub fn for_geometry(kind: WeightKind, geom: &Geometry) -> Self {
        match kind {
            WeightKind::RayDriven => WeightFunction::RayDriven {
                delta_x: geom.image.delta(),
            },
            WeightKind::PixelDriven => WeightFunction::PixelDriven {
                delta_s: geom.detector.delta(),
            },
        }
    }

    pub fn kind(&self) -> WeightKind {
        match self {
            WeightFunction::RayDriven { .. } => WeightKind::RayDriven,
            WeightFunction::PixelDriven { .. } => WeightKind::PixelDriven,
        }
    }

    pub fn eval(&self, phi: f64, t: f64) -> f64 {
        match *self {
            WeightFunction::RayDriven { delta_x } => RayWeightParams::new(phi, delta_x).eval(t),
            WeightFunction::PixelDriven { delta_s } => PixelWeightParams::new(delta_s).eval(t),
        }
    }

    pub fn support_radius(&self, phi: f64) -> f64 {
        match *self {
            WeightFunction::RayDriven { delta_x } => RayWeightParams::new(phi, delta_x).s_bar,
            WeightFunction::PixelDriven { delta_s } => delta_s,
        }
    }

    /// Fails unless the spacing matches the one `geom` implies for this kind.
    pub(crate) fn check_matches(&self, geom: &Geometry) -> Result<()> {
        let expected = Self::for_geometry(self.kind(), geom);
        if *self != expected {
            return Err(Error::invalid(format!(
                "weight {self:?} does not match geometry (expected {expected:?})"
            )));
        }
        Ok(())
    }
}

fn check_spacing(delta: f64, name: &str) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{name} must be positive and finite, got {delta}"
        )))
    }
}

/// Ray-driven weight `w^rd(φ, t)` for pixel spacing `δ_x`.
pub fn ray_weight(phi: f64, t: f64, delta_x: f64) -> Result<f64> {
    check_spacing(delta_x, "delta_x")?;
    Ok(RayWeightParams::new(phi, delta_x).eval(t))
}

/// Pixel-driven weight `w^pd(t)` for detector spacing `δ_s`.
pub fn pixel_weight(t: f64, delta_s: f64) -> Result<f64> {
    check_spacing(delta_s, "delta_s")?;
    Ok(PixelWeightParams::new(delta_s).eval(t))
}

pub fn weight_support_radius(w: &WeightFunction, phi: f64) -> f64 {
    w.support_radius(phi)
}

/// The line `L_{φ,s} = { s·ϑ_φ + τ·ϑ_φ⊥ : τ ∈ ℝ }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub phi: f64,
    pub s: f64,
}

impl Line {
    pub fn new(phi: f64, s: f64) -> Self {
        Self { phi, s }
    }
}

/// Length of `L ∩ X` for the closed square pixel `X` of side `δ_x` centred
/// at `center`, by clipping the line parameter against both slabs.
pub fn intersection_length(center: [f64; 2], delta_x: f64, line: Line) -> f64 {
    let (theta, perp) = direction(line.phi);
    let h = 0.5 * delta_x;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for k in 0..2 {
        let origin = line.s * theta[k];
        let (a, b) = (center[k] - h, center[k] + h);
        let d = perp[k];
        if d == 0.0 {
            if origin < a || origin > b {
                return 0.0;
            }
        } else {
            let (t0, t1) = ((a - origin) / d, (b - origin) / d);
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    (hi - lo).max(0.0)
}

/// `true` for angles where the ray-driven kernel is a box, `φ ∈ {0, π/2}`.
pub fn is_axis_angle(phi: f64) -> bool {
    phi == 0.0 || phi == FRAC_PI_2
}
