//! Spatial, detector and angular discretizations.
//!
//! Images live on `[-1, 1]²` split into `n_x × n_x` square pixels of side
//! `δ_x = 2/n_x`; the detector `(-1, 1)` is split into `n_s` cells of width
//! `δ_s = 2/n_s`. Angles `φ_0 < … < φ_{n_φ-1}` in `[0, π)` each own the cell
//! between the midpoints to their neighbours, with the neighbours of the
//! first and last angle taken π-periodically.
//!
//! Image coefficients multiply the pixel indicators `χ_{X_ij}`. The
//! half-weighted pixel boundary in the underlying basis has measure zero and
//! is not represented.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Cartesian pixel grid on `[-1, 1]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageGrid {
    n: usize,
    delta: f64,
}

impl ImageGrid {
    pub fn new(n_x: usize) -> Result<Self> {
        if n_x == 0 {
            return Err(Error::invalid(
                "image grid needs at least one pixel per axis",
            ));
        }
        Ok(Self {
            n: n_x,
            delta: 2.0 / n_x as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Center coordinate along one axis, `(k + ½)·δ_x − 1`.
    #[inline]
    pub fn coord(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.delta - 1.0
    }

    /// Pixel center `x_ij`; `i` indexes the first coordinate, `j` the second.
    pub fn center(&self, i: usize, j: usize) -> Result<[f64; 2]> {
        if i >= self.n || j >= self.n {
            return Err(Error::invalid(format!(
                "pixel ({i}, {j}) outside a {0}x{0} grid",
                self.n
            )));
        }
        Ok([self.coord(i), self.coord(j)])
    }
}

/// Equispaced detector on `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorGrid {
    n: usize,
    delta: f64,
}

impl DetectorGrid {
    pub fn new(n_s: usize) -> Result<Self> {
        if n_s == 0 {
            return Err(Error::invalid("detector needs at least one cell"));
        }
        Ok(Self {
            n: n_s,
            delta: 2.0 / n_s as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn coord(&self, p: usize) -> f64 {
        (p as f64 + 0.5) * self.delta - 1.0
    }

    pub fn center(&self, p: usize) -> Result<f64> {
        if p >= self.n {
            return Err(Error::invalid(format!(
                "detector cell {p} outside a grid of {}",
                self.n
            )));
        }
        Ok(self.coord(p))
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n).map(|p| self.coord(p)).collect()
    }
}

/// Projection angles with their angular cell widths `|Φ_q|`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSet {
    angles: Vec<f64>,
    widths: Vec<f64>,
    delta_phi: f64,
}

impl AngleSet {
    /// Builds the angular cells for an arbitrary strictly increasing list in
    /// `[0, π)`. Angles outside that range are rejected, not wrapped.
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::invalid("angle set is empty"));
        }
        for (q, &phi) in angles.iter().enumerate() {
            if !phi.is_finite() || !(0.0..PI).contains(&phi) {
                return Err(Error::invalid(format!(
                    "angle {q} = {phi} is outside [0, π)"
                )));
            }
        }
        if angles.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("angles must be strictly increasing"));
        }
        let n = angles.len();
        let widths = (0..n)
            .map(|q| {
                let prev = if q == 0 {
                    angles[n - 1] - PI
                } else {
                    angles[q - 1]
                };
                let next = if q + 1 == n {
                    angles[0] + PI
                } else {
                    angles[q + 1]
                };
                0.5 * (next - prev)
            })
            .collect();
        Ok(Self::with_widths(angles, widths))
    }

    /// `φ_q = π·(q + offset_fraction)/n_φ`, every cell exactly `π/n_φ` wide.
    pub fn uniform(n_phi: usize, offset_fraction: f64) -> Result<Self> {
        if n_phi == 0 {
            return Err(Error::invalid("n_phi must be at least 1"));
        }
        if !(0.0..1.0).contains(&offset_fraction) {
            return Err(Error::invalid(format!(
                "angle offset fraction {offset_fraction} is outside [0, 1)"
            )));
        }
        let n = n_phi as f64;
        let angles = (0..n_phi)
            .map(|q| PI * (q as f64 + offset_fraction) / n)
            .collect();
        Ok(Self::with_widths(angles, vec![PI / n; n_phi]))
    }

    fn with_widths(angles: Vec<f64>, widths: Vec<f64>) -> Self {
        let delta_phi = widths.iter().copied().fold(0.0, f64::max);
        Self {
            angles,
            widths,
            delta_phi,
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn delta_phi(&self) -> f64 {
        self.delta_phi
    }

    /// Index of the angle closest to `phi`.
    pub fn nearest(&self, phi: f64) -> usize {
        let mut best = 0;
        for (q, &a) in self.angles.iter().enumerate() {
            if (a - phi).abs() < (self.angles[best] - phi).abs() {
                best = q;
            }
        }
        best
    }
}

/// Shorthand for [`AngleSet::uniform`].
pub fn make_uniform_angles(n_phi: usize, offset_fraction: f64) -> Result<AngleSet> {
    AngleSet::uniform(n_phi, offset_fraction)
}

/// `(ϑ, ϑ⊥) = ((cos φ, sin φ), (−sin φ, cos φ))`.
#[inline]
pub fn direction(phi: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = phi.sin_cos();
    ([c, s], [-s, c])
}

/// Image, detector and angle discretizations used together.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub image: ImageGrid,
    pub detector: DetectorGrid,
    pub angles: AngleSet,
}

impl Geometry {
    pub fn new(image: ImageGrid, detector: DetectorGrid, angles: AngleSet) -> Self {
        Self {
            image,
            detector,
            angles,
        }
    }

    /// Geometry with uniformly spaced angles.
    pub fn uniform(n_x: usize, n_s: usize, n_phi: usize, offset_fraction: f64) -> Result<Self> {
        Ok(Self::new(
            ImageGrid::new(n_x)?,
            DetectorGrid::new(n_s)?,
            AngleSet::uniform(n_phi, offset_fraction)?,
        ))
    }

    /// `(δ_x, δ_φ, δ_s)`.
    pub fn resolutions(&self) -> (f64, f64, f64) {
        (
            self.image.delta(),
            self.angles.delta_phi(),
            self.detector.delta(),
        )
    }

    pub fn zero_image(&self) -> Image {
        Image::zeros(self.image)
    }

    pub fn zero_sinogram(&self) -> Sinogram {
        Sinogram::zeros(self.angles.clone(), self.detector)
    }
}

/// Pixel coefficients `f_ij`, stored with `i` outer and `j` inner.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    grid: ImageGrid,
    values: Vec<f64>,
}

impl Image {
    pub fn zeros(grid: ImageGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: ImageGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "image needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("image value {k} is not finite")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x_ij)` at every pixel center.
    pub fn from_fn(grid: ImageGrid, mut f: impl FnMut([f64; 2]) -> f64) -> Result<Self> {
        let n = grid.n();
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                values.push(f([grid.coord(i), grid.coord(j)]));
            }
        }
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> ImageGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n() + j]
    }

    /// `⟨f₁, f₂⟩_U = δ_x² Σ f₁f₂`.
    pub fn inner(&self, other: &Image) -> f64 {
        let d = self.grid.delta();
        d * d * dot(&self.values, &other.values)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }
}

/// Cell values `g_qp` of a sinogram, stored with `q` outer and `p` inner.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    angles: AngleSet,
    detector: DetectorGrid,
    values: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(angles: AngleSet, detector: DetectorGrid) -> Self {
        let len = angles.len() * detector.n();
        Self {
            angles,
            detector,
            values: vec![0.0; len],
        }
    }

    pub fn from_values(angles: AngleSet, detector: DetectorGrid, values: Vec<f64>) -> Result<Self> {
        let len = angles.len() * detector.n();
        if values.len() != len {
            return Err(Error::invalid(format!(
                "sinogram needs {len} values, got {}",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sinogram value {k} is not finite")));
        }
        Ok(Self {
            angles,
            detector,
            values,
        })
    }

    /// Evaluates `g(φ_q, s_p)` at every cell center.
    pub fn from_fn(
        angles: AngleSet,
        detector: DetectorGrid,
        mut g: impl FnMut(usize, f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(angles.len() * detector.n());
        for (q, &phi) in angles.angles().iter().enumerate() {
            for p in 0..detector.n() {
                values.push(g(q, phi, detector.coord(p)));
            }
        }
        Self::from_values(angles, detector, values)
    }

    pub fn angles(&self) -> &AngleSet {
        &self.angles
    }

    pub fn detector(&self) -> DetectorGrid {
        self.detector
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, q: usize, p: usize) -> f64 {
        self.values[q * self.detector.n() + p]
    }

    pub fn row(&self, q: usize) -> &[f64] {
        let n = self.detector.n();
        &self.values[q * n..(q + 1) * n]
    }

    /// `⟨g₁, g₂⟩_V = Σ g₁g₂·|Φ_q|·δ_s`.
    pub fn inner(&self, other: &Sinogram) -> f64 {
        let ds = self.detector.delta();
        let n = self.detector.n();
        self.angles
            .widths()
            .iter()
            .enumerate()
            .map(|(q, w)| {
                let r = q * n..(q + 1) * n;
                w * ds * dot(&self.values[r.clone()], &other.values[r])
            })
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
