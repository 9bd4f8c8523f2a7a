//! Convolutional forward projection and backprojection.
//!
//! For a weight `ω` the forward projector maps pixel coefficients to cell
//! values
//!
//! ```text
//! g_qp = Σ_ij ω(φ_q, x_ij·ϑ_q − s_p) · f_ij · δ_x²
//! ```
//!
//! and the backprojector maps cell values to pixel coefficients
//!
//! ```text
//! b_ij = Σ_qp ω(φ_q, x_ij·ϑ_q − s_p) · g_qp · |Φ_q| · δ_s
//! ```
//!
//! Cell values stand for sinograms that are constant on each `Φ_q × S_p`.
//!
//! Work is split so that every output value is produced by exactly one
//! worker which visits its terms in a fixed order: ascending `(i, j)` for
//! the forward projection, ascending `(q, p)` for the backprojection.
//! Results therefore do not depend on the size of the rayon pool, and the
//! sparse matrix from [`assemble_sparse`] reproduces both operators bit for
//! bit.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{DetectorGrid, Geometry, Image, Sinogram};
use crate::weights::{AngleKernel, PixelWeightParams, RayWeightParams, WeightFunction};

/// Slack, in detector cells, when bracketing the support of a kernel.
const RANGE_SLACK: f64 = 1e-9;

/// Default cap on stored entries for [`assemble_sparse`].
pub const DEFAULT_ENTRY_CAP: u64 = 50_000_000;

#[derive(Clone, Copy)]
struct AngleRow<K> {
    cos: f64,
    sin: f64,
    kernel: K,
}

fn angle_rows<K>(geom: &Geometry, make: impl Fn(f64) -> K) -> Vec<AngleRow<K>> {
    geom.angles
        .angles()
        .iter()
        .map(|&phi| {
            let (sin, cos) = phi.sin_cos();
            AngleRow {
                cos,
                sin,
                kernel: make(phi),
            }
        })
        .collect()
}

/// Detector cells whose centers lie within `radius` of `t0`.
#[inline]
fn detector_range(t0: f64, radius: f64, det: &DetectorGrid) -> Range<usize> {
    let inv = 1.0 / det.delta();
    let lo = ((t0 - radius + 1.0) * inv - 0.5 - RANGE_SLACK)
        .ceil()
        .max(0.0);
    let hi = ((t0 + radius + 1.0) * inv - 0.5 + RANGE_SLACK).floor();
    let n = det.n() as f64;
    if hi < lo || lo >= n || hi < 0.0 {
        return 0..0;
    }
    lo as usize..(hi.min(n - 1.0) as usize + 1)
}

fn check_image(geom: &Geometry, f: &Image) -> Result<()> {
    if f.grid() != geom.image {
        return Err(Error::invalid(format!(
            "image is {0}x{0}, geometry expects {1}x{1}",
            f.grid().n(),
            geom.image.n()
        )));
    }
    Ok(())
}

fn check_sinogram(geom: &Geometry, g: &Sinogram) -> Result<()> {
    if g.detector() != geom.detector || *g.angles() != geom.angles {
        return Err(Error::invalid(format!(
            "sinogram is {}x{}, geometry expects {}x{} with matching angles",
            g.angles().len(),
            g.detector().n(),
            geom.angles.len(),
            geom.detector.n()
        )));
    }
    Ok(())
}

/// Convolutional forward projection `R_ω f`.
pub fn forward(geom: &Geometry, w: &WeightFunction, f: &Image) -> Result<Sinogram> {
    w.check_matches(geom)?;
    check_image(geom, f)?;
    let values = match *w {
        WeightFunction::RayDriven { delta_x } => forward_with(
            geom,
            &angle_rows(geom, |phi| RayWeightParams::new(phi, delta_x)),
            f,
        ),
        WeightFunction::PixelDriven { delta_s } => forward_with(
            geom,
            &angle_rows(geom, |_| PixelWeightParams::new(delta_s)),
            f,
        ),
    };
    Sinogram::from_values(geom.angles.clone(), geom.detector, values)
}

fn forward_with<K: AngleKernel>(geom: &Geometry, rows: &[AngleRow<K>], f: &Image) -> Vec<f64> {
    let grid = geom.image;
    let det = geom.detector;
    let n = grid.n();
    let dx2 = grid.delta() * grid.delta();
    let s = det.centers();
    let fv = f.values();
    let mut out = vec![0.0; rows.len() * det.n()];
    out.par_chunks_mut(det.n())
        .zip(rows.par_iter())
        .for_each(|(row, a)| {
            let r = a.kernel.support();
            for i in 0..n {
                let xc = grid.coord(i) * a.cos;
                for j in 0..n {
                    let fij = fv[i * n + j];
                    if fij == 0.0 {
                        continue;
                    }
                    let t0 = xc + grid.coord(j) * a.sin;
                    for p in detector_range(t0, r, &det) {
                        let wt = a.kernel.eval(t0 - s[p]);
                        if wt > 0.0 {
                            row[p] += wt * fij * dx2;
                        }
                    }
                }
            }
        });
    out
}

/// Convolutional backprojection `R_ω* g`.
pub fn backproject(geom: &Geometry, w: &WeightFunction, g: &Sinogram) -> Result<Image> {
    w.check_matches(geom)?;
    check_sinogram(geom, g)?;
    let values = match *w {
        WeightFunction::RayDriven { delta_x } => backproject_with(
            geom,
            &angle_rows(geom, |phi| RayWeightParams::new(phi, delta_x)),
            g,
        ),
        WeightFunction::PixelDriven { delta_s } => backproject_with(
            geom,
            &angle_rows(geom, |_| PixelWeightParams::new(delta_s)),
            g,
        ),
    };
    Image::from_values(geom.image, values)
}

fn backproject_with<K: AngleKernel>(
    geom: &Geometry,
    rows: &[AngleRow<K>],
    g: &Sinogram,
) -> Vec<f64> {
    let grid = geom.image;
    let det = geom.detector;
    let n = grid.n();
    let s = det.centers();
    let ds = det.delta();
    // Angles whose row is identically zero contribute nothing.
    let active: Vec<usize> = (0..rows.len())
        .filter(|&q| g.row(q).iter().any(|&v| v != 0.0))
        .collect();
    let widths = geom.angles.widths();
    let mut out = vec![0.0; grid.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(i, line)| {
        let x = grid.coord(i);
        for &q in &active {
            let a = &rows[q];
            let area = widths[q] * ds;
            let gq = g.row(q);
            let r = a.kernel.support();
            let xc = x * a.cos;
            for (j, b) in line.iter_mut().enumerate() {
                let t0 = xc + grid.coord(j) * a.sin;
                for p in detector_range(t0, r, &det) {
                    let wt = a.kernel.eval(t0 - s[p]);
                    if wt > 0.0 {
                        *b += wt * gq[p] * area;
                    }
                }
            }
        }
    });
    out
}

/// The system matrix in compressed-row form. Row `q·n_s + p`, column
/// `i·n_x + j`; entries in each row are sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n_x: usize,
    n_s: usize,
    n_phi: usize,
    dx2: f64,
    cell_areas: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// One stored coefficient `A_qpij = ω(φ_q, x_ij·ϑ_q − s_p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub q: usize,
    pub p: usize,
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl SparseOperator {
    pub fn n_rows(&self) -> usize {
        self.n_phi * self.n_s
    }

    pub fn n_cols(&self) -> usize {
        self.n_x * self.n_x
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and weights of one row.
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[span.clone()], &self.vals[span])
    }

    pub fn entries(&self) -> impl Iterator<Item = Entry> + '_ {
        (0..self.n_rows()).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &weight)| Entry {
                q: r / self.n_s,
                p: r % self.n_s,
                i: c as usize / self.n_x,
                j: c as usize % self.n_x,
                weight,
            })
        })
    }

    /// `Σ_ij A_qpij f_ij δ_x²` for every row; equals [`forward`] bitwise.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.n_cols() {
            return Err(Error::invalid(format!(
                "expected {} pixel values, got {}",
                self.n_cols(),
                f.len()
            )));
        }
        Ok((0..self.n_rows())
            .into_par_iter()
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter()
                    .zip(vals)
                    .fold(0.0, |acc, (&c, &w)| acc + w * f[c as usize] * self.dx2)
            })
            .collect())
    }

    /// `Σ_qp A_qpij g_qp |Φ_q| δ_s` for every column; equals [`backproject`]
    /// bitwise.
    pub fn apply_adjoint(&self, g: &[f64]) -> Result<Vec<f64>> {
        if g.len() != self.n_rows() {
            return Err(Error::invalid(format!(
                "expected {} cell values, got {}",
                self.n_rows(),
                g.len()
            )));
        }
        let mut out = vec![0.0; self.n_cols()];
        for (r, &gr) in g.iter().enumerate() {
            let area = self.cell_areas[r / self.n_s];
            let (cols, vals) = self.row(r);
            for (&c, &w) in cols.iter().zip(vals) {
                out[c as usize] += w * gr * area;
            }
        }
        Ok(out)
    }
}

/// Upper bound on the number of stored entries of the system matrix.
pub fn estimate_entries(geom: &Geometry, w: &WeightFunction) -> u64 {
    let r = geom
        .angles
        .angles()
        .iter()
        .map(|&phi| w.support_radius(phi))
        .fold(0.0, f64::max);
    let per_pixel = (2.0 * r / geom.detector.delta()).floor() as u64 + 2;
    per_pixel * geom.image.len() as u64 * geom.angles.len() as u64
}

/// Materializes `A` with the default entry cap.
pub fn assemble_sparse(geom: &Geometry, w: &WeightFunction) -> Result<SparseOperator> {
    assemble_sparse_with_cap(geom, w, DEFAULT_ENTRY_CAP)
}

pub fn assemble_sparse_with_cap(
    geom: &Geometry,
    w: &WeightFunction,
    cap: u64,
) -> Result<SparseOperator> {
    w.check_matches(geom)?;
    let estimated = estimate_entries(geom, w);
    if estimated > cap {
        return Err(Error::ResourceLimit { estimated, cap });
    }
    if geom.image.len() > u32::MAX as usize {
        return Err(Error::invalid("too many pixels for 32-bit column indices"));
    }
    let per_angle = match *w {
        WeightFunction::RayDriven { delta_x } => assemble_with(
            geom,
            &angle_rows(geom, |phi| RayWeightParams::new(phi, delta_x)),
        ),
        WeightFunction::PixelDriven { delta_s } => {
            assemble_with(geom, &angle_rows(geom, |_| PixelWeightParams::new(delta_s)))
        }
    };
    let mut row_ptr = Vec::with_capacity(geom.angles.len() * geom.detector.n() + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for rows in per_angle {
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
    }
    let ds = geom.detector.delta();
    let dx = geom.image.delta();
    Ok(SparseOperator {
        n_x: geom.image.n(),
        n_s: geom.detector.n(),
        n_phi: geom.angles.len(),
        dx2: dx * dx,
        cell_areas: geom.angles.widths().iter().map(|w| w * ds).collect(),
        row_ptr,
        cols,
        vals,
    })
}

type SparseRow = Vec<(u32, f64)>;

fn assemble_with<K: AngleKernel>(geom: &Geometry, rows: &[AngleRow<K>]) -> Vec<Vec<SparseRow>> {
    let grid = geom.image;
    let det = geom.detector;
    let n = grid.n();
    let s = det.centers();
    rows.par_iter()
        .map(|a| {
            let mut out: Vec<SparseRow> = vec![Vec::new(); det.n()];
            let r = a.kernel.support();
            for i in 0..n {
                let xc = grid.coord(i) * a.cos;
                for j in 0..n {
                    let t0 = xc + grid.coord(j) * a.sin;
                    for p in detector_range(t0, r, &det) {
                        let wt = a.kernel.eval(t0 - s[p]);
                        if wt > 0.0 {
                            out[p].push(((i * n + j) as u32, wt));
                        }
                    }
                }
            }
            out
        })
        .collect()
}

/// Result of [`adjoint_gap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjointGap {
    pub value: f64,
    /// `false` when a norm vanished and `value` is the absolute gap.
    pub relative: bool,
}

/// `|⟨R_ω f, g⟩_V − ⟨f, R_ω* g⟩_U| / (‖f‖_U ‖g‖_V)`.
pub fn adjoint_gap(
    geom: &Geometry,
    w: &WeightFunction,
    f: &Image,
    g: &Sinogram,
) -> Result<AdjointGap> {
    let rf = forward(geom, w, f)?;
    let bg = backproject(geom, w, g)?;
    let gap = (rf.inner(g) - f.inner(&bg)).abs();
    let scale = f.norm() * g.norm();
    if scale > 0.0 {
        Ok(AdjointGap {
            value: gap / scale,
            relative: true,
        })
    } else {
        Ok(AdjointGap {
            value: gap,
            relative: false,
        })
    }
}
