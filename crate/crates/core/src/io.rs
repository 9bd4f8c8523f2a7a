//! File formats: RDK binary grids, Matrix Market export, PGM previews and
//! CSV experiment reports.
//!
//! An RDK file is
//!
//! ```text
//! "RDK1" | kind: u32 LE | dim0: u32 LE | dim1: u32 LE | dim0·dim1 × f64 LE
//! ```
//!
//! with kind 0 for images (`i` outer, `j` inner) and 1 for sinograms (`q`
//! outer, `p` inner).

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::ExperimentReport;
use crate::grid::{Geometry, Image, Sinogram};
use crate::operators::SparseOperator;

pub const RDK_MAGIC: &[u8; 4] = b"RDK1";
const RDK_HEADER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdkKind {
    Image = 0,
    Sinogram = 1,
}

impl RdkKind {
    fn from_u32(v: u32) -> Result<Self> {
        match v {
            0 => Ok(RdkKind::Image),
            1 => Ok(RdkKind::Sinogram),
            other => Err(Error::Format(format!("unknown RDK kind {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdkFile {
    pub kind: RdkKind,
    pub dim0: u32,
    pub dim1: u32,
    pub values: Vec<f64>,
}

impl RdkFile {
    pub fn from_image(f: &Image) -> Self {
        let n = f.grid().n() as u32;
        Self {
            kind: RdkKind::Image,
            dim0: n,
            dim1: n,
            values: f.values().to_vec(),
        }
    }

    pub fn from_sinogram(g: &Sinogram) -> Self {
        Self {
            kind: RdkKind::Sinogram,
            dim0: g.angles().len() as u32,
            dim1: g.detector().n() as u32,
            values: g.values().to_vec(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(RDK_HEADER + 8 * self.values.len());
        out.extend_from_slice(RDK_MAGIC);
        out.extend_from_slice(&(self.kind as u32).to_le_bytes());
        out.extend_from_slice(&self.dim0.to_le_bytes());
        out.extend_from_slice(&self.dim1.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < RDK_HEADER {
            return Err(Error::Format(format!(
                "RDK header needs {RDK_HEADER} bytes, file has {}",
                bytes.len()
            )));
        }
        if &bytes[..4] != RDK_MAGIC {
            return Err(Error::Format("missing RDK1 magic".into()));
        }
        let word = |k: usize| u32::from_le_bytes(bytes[k..k + 4].try_into().unwrap());
        let kind = RdkKind::from_u32(word(4))?;
        let (dim0, dim1) = (word(8), word(12));
        let expected = dim0 as u64 * dim1 as u64 * 8;
        let actual = (bytes.len() - RDK_HEADER) as u64;
        if expected != actual {
            return Err(Error::Format(format!(
                "RDK payload for {dim0}x{dim1} needs {expected} bytes, found {actual}"
            )));
        }
        let values: Vec<f64> = bytes[RDK_HEADER..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("RDK value {k} is not finite")));
        }
        Ok(Self {
            kind,
            dim0,
            dim1,
            values,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|source| io_err(path, source))?;
        Self::from_bytes(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|source| io_err(path, source))
    }

    /// Interprets the file as an image on `geom`'s pixel grid.
    pub fn into_image(self, geom: &Geometry) -> Result<Image> {
        let n = geom.image.n() as u32;
        if self.kind != RdkKind::Image {
            return Err(Error::Format(
                "expected an image (kind 0), found a sinogram".into(),
            ));
        }
        if (self.dim0, self.dim1) != (n, n) {
            return Err(Error::Format(format!(
                "image is {}x{}, expected {n}x{n}",
                self.dim0, self.dim1
            )));
        }
        Image::from_values(geom.image, self.values)
    }

    /// Interprets the file as a sinogram on `geom`'s angles and detector.
    pub fn into_sinogram(self, geom: &Geometry) -> Result<Sinogram> {
        let (na, ns) = (geom.angles.len() as u32, geom.detector.n() as u32);
        if self.kind != RdkKind::Sinogram {
            return Err(Error::Format(
                "expected a sinogram (kind 1), found an image".into(),
            ));
        }
        if (self.dim0, self.dim1) != (na, ns) {
            return Err(Error::Format(format!(
                "sinogram is {}x{}, expected {na}x{ns}",
                self.dim0, self.dim1
            )));
        }
        Sinogram::from_values(geom.angles.clone(), geom.detector, self.values)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub const MATRIX_MARKET_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

/// Writes `A` in Matrix Market coordinate format. Rows are `q·n_s + p + 1`,
/// columns `i·n_x + j + 1`; entries follow the operator's row order.
pub fn write_matrix_market(
    mut out: impl Write,
    a: &SparseOperator,
    comment: &str,
) -> std::io::Result<()> {
    writeln!(out, "{MATRIX_MARKET_HEADER}")?;
    for line in comment.lines() {
        writeln!(out, "% {line}")?;
    }
    writeln!(out, "{} {} {}", a.n_rows(), a.n_cols(), a.nnz())?;
    for r in 0..a.n_rows() {
        let (cols, vals) = a.row(r);
        for (c, v) in cols.iter().zip(vals) {
            writeln!(out, "{} {} {:.16e}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}

/// A parsed Matrix Market coordinate file; indices are zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixMarket {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

pub fn read_matrix_market(text: &str) -> Result<MatrixMarket> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == MATRIX_MARKET_HEADER => {}
        _ => {
            return Err(Error::Format(format!(
                "first line must be '{MATRIX_MARKET_HEADER}'"
            )))
        }
    }
    let mut lines = lines.filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let size = lines
        .next()
        .ok_or_else(|| Error::Format("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Format(format!("bad size line '{size}'")))
        })
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(Error::Format(format!(
            "size line needs three numbers: '{size}'"
        )));
    };
    let mut entries = Vec::with_capacity(nnz);
    for line in lines {
        let bad = || Error::Format(format!("bad entry '{line}'"));
        let mut it = line.split_whitespace();
        let r: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let c: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let v: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        if r == 0 || c == 0 || r > rows || c > cols {
            return Err(Error::Format(format!(
                "entry ({r}, {c}) outside {rows}x{cols}"
            )));
        }
        entries.push((r - 1, c - 1, v));
    }
    if entries.len() != nnz {
        return Err(Error::Format(format!(
            "header announces {nnz} entries, found {}",
            entries.len()
        )));
    }
    Ok(MatrixMarket {
        rows,
        cols,
        entries,
    })
}

/// 8-bit binary PGM with linear min–max scaling. The top image row is the
/// largest `y`; the scale is kept in a `# min=… max=…` comment.
pub fn pgm_bytes(f: &Image) -> Vec<u8> {
    let n = f.grid().n();
    let (lo, hi) = f
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    let mut out = format!("P5\n# min={lo:.16e} max={hi:.16e}\n{n} {n}\n255\n").into_bytes();
    for row in 0..n {
        let j = n - 1 - row;
        for i in 0..n {
            let level = if span > 0.0 {
                ((f.get(i, j) - lo) / span * 255.0).round()
            } else {
                0.0
            };
            out.push(level as u8);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub pixels: Vec<u8>,
}

/// Parses a binary P5 file with maxval 255, picking up the scale comment.
pub fn parse_pgm(bytes: &[u8]) -> Result<Pgm> {
    let mut pos = 0;
    let mut tokens = Vec::new();
    let (mut min, mut max) = (None, None);
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(Error::Format("truncated PGM header".into()));
        }
        if bytes[pos] == b'#' {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .map_or(bytes.len(), |k| pos + k);
            let comment = String::from_utf8_lossy(&bytes[pos + 1..end]);
            for part in comment.split_whitespace() {
                if let Some(v) = part.strip_prefix("min=") {
                    min = v.parse().ok();
                } else if let Some(v) = part.strip_prefix("max=") {
                    max = v.parse().ok();
                }
            }
            pos = end;
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != "P5" {
        return Err(Error::Format(format!("not a binary PGM: {}", tokens[0])));
    }
    let num = |k: usize| {
        tokens[k]
            .parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM field '{}'", tokens[k])))
    };
    let (width, height, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let pixels = bytes.get(pos + 1..).unwrap_or_default().to_vec();
    if pixels.len() != width * height {
        return Err(Error::Format(format!(
            "PGM raster needs {} bytes, found {}",
            width * height,
            pixels.len()
        )));
    }
    Ok(Pgm {
        width,
        height,
        min,
        max,
        pixels,
    })
}

pub const REPORT_COLUMNS: &str = "example,weight,n_x,n_s,n_phi,angle_offset,mask_radius,rel_error,error_is_relative,prediction_max_deviation,runtime_seconds";

/// One-row CSV with a header; floats carry 17 significant digits.
pub fn report_csv(r: &ExperimentReport) -> String {
    let c = &r.config;
    let prediction = r
        .prediction_max_deviation
        .map(|v| format!("{v:.16e}"))
        .unwrap_or_default();
    format!(
        "{REPORT_COLUMNS}\n{},{},{},{},{},{:.16e},{:.16e},{:.16e},{},{},{:.16e}\n",
        c.example.label(),
        c.weight.name(),
        c.n_x,
        c.n_s,
        c.n_phi,
        c.angle_offset,
        c.mask_radius,
        r.rel_error.value,
        r.rel_error.relative,
        prediction,
        r.runtime_seconds,
    )
}

/// Writes `report.csv`, `error_field.rdk` and `error_field.pgm` into `dir`.
pub fn write_report(dir: &Path, r: &ExperimentReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| io_err(dir, source))?;
    let csv = dir.join("report.csv");
    fs::write(&csv, report_csv(r)).map_err(|source| io_err(&csv, source))?;
    RdkFile::from_image(&r.error_field).write(&dir.join("error_field.rdk"))?;
    let pgm = dir.join("error_field.pgm");
    fs::write(&pgm, pgm_bytes(&r.error_field)).map_err(|source| io_err(&pgm, source))
}
