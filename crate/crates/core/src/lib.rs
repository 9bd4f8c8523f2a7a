//! Convolutional discretizations of the 2-D Radon transform.
//!
//! Ray-driven and pixel-driven projectors are both expressed as a weight
//! function `ω(φ, t)` evaluated at `t = x_ij·ϑ_q − s_p`. The forward
//! projector and the backprojector share that weight, so every pair built
//! here is an exact adjoint pair with respect to the cell-area weighted
//! inner products on images and sinograms.
//!
//! Module map:
//!
//! + [`grid`]: pixel, detector and angular discretizations, plus the
//!   [`Image`](grid::Image) and [`Sinogram`](grid::Sinogram) containers.
//! + [`weights`]: the two weight functions and an independent line/pixel
//!   intersection-length oracle.
//! + [`operators`]: forward projection, backprojection, sparse matrix
//!   assembly and the adjoint diagnostic.
//! + [`analytic`]: closed-form references (disk chords, exact
//!   backprojections, angular Riemann sums).
//! + [`experiments`]: backprojection error studies and convergence tables.
//! + [`io`]: binary image/sinogram files, Matrix Market, PGM and CSV output.

pub mod analytic;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod operators;
pub mod weights;

pub use error::{Error, Result};
pub use grid::{AngleSet, DetectorGrid, Geometry, Image, ImageGrid, Sinogram};
pub use operators::{adjoint_gap, assemble_sparse, backproject, forward, SparseOperator};
pub use weights::{WeightFunction, WeightKind};
