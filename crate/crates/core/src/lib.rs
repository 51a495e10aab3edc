//! Dense sketching of tall sparse matrices, `Â = S·A`, where the random
//! sketching matrix `S` is never stored: its entries are regenerated from a
//! seekable generator inside the multiplication kernels.
//!
//! The crate is split into:
//!
//! * [`sparse`]: CSC / blocked-CSR / dense containers, Matrix Market I/O and
//!   synthetic test-matrix generators.
//! * [`rng`]: counter-based and checkpointed generators plus the sampling
//!   distributions for entries of `S`.
//! * [`sketch`]: the blocked sketching engine with its two compute kernels
//!   and an explicit-`S` reference implementation.
//! * [`perf_model`]: roofline-style blocking analysis.
//! * [`lsq`]: sketch-and-precondition least squares on top of LSQR.

pub mod error;
pub mod lsq;
pub mod perf_model;
pub mod rng;
pub mod sketch;
pub mod sparse;

pub use error::{Error, Result};
pub use rng::{Distribution, GeneratorMode, SketchSampler};
pub use sketch::{sketch, sketch_explicit, SketchConfig, SketchResult, SketchStats, Variant};
pub use sparse::{BlockedCsrMatrix, CscMatrix, DenseMatrix};
