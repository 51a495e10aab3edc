//! Sparse and dense matrix containers.
//!
//! Indices are 0-based everywhere; Matrix Market's 1-based indices are
//! converted in [`mtx`].

mod blocked;
mod csc;
mod dense;
pub mod gen;
pub mod mtx;

pub use blocked::{BlockedCsrMatrix, CsrBlock};
pub use csc::CscMatrix;
pub use dense::DenseMatrix;
