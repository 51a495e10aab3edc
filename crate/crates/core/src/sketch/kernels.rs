//! Compute kernels for one output tile `Â[r..r+d1, cols]`.
//!
//! Both kernels accumulate each output entry over ascending source rows `j`,
//! starting from zero, with a separate multiply and add. Given the same
//! entries of `S`, their results are bitwise identical to each other and to
//! the dense reference product.

use crate::rng::SketchSampler;
use crate::sparse::{CscMatrix, CsrBlock};

/// Work counters for one kernel invocation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KernelCounts {
    /// Samples of `S` generated.
    pub generated: u64,
    /// Length-`d1` column updates `tile[:, k] += a · v`.
    pub column_updates: u64,
}

impl std::ops::AddAssign for KernelCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.generated += rhs.generated;
        self.column_updates += rhs.column_updates;
    }
}

#[inline]
fn axpy(out: &mut [f64], a: f64, v: &[f64]) {
    for (o, &s) in out.iter_mut().zip(v) {
        *o += a * s;
    }
}

/// Column-outer kernel over CSC columns `col_start..col_start + width`.
///
/// `tile` is the column-major `d1 × width` destination. For every stored
/// nonzero `(j, a)` of column `k`, `S[r..r+d1, j]` is regenerated and
/// `tile[:, k] += a · S[r..r+d1, j]`. Generates `d1` samples per nonzero.
pub fn kernel_kji(
    tile: &mut [f64],
    d1: usize,
    a: &CscMatrix,
    col_start: usize,
    width: usize,
    r: usize,
    sampler: &mut SketchSampler,
) -> KernelCounts {
    debug_assert_eq!(tile.len(), d1 * width);
    let before = sampler.generated();
    let mut v = vec![0.0; d1];
    let mut updates = 0u64;
    for (k, out) in tile.chunks_exact_mut(d1.max(1)).take(width).enumerate() {
        let (rows, vals) = a.col(col_start + k);
        for (&j, &aj) in rows.iter().zip(vals) {
            sampler.set_state(r as u64, j as u64);
            sampler.fill(&mut v);
            axpy(out, aj, &v);
        }
        updates += rows.len() as u64;
    }
    KernelCounts {
        generated: sampler.generated() - before,
        column_updates: updates,
    }
}

/// Row-outer kernel over one blocked-CSR block.
///
/// For every row `j` of the block with at least one entry, `S[r..r+d1, j]`
/// is regenerated once and reused for all of the row's entries. Empty rows
/// generate nothing.
pub fn kernel_jki(
    tile: &mut [f64],
    d1: usize,
    block: &CsrBlock,
    r: usize,
    sampler: &mut SketchSampler,
) -> KernelCounts {
    debug_assert_eq!(tile.len(), d1 * block.width);
    let before = sampler.generated();
    let mut v = vec![0.0; d1];
    let mut updates = 0u64;
    for j in 0..block.row_ptr.len() - 1 {
        let (cols, vals) = block.row(j);
        if cols.is_empty() {
            continue;
        }
        sampler.set_state(r as u64, j as u64);
        sampler.fill(&mut v);
        for (&k, &ajk) in cols.iter().zip(vals) {
            axpy(&mut tile[k * d1..(k + 1) * d1], ajk, &v);
        }
        updates += cols.len() as u64;
    }
    KernelCounts {
        generated: sampler.generated() - before,
        column_updates: updates,
    }
}
