use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

/// One vertical block of a [`BlockedCsrMatrix`]: the columns
/// `col_start..col_start + width` of the source, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrBlock {
    pub col_start: usize,
    pub width: usize,
    /// `m + 1` offsets into `col_idx` / `values`.
    pub row_ptr: Vec<usize>,
    /// Column index local to the block, in `0..width`.
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrBlock {
    pub fn row(&self, j: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[j], self.row_ptr[j + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Number of rows with at least one stored entry.
    pub fn nonzero_rows(&self) -> usize {
        self.row_ptr.windows(2).filter(|w| w[1] > w[0]).count()
    }
}

/// A matrix split into column blocks of width `block_width` (the last one
/// may be narrower), each stored in CSR.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockedCsrMatrix {
    nrows: usize,
    ncols: usize,
    block_width: usize,
    blocks: Vec<CsrBlock>,
}

impl BlockedCsrMatrix {
    /// Splits `a` into `⌈n / b_n⌉` column blocks and transposes each one.
    /// Blocks are built independently (in parallel) and the result does not
    /// depend on the thread count.
    pub fn from_csc(a: &CscMatrix, block_width: usize) -> Result<Self> {
        if block_width == 0 {
            return Err(Error::InvalidArgument("block width must be at least 1".into()));
        }
        let (m, n) = a.shape();
        let nblocks = n.div_ceil(block_width);
        let blocks = (0..nblocks)
            .into_par_iter()
            .map(|b| {
                let start = b * block_width;
                let width = block_width.min(n - start);
                transpose_block(a, start, width)
            })
            .collect();
        Ok(BlockedCsrMatrix {
            nrows: m,
            ncols: n,
            block_width,
            blocks,
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn block_width(&self) -> usize {
        self.block_width
    }

    pub fn blocks(&self) -> &[CsrBlock] {
        &self.blocks
    }

    pub fn nnz(&self) -> usize {
        self.blocks.iter().map(CsrBlock::nnz).sum()
    }

    /// All entries as global `(row, col, value)`, block by block.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.blocks.iter().flat_map(move |blk| {
            (0..self.nrows).flat_map(move |j| {
                let (cols, vals) = blk.row(j);
                cols.iter().zip(vals).map(move |(&k, &v)| (j, blk.col_start + k, v))
            })
        })
    }

    /// Rebuilds the CSC source.
    pub fn to_csc(&self) -> CscMatrix {
        let t: Vec<_> = self.triplets().collect();
        CscMatrix::from_triplets(self.nrows, self.ncols, &t).expect("blocked entries in range")
    }
}

// Counting transpose of columns start..start+width: O(m + nnz(block)).
fn transpose_block(a: &CscMatrix, start: usize, width: usize) -> CsrBlock {
    let m = a.nrows();
    let mut row_ptr = vec![0usize; m + 1];
    for k in start..start + width {
        for &i in a.col(k).0 {
            row_ptr[i + 1] += 1;
        }
    }
    for i in 0..m {
        row_ptr[i + 1] += row_ptr[i];
    }
    let nnz = row_ptr[m];
    let mut next = row_ptr.clone();
    let mut col_idx = vec![0usize; nnz];
    let mut values = vec![0.0; nnz];
    // Columns are visited in ascending order, so each row comes out sorted.
    for k in start..start + width {
        let (rows, vals) = a.col(k);
        for (&i, &v) in rows.iter().zip(vals) {
            let p = next[i];
            col_idx[p] = k - start;
            values[p] = v;
            next[i] += 1;
        }
    }
    CsrBlock {
        col_start: start,
        width,
        row_ptr,
        col_idx,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_two_blocks() {
        let b = BlockedCsrMatrix::from_csc(&CscMatrix::identity(4), 2).unwrap();
        assert_eq!(b.blocks().len(), 2);
        for blk in b.blocks() {
            assert_eq!(blk.nnz(), 2);
            assert_eq!(blk.nonzero_rows(), 2);
        }
        assert_eq!(b.blocks()[0].row(1).0, &[1]);
        assert_eq!(b.blocks()[1].row(3).0, &[1]);
    }

    #[test]
    fn full_width_block_is_csr_of_a() {
        let a = CscMatrix::from_triplets(3, 3, &[(0, 2, 1.0), (0, 0, 2.0), (2, 1, 3.0)]).unwrap();
        let b = BlockedCsrMatrix::from_csc(&a, 3).unwrap();
        assert_eq!(b.blocks().len(), 1);
        let blk = &b.blocks()[0];
        assert_eq!(blk.row_ptr, vec![0, 2, 2, 3]);
        assert_eq!(blk.col_idx, vec![0, 2, 1]);
        assert_eq!(blk.values, vec![2.0, 1.0, 3.0]);
    }

    #[test]
    fn ragged_last_block() {
        let b = BlockedCsrMatrix::from_csc(&CscMatrix::identity(5), 2).unwrap();
        assert_eq!(b.blocks().len(), 3);
        assert_eq!(b.blocks()[2].width, 1);
        assert_eq!(b.to_csc(), CscMatrix::identity(5));
    }

    #[test]
    fn zero_width_rejected() {
        assert!(BlockedCsrMatrix::from_csc(&CscMatrix::identity(2), 0).is_err());
    }
}
