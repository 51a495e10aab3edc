use crate::error::{Error, Result};
use crate::sparse::DenseMatrix;

/// Compressed sparse column matrix with 64-bit values.
///
/// A `CscMatrix` is always canonical: row indices strictly increase within a
/// column and no explicit zeros are stored. Every constructor enforces this.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Builds a matrix from raw CSC arrays, rejecting anything non-canonical.
    pub fn new(nrows: usize, ncols: usize, col_ptr: Vec<usize>, row_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let a = CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        };
        a.validate()?;
        Ok(a)
    }

    // Callers guarantee canonical form.
    pub(crate) fn from_parts_unchecked(
        nrows: usize,
        ncols: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        let a = CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        };
        debug_assert!(a.validate().is_ok());
        a
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CscMatrix {
            nrows: n,
            ncols: n,
            col_ptr: (0..=n).collect(),
            row_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds a canonical matrix from coordinate triplets. Duplicates are
    /// summed and entries that end up exactly zero are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::InvalidStructure(format!(
                    "entry ({i}, {j}) outside {nrows}x{ncols}"
                )));
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|&(i, j, _)| (j, i));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut cols = Vec::with_capacity(sorted.len());
        let mut iter = sorted.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if i2 == i && j2 == j {
                    v += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if v != 0.0 {
                row_idx.push(i);
                values.push(v);
                cols.push(j);
            }
        }
        for &j in &cols {
            col_ptr[j + 1] += 1;
        }
        for j in 0..ncols {
            col_ptr[j + 1] += col_ptr[j];
        }
        Ok(Self::from_parts_unchecked(nrows, ncols, col_ptr, row_idx, values))
    }

    /// Keeps every nonzero of a dense matrix.
    pub fn from_dense(dense: &DenseMatrix) -> Self {
        let (m, n) = dense.shape();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for k in 0..n {
            for (i, &v) in dense.col(k).iter().enumerate() {
                if v != 0.0 {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self::from_parts_unchecked(m, n, col_ptr, row_idx, values)
    }

    /// Checks every structural invariant of the CSC layout.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidStructure(msg));
        if self.col_ptr.len() != self.ncols + 1 {
            return bad(format!(
                "col_ptr has length {}, expected {}",
                self.col_ptr.len(),
                self.ncols + 1
            ));
        }
        if self.col_ptr[0] != 0 {
            return bad("col_ptr[0] != 0".into());
        }
        if self.row_idx.len() != self.values.len() {
            return bad("row_idx and values differ in length".into());
        }
        if self.col_ptr[self.ncols] != self.row_idx.len() {
            return bad(format!(
                "col_ptr[n] = {} but nnz = {}",
                self.col_ptr[self.ncols],
                self.row_idx.len()
            ));
        }
        for k in 0..self.ncols {
            let (lo, hi) = (self.col_ptr[k], self.col_ptr[k + 1]);
            if lo > hi {
                return bad(format!("col_ptr decreases at column {k}"));
            }
            let rows = &self.row_idx[lo..hi];
            for w in rows.windows(2) {
                if w[0] >= w[1] {
                    return bad(format!("rows not strictly increasing in column {k}"));
                }
            }
            if let Some(&last) = rows.last() {
                if last >= self.nrows {
                    return bad(format!("row {last} out of range in column {k}"));
                }
            }
            if self.values[lo..hi].contains(&0.0) {
                return bad(format!("explicit zero stored in column {k}"));
            }
        }
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices and values of column `k`.
    pub fn col(&self, k: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.col_ptr[k], self.col_ptr[k + 1]);
        (&self.row_idx[lo..hi], &self.values[lo..hi])
    }

    /// nnz / (m·n); zero for an empty shape.
    pub fn density(&self) -> f64 {
        let cells = self.nrows as f64 * self.ncols as f64;
        if cells == 0.0 {
            0.0
        } else {
            self.nnz() as f64 / cells
        }
    }

    /// `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.ncols).flat_map(move |k| {
            let (rows, vals) = self.col(k);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, k, v))
        })
    }

    /// Multiplies every stored value by `factor`. Values that underflow to
    /// zero are dropped.
    pub fn scaled(&self, factor: f64) -> CscMatrix {
        if self.values.iter().all(|&v| v * factor != 0.0) {
            let mut out = self.clone();
            out.values.iter_mut().for_each(|v| *v *= factor);
            return out;
        }
        let t: Vec<_> = self.triplets().map(|(i, j, v)| (i, j, v * factor)).collect();
        Self::from_triplets(self.nrows, self.ncols, &t).expect("indices already validated")
    }

    pub fn transpose(&self) -> CscMatrix {
        let (m, n) = self.shape();
        let mut counts = vec![0usize; m + 1];
        for &i in &self.row_idx {
            counts[i + 1] += 1;
        }
        for i in 0..m {
            counts[i + 1] += counts[i];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for k in 0..n {
            let (rows, vals) = self.col(k);
            for (&i, &v) in rows.iter().zip(vals) {
                let p = next[i];
                row_idx[p] = k;
                values[p] = v;
                next[i] += 1;
            }
        }
        Self::from_parts_unchecked(n, m, col_ptr, row_idx, values)
    }

    /// Removes empty rows and empty columns, renumbering the survivors in
    /// their original order.
    pub fn drop_empty(&self) -> CscMatrix {
        let mut row_used = vec![false; self.nrows];
        for &i in &self.row_idx {
            row_used[i] = true;
        }
        let mut new_row = vec![usize::MAX; self.nrows];
        let mut m = 0;
        for (i, used) in row_used.iter().enumerate() {
            if *used {
                new_row[i] = m;
                m += 1;
            }
        }
        let mut col_ptr = vec![0];
        let mut row_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for k in 0..self.ncols {
            let (rows, vals) = self.col(k);
            if rows.is_empty() {
                continue;
            }
            row_idx.extend(rows.iter().map(|&i| new_row[i]));
            values.extend_from_slice(vals);
            col_ptr.push(row_idx.len());
        }
        let n = col_ptr.len() - 1;
        Self::from_parts_unchecked(m, n, col_ptr, row_idx, values)
    }

    /// `y = A·x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "mul_vec: x has wrong length");
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_add(x, &mut y);
        y
    }

    /// `y += A·x`.
    pub fn mul_vec_add(&self, x: &[f64], y: &mut [f64]) {
        for (k, &xk) in x.iter().enumerate() {
            if xk == 0.0 {
                continue;
            }
            let (rows, vals) = self.col(k);
            for (&i, &v) in rows.iter().zip(vals) {
                y[i] += v * xk;
            }
        }
    }

    /// `Aᵀ·y`.
    pub fn mul_t_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows, "mul_t_vec: y has wrong length");
        (0..self.ncols)
            .map(|k| {
                let (rows, vals) = self.col(k);
                rows.iter().zip(vals).map(|(&i, &v)| v * y[i]).sum()
            })
            .collect()
    }

    /// Euclidean norm of each column.
    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.ncols)
            .map(|k| self.col(k).1.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d.set(i, j, v);
        }
        d
    }

    /// Storage footprint of the CSC arrays in bytes (8-byte indices and values).
    pub fn memory_bytes(&self) -> usize {
        8 * (self.col_ptr.len() + self.row_idx.len() + self.values.len())
    }
}
