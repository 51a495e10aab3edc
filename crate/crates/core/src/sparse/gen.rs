//! Synthetic test matrices.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::sparse::{CscMatrix, DenseMatrix};

/// Row / column stride of the dense lines in [`AbnormalKind::A`] and
/// [`AbnormalKind::C`].
pub const ABNORMAL_STRIDE: usize = 1000;

/// Target density of [`AbnormalKind::B`].
pub const ABNORMAL_B_DENSITY: f64 = 1e-3;

/// Fraction of [`AbnormalKind::B`]'s nonzeros inside the middle third.
pub const ABNORMAL_B_INNER_FRACTION: f64 = 2998.0 / 3000.0;

/// Adversarial sparsity patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbnormalKind {
    /// Every 1000th row dense, all other rows empty.
    A,
    /// Almost all nonzeros inside the middle third of the columns; the
    /// placement inside and outside that block is uniform.
    B,
    /// Every 1000th column dense, all other columns empty.
    C,
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on the open interval (-1, 1) with zero excluded, so every drawn
/// value can be stored as a nonzero.
fn nonzero_value<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = rng.random_range(-1.0..1.0);
        if v != 0.0 && v != -1.0 {
            return v;
        }
    }
}

/// Every entry is independently nonzero with probability `rho`, values iid
/// uniform on (-1, 1).
pub fn gen_uniform_sparse(m: usize, n: usize, rho: f64, seed: u64) -> Result<CscMatrix> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("density {rho} not in (0, 1]")));
    }
    let mut rng = rng_for(seed);
    let binom = Binomial::new(m as u64, rho).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::new();
    let mut values = Vec::new();
    col_ptr.push(0);
    for _ in 0..n {
        // Column count ~ Binomial(m, rho), then a uniform subset of rows:
        // same law as m independent Bernoulli trials.
        let count = binom.sample(&mut rng) as usize;
        let mut rows = index::sample(&mut rng, m, count).into_vec();
        rows.sort_unstable();
        for i in rows {
            row_idx.push(i);
            values.push(nonzero_value(&mut rng));
        }
        col_ptr.push(row_idx.len());
    }
    Ok(CscMatrix::from_parts_unchecked(m, n, col_ptr, row_idx, values))
}

/// Columns `[n/3, 2n/3)` form the middle-third block of [`AbnormalKind::B`].
pub fn middle_third(n: usize) -> std::ops::Range<usize> {
    n / 3..2 * n / 3
}

pub fn gen_abnormal(kind: AbnormalKind, m: usize, n: usize, seed: u64) -> Result<CscMatrix> {
    let mut rng = rng_for(seed);
    match kind {
        AbnormalKind::A => {
            if m < ABNORMAL_STRIDE {
                return Err(Error::InvalidArgument(format!(
                    "abnormal A needs m >= {ABNORMAL_STRIDE}, got {m}"
                )));
            }
            let rows: Vec<usize> = (1..=m / ABNORMAL_STRIDE).map(|t| t * ABNORMAL_STRIDE - 1).collect();
            let mut col_ptr = vec![0];
            let mut row_idx = Vec::with_capacity(rows.len() * n);
            let mut values = Vec::with_capacity(rows.len() * n);
            for _ in 0..n {
                for &i in &rows {
                    row_idx.push(i);
                    values.push(nonzero_value(&mut rng));
                }
                col_ptr.push(row_idx.len());
            }
            Ok(CscMatrix::from_parts_unchecked(m, n, col_ptr, row_idx, values))
        }
        AbnormalKind::C => {
            if n < ABNORMAL_STRIDE {
                return Err(Error::InvalidArgument(format!(
                    "abnormal C needs n >= {ABNORMAL_STRIDE}, got {n}"
                )));
            }
            let mut col_ptr = vec![0];
            let mut row_idx = Vec::with_capacity((n / ABNORMAL_STRIDE) * m);
            let mut values = Vec::with_capacity(row_idx.capacity());
            for k in 0..n {
                if (k + 1) % ABNORMAL_STRIDE == 0 {
                    for i in 0..m {
                        row_idx.push(i);
                        values.push(nonzero_value(&mut rng));
                    }
                }
                col_ptr.push(row_idx.len());
            }
            Ok(CscMatrix::from_parts_unchecked(m, n, col_ptr, row_idx, values))
        }
        AbnormalKind::B => {
            if n < 3 || m == 0 {
                return Err(Error::InvalidArgument(format!(
                    "abnormal B needs n >= 3 and m >= 1, got {m}x{n}"
                )));
            }
            let mid = middle_third(n);
            let width = mid.len();
            let inner_cells = m * width;
            let outer_cells = m * (n - width);
            let total = ((ABNORMAL_B_DENSITY * m as f64 * n as f64).round() as usize).max(1);
            let inner = ((total as f64 * ABNORMAL_B_INNER_FRACTION).round() as usize).min(inner_cells);
            let outer = (total - inner).min(outer_cells);

            let mut triplets = Vec::with_capacity(inner + outer);
            for lin in index::sample(&mut rng, inner_cells, inner) {
                let (i, k) = (lin % m, mid.start + lin / m);
                triplets.push((i, k, nonzero_value(&mut rng)));
            }
            for lin in index::sample(&mut rng, outer_cells, outer) {
                let (i, mut k) = (lin % m, lin / m);
                if k >= mid.start {
                    k += width;
                }
                triplets.push((i, k, nonzero_value(&mut rng)));
            }
            CscMatrix::from_triplets(m, n, &triplets)
        }
    }
}

/// Dense `m×n` matrix `U·diag(sigma)·Vᵀ` with Haar-like random orthonormal
/// `U` and `V`, stored as CSC. `sigma.len()` must equal `n <= m`.
pub fn gen_with_singular_values(m: usize, sigma: &[f64], seed: u64) -> Result<CscMatrix> {
    let n = sigma.len();
    if n > m {
        return Err(Error::InvalidArgument(format!("need n <= m, got {m}x{n}")));
    }
    let mut rng = rng_for(seed);
    let mut gauss = |r: usize, c: usize| DMatrix::<f64>::from_fn(r, c, |_, _| StandardNormal.sample(&mut rng));
    let u = gauss(m, n).qr().q();
    let v = gauss(n, n).qr().q();
    let mut us = u;
    for (k, &s) in sigma.iter().enumerate() {
        us.column_mut(k).scale_mut(s);
    }
    let a = us * v.transpose();
    Ok(CscMatrix::from_dense(&DenseMatrix::from_nalgebra(&a)))
}
