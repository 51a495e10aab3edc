use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{CscMatrix, DenseMatrix};

/// Singular values below `σ_max / SVD_DROP_RATIO` are discarded.
pub const SVD_DROP_RATIO: f64 = 1e12;

/// Default column-norm threshold factor for [`diag_preconditioner`].
pub const DEFAULT_DIAG_EPS: f64 = f64::EPSILON;

/// Right preconditioner `P`, applied as `x = P·y`.
#[derive(Clone, Debug)]
pub enum Preconditioner {
    Identity,
    /// `x_i = D_ii · y_i`.
    Diagonal(Vec<f64>),
    /// `x = R⁻¹·y` for the upper-triangular `R` of a QR factorization.
    Triangular(DMatrix<f64>),
    /// `x = W·y` with `W = V_r·Σ_r⁻¹` (`n × r`).
    SvdFactor {
        w: DMatrix<f64>,
        /// Retained singular values, descending.
        sigma: Vec<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerKind {
    Identity,
    Diagonal,
    Triangular,
    SvdFactor,
}

impl Preconditioner {
    pub fn kind(&self) -> PreconditionerKind {
        match self {
            Preconditioner::Identity => PreconditionerKind::Identity,
            Preconditioner::Diagonal(_) => PreconditionerKind::Diagonal,
            Preconditioner::Triangular(_) => PreconditionerKind::Triangular,
            Preconditioner::SvdFactor { .. } => PreconditionerKind::SvdFactor,
        }
    }

    /// Length of `y` for a matrix with `n` columns.
    pub fn inner_dim(&self, n: usize) -> usize {
        match self {
            Preconditioner::SvdFactor { w, .. } => w.ncols(),
            _ => n,
        }
    }

    /// `x = P·y`.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Identity => y.to_vec(),
            Preconditioner::Diagonal(d) => d.iter().zip(y).map(|(di, yi)| di * yi).collect(),
            Preconditioner::Triangular(r) => r
                .solve_upper_triangular(&DVector::from_column_slice(y))
                .expect("triangular factor checked nonsingular")
                .data
                .into(),
            Preconditioner::SvdFactor { w, .. } => (w * DVector::from_column_slice(y)).data.into(),
        }
    }

    /// `Pᵀ·g`.
    pub fn apply_t(&self, g: &[f64]) -> Vec<f64> {
        match self {
            Preconditioner::Identity => g.to_vec(),
            Preconditioner::Diagonal(d) => d.iter().zip(g).map(|(di, gi)| di * gi).collect(),
            Preconditioner::Triangular(r) => r
                .tr_solve_upper_triangular(&DVector::from_column_slice(g))
                .expect("triangular factor checked nonsingular")
                .data
                .into(),
            Preconditioner::SvdFactor { w, .. } => w.tr_mul(&DVector::from_column_slice(g)).data.into(),
        }
    }
}

/// `D_ii = 1/‖A_i‖₂`, except `D_ii = 1` when `‖A_i‖₂ ≤ ε·√n·max_k ‖A_k‖₂`.
pub fn diag_preconditioner(a: &CscMatrix, eps: f64) -> Preconditioner {
    let norms = a.column_norms();
    let max = norms.iter().copied().fold(0.0, f64::max);
    let cutoff = eps * (a.ncols() as f64).sqrt() * max;
    Preconditioner::Diagonal(
        norms
            .into_iter()
            .map(|c| if c <= cutoff { 1.0 } else { 1.0 / c })
            .collect(),
    )
}

/// Householder QR of the sketch; `None` if `R` has an exactly zero pivot.
pub fn qr_preconditioner(sketch: &DenseMatrix) -> Result<Option<Preconditioner>> {
    let (d, n) = sketch.shape();
    if d < n {
        return Err(Error::DimensionMismatch(format!(
            "sketch {d}x{n} has fewer rows than columns"
        )));
    }
    let r = sketch.to_nalgebra().qr().r();
    if r.diagonal().iter().any(|&x| x == 0.0 || !x.is_finite()) {
        return Ok(None);
    }
    Ok(Some(Preconditioner::Triangular(r)))
}

/// SVD of the sketch, keeping `σ_i ≥ σ_max / 10¹²`.
pub fn svd_preconditioner(sketch: &DenseMatrix) -> Result<Preconditioner> {
    let svd = sketch.to_nalgebra().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD did not return right singular vectors".into()))?;
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax.is_nan() || smax <= 0.0 {
        return Err(Error::Numerical("sketch is identically zero".into()));
    }
    let mut keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] >= smax / SVD_DROP_RATIO).collect();
    keep.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let n = v_t.ncols();
    let mut w = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        for k in 0..n {
            w[(k, c)] = v_t[(i, k)] / sv[i];
        }
    }
    Ok(Preconditioner::SvdFactor {
        w,
        sigma: keep.iter().map(|&i| sv[i]).collect(),
    })
}

/// Largest `m·r` for which [`precond_condition_number`] forms `A·P` densely.
pub const CONDITION_CAP: usize = 50_000_000;

/// 2-norm condition number of `A·P`, formed densely.
pub fn precond_condition_number(a: &CscMatrix, p: &Preconditioner) -> Result<f64> {
    let (m, n) = a.shape();
    let r = p.inner_dim(n);
    if m.saturating_mul(r) > CONDITION_CAP {
        return Err(Error::TooLarge {
            requested: (m * r) as u128,
            cap: CONDITION_CAP as u128,
        });
    }
    let mut ap = DMatrix::zeros(m, r);
    let mut e = vec![0.0; r];
    for c in 0..r {
        e[c] = 1.0;
        let col = a.mul_vec(&p.apply(&e));
        ap.column_mut(c).copy_from_slice(&col);
        e[c] = 0.0;
    }
    let sv = if m > r {
        // Same singular values, much cheaper SVD.
        ap.qr().r().singular_values()
    } else {
        ap.singular_values()
    };
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}
