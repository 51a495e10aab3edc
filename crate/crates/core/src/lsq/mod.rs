//! Sketch-and-precondition least squares.
//!
//! [`sap_solve`] sketches `A` (`d = ⌈γn⌉` rows), factors the sketch by QR or
//! SVD, and runs right-preconditioned [`lsqr`] with the factor.
//! [`lsqrd_solve`] is the baseline: LSQR with column-norm scaling.

mod lsqr;
mod precond;

use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sketch::{sketch, SketchConfig};
use crate::sparse::gen::rng_for;
use crate::sparse::CscMatrix;

pub use lsqr::{lsqr, LsqrOutcome, LsqrStatus};
pub use precond::{
    diag_preconditioner, precond_condition_number, qr_preconditioner, svd_preconditioner, Preconditioner,
    PreconditionerKind, CONDITION_CAP, DEFAULT_DIAG_EPS, SVD_DROP_RATIO,
};

pub const DEFAULT_TOL: f64 = 1e-14;
pub const DEFAULT_MAX_ITER: usize = 500;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decomposition {
    #[default]
    Qr,
    Svd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sap,
    Lsqrd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SapConfig {
    /// Oversampling factor; the sketch has `⌈γn⌉` rows.
    pub gamma: f64,
    pub decomposition: Decomposition,
    /// Sketch settings; `d` is overwritten from `gamma`.
    pub sketch: SketchConfig,
    pub tol: f64,
    pub max_iter: usize,
}

impl SapConfig {
    pub fn new(gamma: f64) -> Self {
        SapConfig {
            gamma,
            decomposition: Decomposition::Qr,
            sketch: SketchConfig::new(1),
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn sketch_rows(&self, n: usize) -> usize {
        (self.gamma * n as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !self.gamma.is_finite() || self.gamma <= 1.0 {
            return Err(Error::InvalidArgument(format!("gamma = {} must exceed 1", self.gamma)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tol = {} must be positive", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub decomposition: Option<Decomposition>,
    pub preconditioner: PreconditionerKind,
    pub m: usize,
    pub n: usize,
    /// Sketch rows (0 for LSQR-D).
    pub d: usize,
    /// Columns kept by the preconditioner (`< n` only after SVD truncation).
    pub rank: usize,
    pub iterations: usize,
    pub status: LsqrStatus,
    pub converged: bool,
    /// `‖Aᵀ(Ax − b)‖ / (‖A‖_F·‖Ax − b‖)`.
    pub error_metric: f64,
    pub sketch_seconds: f64,
    pub factor_seconds: f64,
    pub iterate_seconds: f64,
    pub total_seconds: f64,
    /// Dense sketch storage, `d·n·8` bytes.
    pub sap_extra_memory_bytes: u64,
    pub x: Vec<f64>,
}

/// Bytes needed for a `⌈γn⌉ × n` dense sketch of 8-byte reals.
pub fn sap_memory_bytes(n: usize, gamma: f64) -> u64 {
    let d = (gamma * n as f64).ceil() as u64;
    d * n as u64 * 8
}

/// Backward-error style metric `‖Aᵀ(Ax − b)‖₂ / (‖A‖_F·‖Ax − b‖₂)`; zero
/// when the residual or `A` vanishes.
pub fn error_metric(a: &CscMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut r = a.mul_vec(x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let afro = a.frobenius_norm();
    if rnorm == 0.0 || afro == 0.0 {
        return 0.0;
    }
    let atr = a.mul_t_vec(&r);
    atr.iter().map(|v| v * v).sum::<f64>().sqrt() / (afro * rnorm)
}

/// `b = A·w + g`, `w ~ U(−1, 1)ⁿ`, `g ~ N(0, I_m)`, deterministic in `seed`.
pub fn make_rhs(a: &CscMatrix, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed);
    let w: Vec<f64> = (0..a.ncols()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut b: Vec<f64> = (0..a.nrows()).map(|_| StandardNormal.sample(&mut rng)).collect();
    a.mul_vec_add(&w, &mut b);
    b
}

fn check_rhs(a: &CscMatrix, b: &[f64]) -> Result<()> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "b has length {}, A has {} rows",
            b.len(),
            a.nrows()
        )));
    }
    if a.ncols() == 0 {
        return Err(Error::InvalidArgument("A has no columns".into()));
    }
    Ok(())
}

pub fn sap_solve(a: &CscMatrix, b: &[f64], cfg: &SapConfig) -> Result<SolveReport> {
    cfg.validate()?;
    check_rhs(a, b)?;
    let start = Instant::now();
    let (m, n) = a.shape();
    let d = cfg.sketch_rows(n);
    if m < d {
        log::warn!("sketch has more rows ({d}) than A ({m}); sketching does not compress");
    }
    let mut sketch_cfg = cfg.sketch.clone();
    sketch_cfg.d = d;

    let t = Instant::now();
    let ahat = sketch(a, &sketch_cfg)?.ahat;
    let sketch_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (decomposition, p) = match cfg.decomposition {
        Decomposition::Qr => match qr_preconditioner(&ahat)? {
            Some(p) => (Decomposition::Qr, p),
            None => {
                log::warn!("sketch R factor is singular; falling back to SVD preconditioning");
                (Decomposition::Svd, svd_preconditioner(&ahat)?)
            }
        },
        Decomposition::Svd => (Decomposition::Svd, svd_preconditioner(&ahat)?),
    };
    let factor_seconds = t.elapsed().as_secs_f64();
    drop(ahat);

    let t = Instant::now();
    let out = lsqr(a, b, &p, cfg.tol, cfg.max_iter);
    let iterate_seconds = t.elapsed().as_secs_f64();

    Ok(SolveReport {
        method: Method::Sap,
        decomposition: Some(decomposition),
        preconditioner: p.kind(),
        m,
        n,
        d,
        rank: p.inner_dim(n),
        iterations: out.iterations,
        status: out.status,
        converged: out.status.is_converged(),
        error_metric: error_metric(a, &out.x, b),
        sketch_seconds,
        factor_seconds,
        iterate_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        sap_extra_memory_bytes: (d * n * 8) as u64,
        x: out.x,
    })
}

/// LSQR with the diagonal column-norm preconditioner.
pub fn lsqrd_solve(a: &CscMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<SolveReport> {
    check_rhs(a, b)?;
    let start = Instant::now();
    let t = Instant::now();
    let p = diag_preconditioner(a, DEFAULT_DIAG_EPS);
    let factor_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let out = lsqr(a, b, &p, tol, max_iter);
    let iterate_seconds = t.elapsed().as_secs_f64();
    Ok(SolveReport {
        method: Method::Lsqrd,
        decomposition: None,
        preconditioner: p.kind(),
        m: a.nrows(),
        n: a.ncols(),
        d: 0,
        rank: a.ncols(),
        iterations: out.iterations,
        status: out.status,
        converged: out.status.is_converged(),
        error_metric: error_metric(a, &out.x, b),
        sketch_seconds: 0.0,
        factor_seconds,
        iterate_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        sap_extra_memory_bytes: 0,
        x: out.x,
    })
}
