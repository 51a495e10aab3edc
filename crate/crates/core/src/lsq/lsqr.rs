//! Right-preconditioned LSQR (Paige & Saunders).
//!
//! Solves `min ‖A·P·y − b‖` by Golub–Kahan bidiagonalization of `Ā = A·P`;
//! the caller recovers `x = P·y`.

use serde::{Deserialize, Serialize};

use crate::lsq::precond::Preconditioner;
use crate::sparse::CscMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsqrStatus {
    /// The stopping test on the preconditioned system was met.
    Converged,
    /// A bidiagonalization vector vanished; the iterate is exact for the
    /// Krylov space reached so far.
    Breakdown,
    /// The iteration limit was reached first.
    MaxIterations,
}

impl LsqrStatus {
    pub fn is_converged(self) -> bool {
        !matches!(self, LsqrStatus::MaxIterations)
    }
}

#[derive(Clone, Debug)]
pub struct LsqrOutcome {
    /// Iterate in the preconditioned variable.
    pub y: Vec<f64>,
    /// `P·y`.
    pub x: Vec<f64>,
    pub iterations: usize,
    pub status: LsqrStatus,
    /// Estimate of `‖Āᵀr‖ / (‖Ā‖·‖r‖)` at exit.
    pub metric_estimate: f64,
    /// Estimate of `‖r_k‖` after each iteration (starting with `‖b‖`).
    pub residual_history: Vec<f64>,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn scale(x: &mut [f64], s: f64) {
    x.iter_mut().for_each(|v| *v *= s);
}

/// Runs LSQR until `‖Āᵀr‖ / (‖Ā‖_F·‖r‖) ≤ tol` (with `‖Ā‖_F` the usual
/// running estimate), until `‖r‖ ≤ tol·(‖b‖ + ‖Ā‖·‖y‖)` for consistent
/// systems, or for `max_iter` iterations.
pub fn lsqr(a: &CscMatrix, b: &[f64], p: &Preconditioner, tol: f64, max_iter: usize) -> LsqrOutcome {
    assert_eq!(b.len(), a.nrows(), "lsqr: b has wrong length");
    let n = a.ncols();
    let ny = p.inner_dim(n);

    let op = |y: &[f64]| a.mul_vec(&p.apply(y));
    let op_t = |u: &[f64]| p.apply_t(&a.mul_t_vec(u));

    let mut y = vec![0.0; ny];
    let mut u = b.to_vec();
    let bnorm = norm2(&u);
    let mut beta = bnorm;
    let mut history = vec![bnorm];
    let finish = |y: Vec<f64>, iterations, status, metric, history| LsqrOutcome {
        x: p.apply(&y),
        y,
        iterations,
        status,
        metric_estimate: metric,
        residual_history: history,
    };

    if beta == 0.0 {
        return finish(y, 0, LsqrStatus::Converged, 0.0, history);
    }
    scale(&mut u, 1.0 / beta);
    let mut v = op_t(&u);
    let mut alpha = norm2(&v);
    if alpha == 0.0 {
        // Āᵀb = 0: y = 0 is already a least-squares solution.
        return finish(y, 0, LsqrStatus::Converged, 0.0, history);
    }
    scale(&mut v, 1.0 / alpha);
    let mut w = v.clone();

    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut anorm2 = 0.0f64;
    let mut metric = 1.0;

    for itn in 1..=max_iter {
        // u = Ā v − α u
        let av = op(&v);
        for (ui, avi) in u.iter_mut().zip(&av) {
            *ui = avi - alpha * *ui;
        }
        beta = norm2(&u);
        anorm2 += alpha * alpha + beta * beta;
        if beta > 0.0 {
            scale(&mut u, 1.0 / beta);
            // v = Āᵀ u − β v
            let atu = op_t(&u);
            for (vi, ai) in v.iter_mut().zip(&atu) {
                *vi = ai - beta * *vi;
            }
            alpha = norm2(&v);
            if alpha > 0.0 {
                scale(&mut v, 1.0 / alpha);
            }
        }

        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        let t1 = phi / rho;
        let t2 = -theta / rho;
        for ((yi, wi), vi) in y.iter_mut().zip(w.iter_mut()).zip(&v) {
            *yi += t1 * *wi;
            *wi = vi + t2 * *wi;
        }

        let rnorm = phibar;
        history.push(rnorm);
        let anorm = anorm2.sqrt();
        let arnorm = alpha * c.abs() * phibar;
        metric = if rnorm > 0.0 { arnorm / (anorm * rnorm) } else { 0.0 };

        let consistent = rnorm <= tol * (bnorm + anorm * norm2(&y));
        if consistent || metric <= tol {
            return finish(y, itn, LsqrStatus::Converged, metric, history);
        }
        if beta == 0.0 || alpha == 0.0 {
            return finish(y, itn, LsqrStatus::Breakdown, metric, history);
        }
    }
    finish(y, max_iter, LsqrStatus::MaxIterations, metric, history)
}
