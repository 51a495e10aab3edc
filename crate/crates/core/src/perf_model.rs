//! Roofline-style blocking analysis for on-the-fly sketching.
//!
//! Model: a single cache holding `M` matrix entries, a uniformly random
//! sparse `A` of density `ρ`, and a cost `h ∈ (0, 1)` per generated sample
//! relative to moving one entry from memory. A tile multiplies a `d1 × m1`
//! block of `S` (generated, not cached) with an `m1 × n1` block of `A`
//! into a `d1 × n1` block of `Â`, subject to `d1·n1 + m1·n1·ρ ≤ M`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MachineModel {
    /// Cache size `M` in matrix entries.
    pub cache_entries: f64,
    /// Cost of one generated sample relative to one memory access.
    pub h: f64,
    /// Machine balance: peak flop rate over memory rate.
    pub balance: f64,
}

impl MachineModel {
    pub fn new(cache_entries: f64, h: f64, balance: f64) -> Result<Self> {
        if !cache_entries.is_finite() || cache_entries <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cache size {cache_entries} must be positive"
            )));
        }
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "generation cost h = {h} must lie in (0, 1)"
            )));
        }
        if !balance.is_finite() || balance <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "machine balance {balance} must be positive"
            )));
        }
        Ok(MachineModel {
            cache_entries,
            h,
            balance,
        })
    }

    /// Cache size in entries from a byte count.
    pub fn from_bytes(cache_bytes: f64, element_bytes: f64, h: f64, balance: f64) -> Result<Self> {
        if element_bytes.is_nan() || element_bytes <= 0.0 {
            return Err(Error::InvalidArgument("element size must be positive".into()));
        }
        Self::new(cache_bytes / element_bytes, h, balance)
    }
}

/// Tile shape: `S_sub` is `d1 × m1`, `A_sub` is `m1 × n1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockShape {
    pub d1: u64,
    pub m1: u64,
    pub n1: u64,
}

impl BlockShape {
    /// Cache footprint `d1·n1 + m1·n1·ρ`.
    pub fn footprint(&self, rho: f64) -> f64 {
        let (d1, m1, n1) = (self.d1 as f64, self.m1 as f64, self.n1 as f64);
        d1 * n1 + m1 * n1 * rho
    }

    pub fn is_feasible(&self, cache_entries: f64, rho: f64) -> bool {
        self.d1 >= 1 && self.m1 >= 1 && self.n1 >= 1 && self.footprint(rho) <= cache_entries
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    SmallRho,
    LargeRho,
}

/// `P(row has a nonzero) = 1 - (1 - ρ)^n1`, evaluated without cancellation.
fn hit_probability(n1: f64, rho: f64) -> f64 {
    if n1 <= 0.0 || rho <= 0.0 {
        return 0.0;
    }
    if rho >= 1.0 {
        return 1.0;
    }
    -(n1 * (-rho).ln_1p()).exp_m1()
}

/// Expected number of rows with at least one nonzero in an `m1 × n1` block
/// of density `ρ`: `m1·(1 − (1 − ρ)^n1)`.
pub fn expected_nonzero_rows(m1: u64, n1: u64, rho: f64) -> f64 {
    m1 as f64 * hit_probability(n1 as f64, rho)
}

/// Reciprocal computational intensity
/// `d·m·n·(M + h·d1·m1·(1 − (1 − ρ)^n1)) / (d1·m1·n1)`.
pub fn inverse_ci(shape: &BlockShape, mm: &MachineModel, rho: f64, d: u64, m: u64, n: u64) -> Result<f64> {
    if !shape.is_feasible(mm.cache_entries, rho) {
        return Err(Error::Infeasible(format!(
            "{shape:?} needs {} entries, cache holds {}",
            shape.footprint(rho),
            mm.cache_entries
        )));
    }
    let (d1, m1, n1) = (shape.d1 as f64, shape.m1 as f64, shape.n1 as f64);
    let dmn = d as f64 * m as f64 * n as f64;
    Ok(dmn * (mm.cache_entries + mm.h * d1 * m1 * hit_probability(n1, rho)) / (d1 * m1 * n1))
}

/// The objective after substituting the cache-saturating `d1 = M/(2n1)`,
/// `m1 = M/(2n1ρ)`, divided by `d·m·n`:
/// `4·n1·ρ/M + h·(1 − (1 − ρ)^n1)/n1`.
pub fn reduced_objective(n1: f64, mm: &MachineModel, rho: f64) -> f64 {
    4.0 * n1 * rho / mm.cache_entries + mm.h * hit_probability(n1, rho) / n1
}

/// Integer `n1 ∈ [1, ⌊M⌋]` minimizing [`reduced_objective`].
///
/// The objective is convex in `n1` (a linear term plus `(1 − q^n)/n`, which
/// is an average of decaying exponentials), so a ternary search over the
/// integers followed by a scan of the final bracket finds the global
/// minimum. Ties go to the smaller `n1`.
pub fn optimal_n1(mm: &MachineModel, rho: f64) -> u64 {
    let f = |n: u64| reduced_objective(n as f64, mm, rho);
    let (mut lo, mut hi) = (1u64, (mm.cache_entries.floor() as u64).max(1));
    while hi - lo > 3 {
        let a = lo + (hi - lo) / 3;
        let b = hi - (hi - lo) / 3;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    (lo..=hi)
        .min_by(|&x, &y| f(x).total_cmp(&f(y)).then(x.cmp(&y)))
        .expect("non-empty bracket")
}

/// Cache-saturating tile shape: `n1` from [`optimal_n1`], then
/// `d1 = ⌊M/(2n1)⌋` and `m1 = ⌊M/(2n1ρ)⌋`, re-checked for feasibility.
pub fn optimize_blocking(mm: &MachineModel, rho: f64) -> Result<BlockShape> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidArgument(format!("density {rho} not in (0, 1]")));
    }
    let n1 = optimal_n1(mm, rho);
    let half = mm.cache_entries / (2.0 * n1 as f64);
    let shape = BlockShape {
        d1: half.floor() as u64,
        m1: (half / rho).floor().min(u64::MAX as f64) as u64,
        n1,
    };
    if !shape.is_feasible(mm.cache_entries, rho) {
        return Err(Error::Infeasible(format!(
            "cache of {} entries too small for any tile at density {rho}",
            mm.cache_entries
        )));
    }
    Ok(shape)
}

/// `n1 = √(hM) / (2√ρ)`, the minimizer once `(1 − ρ)^n1` is negligible.
pub fn large_rho_n1(mm: &MachineModel, rho: f64) -> f64 {
    (mm.h * mm.cache_entries).sqrt() / (2.0 * rho.sqrt())
}

/// Computational intensity at `n1 = 1`: `2M / (4 + M·h)`.
pub fn ci_small_rho(mm: &MachineModel) -> f64 {
    let m = mm.cache_entries;
    2.0 * m / (4.0 + m * mm.h)
}

/// Estimated fraction of peak, capped at 1.
pub fn peak_fraction(mm: &MachineModel, rho: f64, regime: Regime) -> f64 {
    let raw = match regime {
        Regime::SmallRho => ci_small_rho(mm) / mm.balance,
        Regime::LargeRho => (mm.cache_entries * rho).sqrt() / (2.0 * mm.balance * mm.h.sqrt()),
    };
    raw.min(1.0)
}

/// Flops (`2·d·m·n·ρ`) over the modelled traffic of `shape`.
pub fn computational_intensity(shape: &BlockShape, mm: &MachineModel, rho: f64) -> Result<f64> {
    Ok(2.0 * rho / inverse_ci(shape, mm, rho, 1, 1, 1)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub machine: MachineModel,
    pub rho: f64,
    pub d: u64,
    pub m: u64,
    pub n: u64,
    pub shape: BlockShape,
    pub regime: Regime,
    pub inverse_ci: f64,
    pub ci: f64,
    pub ci_small_rho: f64,
    pub large_rho_n1: f64,
    pub peak_fraction: f64,
    /// Samples generated by the column-outer kernel: `d·ρ·m·n` in expectation.
    pub expected_generated_kji: f64,
    /// Samples generated by the row-outer kernel with `b_n = n1`:
    /// `d · ⌈n/n1⌉ · m·(1 − (1 − ρ)^n1)` in expectation.
    pub expected_generated_jki: f64,
}

/// Optimal tile, intensity and peak estimate for a `d × m` sketch of an
/// `m × n` matrix of density `ρ`.
pub fn analyze(mm: &MachineModel, rho: f64, d: u64, m: u64, n: u64) -> Result<AnalysisReport> {
    let shape = optimize_blocking(mm, rho)?;
    let regime = if shape.n1 == 1 {
        Regime::SmallRho
    } else {
        Regime::LargeRho
    };
    let inv = inverse_ci(&shape, mm, rho, d, m, n)?;
    let dmn = d as f64 * m as f64 * n as f64;
    Ok(AnalysisReport {
        machine: *mm,
        rho,
        d,
        m,
        n,
        shape,
        regime,
        inverse_ci: inv,
        ci: 2.0 * dmn * rho / inv,
        ci_small_rho: ci_small_rho(mm),
        large_rho_n1: large_rho_n1(mm, rho),
        peak_fraction: peak_fraction(mm, rho, regime),
        expected_generated_kji: dmn * rho,
        expected_generated_jki: d as f64 * n.div_ceil(shape.n1) as f64 * expected_nonzero_rows(m, shape.n1, rho),
    })
}
