//! Blocked sketching engine.
//!
//! `Â = S·A` is computed over a grid of output tiles: column blocks of width
//! `b_n` times row blocks of height `b_d`. The inner dimension `m` is never
//! blocked. Tiles are disjoint, so they are computed in parallel without
//! locks, each worker owning its own [`SketchSampler`].

mod explicit;
pub mod export;
mod kernels;

use std::borrow::Cow;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{scaled_sketch_factor, Distribution, GeneratorMode, SketchSampler};
use crate::sparse::{BlockedCsrMatrix, CscMatrix, DenseMatrix};

pub use explicit::{materialize_s, sketch_explicit, sketch_explicit_with_cap, EXPLICIT_CAP};
pub use kernels::{kernel_jki, kernel_kji, KernelCounts};

pub const DEFAULT_BLOCK_N: usize = 500;
pub const DEFAULT_BLOCK_D: usize = 3000;

/// Loop order of the compute kernel.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Column-outer over CSC; generates `d` samples per nonzero.
    #[default]
    Kji,
    /// Row-outer over blocked CSR; generates `d` samples per nonzero block row.
    Jki,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SketchConfig {
    /// Sketch rows.
    pub d: usize,
    /// Column block width. Values above `n` are clamped to `n`.
    pub b_n: usize,
    /// Sketch-row block height. Values above `d` are clamped to `d`.
    pub b_d: usize,
    pub variant: Variant,
    pub dist: Distribution,
    pub mode: GeneratorMode,
    pub seed: u64,
    pub threads: usize,
    /// Time the samplers (see [`SketchSampler::with_timing`]).
    pub time_sampling: bool,
}

impl SketchConfig {
    pub fn new(d: usize) -> Self {
        SketchConfig {
            d,
            b_n: DEFAULT_BLOCK_N,
            b_d: DEFAULT_BLOCK_D,
            variant: Variant::Kji,
            dist: Distribution::Uniform,
            mode: GeneratorMode::Counter,
            seed: 0,
            threads: 1,
            time_sampling: false,
        }
    }

    pub fn with_blocks(mut self, b_n: usize, b_d: usize) -> Self {
        self.b_n = b_n;
        self.b_d = b_d;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_dist(mut self, dist: Distribution) -> Self {
        self.dist = dist;
        self
    }

    pub fn with_mode(mut self, mode: GeneratorMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidArgument("sketch size d must be at least 1".into()));
        }
        if self.b_n == 0 || self.b_d == 0 {
            return Err(Error::InvalidArgument("block sizes must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::InvalidArgument("thread count must be at least 1".into()));
        }
        Ok(())
    }

    /// `(b_n, b_d)` clamped to the problem shape.
    pub fn effective_blocks(&self, n: usize) -> (usize, usize) {
        (self.b_n.min(n).max(1), self.b_d.min(self.d).max(1))
    }

    fn sampler(&self) -> SketchSampler {
        SketchSampler::new(self.seed, self.mode, self.dist).with_timing(self.time_sampling)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SketchStats {
    /// Samples of `S` generated across all kernels.
    pub generated: u64,
    pub kernel_calls: u64,
    pub column_updates: u64,
    /// Blocked-CSR construction (JKI only).
    pub conversion_seconds: f64,
    /// Tile computation, excluding conversion.
    pub kernel_seconds: f64,
    /// Sampler time summed over workers and divided by the thread count;
    /// `None` unless sampling was timed.
    pub sample_seconds: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SketchResult {
    pub ahat: DenseMatrix,
    pub stats: SketchStats,
}

/// `Â = S·A` with `S` (`d × m`) regenerated on the fly.
///
/// In counter mode the result is bitwise independent of `b_n`, `b_d`, the
/// kernel variant and the thread count. JKI builds the blocked-CSR copy of
/// `A` itself and reports that time as `conversion_seconds`.
pub fn sketch(a: &CscMatrix, cfg: &SketchConfig) -> Result<SketchResult> {
    sketch_with_blocked(a, None, cfg)
}

/// Like [`sketch`], reusing a pre-built blocked copy of `a` for JKI. Its
/// block width must equal the effective `b_n`.
pub fn sketch_with_blocked(
    a: &CscMatrix,
    blocked: Option<&BlockedCsrMatrix>,
    cfg: &SketchConfig,
) -> Result<SketchResult> {
    cfg.validate()?;
    let (m, n) = a.shape();
    let (b_n, b_d) = cfg.effective_blocks(n);
    if let Some(b) = blocked {
        if b.nrows() != m || b.ncols() != n || b.block_width() != b_n {
            return Err(Error::InvalidArgument(format!(
                "blocked matrix {}x{} width {} does not match A {}x{} with b_n {}",
                b.nrows(),
                b.ncols(),
                b.block_width(),
                m,
                n,
                b_n
            )));
        }
    }

    let a = scale_for(a, cfg.dist);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;

    let mut stats = SketchStats::default();
    let converted;
    let blocked: Option<Cow<'_, BlockedCsrMatrix>> = match cfg.variant {
        Variant::Kji => None,
        Variant::Jki => {
            let t = Instant::now();
            converted = match (blocked, cfg.dist) {
                (Some(b), Distribution::UniformScaled) => Cow::Owned(scale_blocked(b, scaled_sketch_factor())),
                (Some(b), _) => Cow::Borrowed(b),
                (None, _) => Cow::Owned(pool.install(|| BlockedCsrMatrix::from_csc(&a, b_n))?),
            };
            stats.conversion_seconds = t.elapsed().as_secs_f64();
            Some(converted)
        }
    };

    let d = cfg.d;
    let mut ahat = DenseMatrix::zeros(d, n);
    let n_row_blocks = d.div_ceil(b_d);
    let t = Instant::now();
    let tiles: Vec<TileOutcome> = pool.install(|| {
        if n == 0 {
            return Vec::new();
        }
        ahat.values_mut()
            .par_chunks_mut(d * b_n)
            .enumerate()
            .flat_map_iter(|(jb, chunk)| {
                let width = chunk.len() / d;
                let col_start = jb * b_n;
                let compute = |r: usize, d1: usize, tile: &mut [f64]| {
                    let mut sampler = cfg.sampler();
                    let counts = match blocked.as_deref() {
                        None => kernel_kji(tile, d1, &a, col_start, width, r, &mut sampler),
                        Some(b) => kernel_jki(tile, d1, &b.blocks()[jb], r, &mut sampler),
                    };
                    TileOutcome {
                        counts,
                        sample_seconds: sampler.sample_time().map(|t| t.as_secs_f64()),
                    }
                };
                if n_row_blocks == 1 {
                    return vec![compute(0, d, chunk)];
                }
                let done: Vec<(Vec<f64>, TileOutcome)> = (0..n_row_blocks)
                    .into_par_iter()
                    .map(|ib| {
                        let r = ib * b_d;
                        let d1 = b_d.min(d - r);
                        let mut tile = vec![0.0; d1 * width];
                        let out = compute(r, d1, &mut tile);
                        (tile, out)
                    })
                    .collect();
                let mut outcomes = Vec::with_capacity(done.len());
                for (ib, (tile, out)) in done.into_iter().enumerate() {
                    let r = ib * b_d;
                    let d1 = b_d.min(d - r);
                    for k in 0..width {
                        chunk[k * d + r..k * d + r + d1].copy_from_slice(&tile[k * d1..(k + 1) * d1]);
                    }
                    outcomes.push(out);
                }
                outcomes
            })
            .collect()
    });
    stats.kernel_seconds = t.elapsed().as_secs_f64();

    let mut counts = KernelCounts::default();
    let mut sample = 0.0;
    for tile in &tiles {
        counts += tile.counts;
        sample += tile.sample_seconds.unwrap_or(0.0);
    }
    stats.generated = counts.generated;
    stats.column_updates = counts.column_updates;
    stats.kernel_calls = tiles.len() as u64;
    if cfg.time_sampling {
        stats.sample_seconds = Some(sample / cfg.threads as f64);
    }
    Ok(SketchResult { ahat, stats })
}

struct TileOutcome {
    counts: KernelCounts,
    sample_seconds: Option<f64>,
}

/// `A·2⁻³¹` for the integer-valued distribution, `A` otherwise.
pub(crate) fn scale_for(a: &CscMatrix, dist: Distribution) -> Cow<'_, CscMatrix> {
    match dist {
        Distribution::UniformScaled => Cow::Owned(a.scaled(scaled_sketch_factor())),
        _ => Cow::Borrowed(a),
    }
}

fn scale_blocked(b: &BlockedCsrMatrix, f: f64) -> BlockedCsrMatrix {
    let csc = b.to_csc().scaled(f);
    BlockedCsrMatrix::from_csc(&csc, b.block_width()).expect("width already validated")
}

/// Samples the engine will generate for `a` under `cfg`: `d·nnz(A)` for
/// KJI, `d · Σ_blocks (nonzero rows in block)` for JKI.
pub fn generation_count_estimate(a: &CscMatrix, cfg: &SketchConfig) -> u64 {
    let d = cfg.d as u64;
    match cfg.variant {
        Variant::Kji => d * a.nnz() as u64,
        Variant::Jki => {
            let (b_n, _) = cfg.effective_blocks(a.ncols());
            let mut stamp = vec![usize::MAX; a.nrows()];
            let mut rows = 0u64;
            for k in 0..a.ncols() {
                let block = k / b_n;
                for &j in a.col(k).0 {
                    if stamp[j] != block {
                        stamp[j] = block;
                        rows += 1;
                    }
                }
            }
            d * rows
        }
    }
}
