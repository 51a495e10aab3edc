use crate::error::{Error, Result};
use crate::sketch::{scale_for, SketchConfig, SketchResult, SketchStats};
use crate::sparse::{CscMatrix, DenseMatrix};

/// Largest `d·m` the explicit reference will materialize by default.
pub const EXPLICIT_CAP: u128 = 100_000_000;

/// The `d × m` matrix implied by `cfg`, generated column by column with one
/// reseek per `b_d` row block (the same checkpoints the engine uses).
pub fn materialize_s(cfg: &SketchConfig, m: usize) -> DenseMatrix {
    let d = cfg.d;
    let b_d = cfg.b_d.clamp(1, d.max(1));
    let mut s = DenseMatrix::zeros(d, m);
    let mut sampler = cfg.sampler();
    for j in 0..m {
        let col = s.col_mut(j);
        for r in (0..d).step_by(b_d) {
            let end = (r + b_d).min(d);
            sampler.set_state(r as u64, j as u64);
            sampler.fill(&mut col[r..end]);
        }
    }
    s
}

/// Reference sketch: materialize `S`, then a plain triple loop with
/// ascending-`j` accumulation.
pub fn sketch_explicit(a: &CscMatrix, cfg: &SketchConfig) -> Result<SketchResult> {
    sketch_explicit_with_cap(a, cfg, EXPLICIT_CAP)
}

pub fn sketch_explicit_with_cap(a: &CscMatrix, cfg: &SketchConfig, cap: u128) -> Result<SketchResult> {
    cfg.validate()?;
    let requested = cfg.d as u128 * a.nrows() as u128;
    if requested > cap {
        return Err(Error::TooLarge { requested, cap });
    }
    let a = scale_for(a, cfg.dist);
    let s = materialize_s(cfg, a.nrows());
    let mut ahat = DenseMatrix::zeros(cfg.d, a.ncols());
    for k in 0..a.ncols() {
        let (rows, vals) = a.col(k);
        for (&j, &ajk) in rows.iter().zip(vals) {
            for i in 0..cfg.d {
                let v = ahat.get(i, k) + s.get(i, j) * ajk;
                ahat.set(i, k, v);
            }
        }
    }
    let stats = SketchStats {
        generated: (cfg.d * a.nrows()) as u64,
        ..SketchStats::default()
    };
    Ok(SketchResult { ahat, stats })
}
