//! Benchmark harness: one row per configuration and thread count.
//!
//! CSV columns, in order: `config_id, variant, dist, mode, b_n, b_d, threads,
//! d, m, n, nnz, reps, warmup, status, error, total_seconds, sample_seconds,
//! conversion_seconds, kernel_seconds, gflops, generated, speedup,
//! efficiency`. Times are medians over `reps` runs after `warmup` discarded
//! runs. `gflops = 2·nnz·d / total_seconds / 1e9`. `speedup` is relative to
//! the 1-thread row of the same configuration (or the fewest-thread row if
//! there is none) and `efficiency = speedup · base_threads / threads`.
//! Failed rows keep the configuration columns, set `status = failed`, carry
//! the message in `error` and leave the measurements empty.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use otf_sketch::sparse::mtx::read_matrix_market;
use otf_sketch::{sketch, CscMatrix, Distribution, GeneratorMode, SketchConfig, SketchResult, Variant};

use crate::args::{BenchArgs, GenSpec};
use crate::commands::{generate, CmdResult};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub config_id: String,
    pub variant: Variant,
    pub dist: Distribution,
    pub mode: GeneratorMode,
    pub b_n: usize,
    pub b_d: usize,
    pub threads: usize,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub nnz: usize,
    pub reps: usize,
    pub warmup: usize,
    pub status: RowStatus,
    pub error: Option<String>,
    pub total_seconds: Option<f64>,
    pub sample_seconds: Option<f64>,
    pub conversion_seconds: Option<f64>,
    pub kernel_seconds: Option<f64>,
    pub gflops: Option<f64>,
    pub generated: Option<u64>,
    pub speedup: Option<f64>,
    pub efficiency: Option<f64>,
}

#[derive(Serialize)]
struct MatrixInfo {
    source: String,
    m: usize,
    n: usize,
    nnz: usize,
}

#[derive(Serialize)]
struct BenchReport<'a> {
    schema_version: u32,
    matrix: MatrixInfo,
    rows: &'a [BenchRow],
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

fn load(args: &BenchArgs) -> Result<(CscMatrix, String), CliError> {
    match (&args.matrix, args.kind) {
        (Some(path), None) => Ok((read_matrix_market(path)?, path.display().to_string())),
        (None, Some(kind)) => {
            let spec = GenSpec {
                kind,
                m: args.m.expect("clap requires --m with --kind"),
                n: args.n.expect("clap requires --n with --kind"),
                rho: args.rho,
                gen_seed: args.gen_seed,
            };
            let source = format!(
                "{kind:?}({}x{}, rho={:?}, seed={})",
                spec.m, spec.n, spec.rho, spec.gen_seed
            );
            Ok((generate(&spec)?, source))
        }
        _ => Err(CliError::Usage("bench needs exactly one of --matrix or --kind".into())),
    }
}

fn measure(
    a: &CscMatrix,
    cfg: &SketchConfig,
    reps: usize,
    warmup: usize,
) -> otf_sketch::Result<(f64, SketchResult, Vec<SketchResult>)> {
    for _ in 0..warmup {
        sketch(a, cfg)?;
    }
    let mut totals = Vec::with_capacity(reps);
    let mut results = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        let r = sketch(a, cfg)?;
        totals.push(t.elapsed().as_secs_f64());
        results.push(r);
    }
    let last = results.pop().expect("reps >= 1");
    Ok((median(totals), last, results))
}

pub fn bench_rows(a: &CscMatrix, args: &BenchArgs) -> Vec<BenchRow> {
    let (m, n, nnz) = (a.nrows(), a.ncols(), a.nnz());
    let d = args.size.rows(n);
    let mut rows = Vec::new();
    for &variant in &args.variants {
        for &dist in &args.dists {
            for &mode in &args.modes {
                for &b_n in &args.bn {
                    for &b_d in &args.bd {
                        let (variant, dist, mode): (Variant, Distribution, GeneratorMode) =
                            (variant.into(), dist.into(), mode.into());
                        let config_id = format!(
                            "{}-{}-{}-bn{b_n}-bd{b_d}",
                            serde_plain(&variant),
                            serde_plain(&dist),
                            serde_plain(&mode)
                        );
                        let first = rows.len();
                        for &threads in &args.threads {
                            let mut cfg = SketchConfig::new(d)
                                .with_variant(variant)
                                .with_dist(dist)
                                .with_mode(mode)
                                .with_blocks(b_n, b_d)
                                .with_seed(args.seed)
                                .with_threads(threads);
                            cfg.time_sampling = args.time_sampling;
                            let mut row = BenchRow {
                                config_id: config_id.clone(),
                                variant,
                                dist,
                                mode,
                                b_n,
                                b_d,
                                threads,
                                d,
                                m,
                                n,
                                nnz,
                                reps: args.reps,
                                warmup: args.warmup,
                                status: RowStatus::Failed,
                                error: None,
                                total_seconds: None,
                                sample_seconds: None,
                                conversion_seconds: None,
                                kernel_seconds: None,
                                gflops: None,
                                generated: None,
                                speedup: None,
                                efficiency: None,
                            };
                            match measure(a, &cfg, args.reps, args.warmup) {
                                Ok((total, last, rest)) => {
                                    let all: Vec<&SketchResult> = rest.iter().chain(std::iter::once(&last)).collect();
                                    let med =
                                        |f: &dyn Fn(&SketchResult) -> f64| median(all.iter().map(|r| f(r)).collect());
                                    row.status = RowStatus::Ok;
                                    row.total_seconds = Some(total);
                                    row.sample_seconds = args
                                        .time_sampling
                                        .then(|| med(&|r| r.stats.sample_seconds.unwrap_or(0.0)).min(total));
                                    row.conversion_seconds = Some(med(&|r| r.stats.conversion_seconds));
                                    row.kernel_seconds = Some(med(&|r| r.stats.kernel_seconds));
                                    row.gflops = Some(2.0 * nnz as f64 * d as f64 / total.max(f64::MIN_POSITIVE) / 1e9);
                                    row.generated = Some(last.stats.generated);
                                }
                                Err(e) => {
                                    log::warn!("{config_id} threads={threads}: {e}");
                                    row.error = Some(e.to_string());
                                }
                            }
                            rows.push(row);
                        }
                        fill_speedup(&mut rows[first..]);
                    }
                }
            }
        }
    }
    rows
}

fn fill_speedup(group: &mut [BenchRow]) {
    let base = group
        .iter()
        .filter(|r| r.status == RowStatus::Ok)
        .min_by_key(|r| r.threads)
        .map(|r| (r.threads, r.total_seconds.expect("ok rows are timed")));
    let Some((base_threads, base_time)) = base else {
        return;
    };
    for r in group.iter_mut().filter(|r| r.status == RowStatus::Ok) {
        let speedup = base_time / r.total_seconds.expect("ok rows are timed").max(f64::MIN_POSITIVE);
        r.speedup = Some(speedup);
        r.efficiency = Some(speedup * base_threads as f64 / r.threads as f64);
    }
}

fn serde_plain<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn write_csv(rows: &[BenchRow], w: impl Write) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

fn create(path: &PathBuf) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn run(args: BenchArgs) -> CmdResult {
    if args.threads.contains(&0) {
        return Err(CliError::Usage("thread counts must be at least 1".into()));
    }
    let (a, source) = load(&args)?;
    let rows = bench_rows(&a, &args);
    match &args.csv {
        Some(p) => write_csv(&rows, create(p)?)?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    if let Some(p) = &args.json {
        let report = BenchReport {
            schema_version: SCHEMA_VERSION,
            matrix: MatrixInfo {
                source,
                m: a.nrows(),
                n: a.ncols(),
                nnz: a.nnz(),
            },
            rows: &rows,
        };
        let mut f = create(p)?;
        serde_json::to_writer_pretty(&mut f, &report)?;
        writeln!(f)?;
    }
    Ok(0)
}
