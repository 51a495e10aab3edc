use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use otf_sketch::lsq::Decomposition;
use otf_sketch::sketch::{DEFAULT_BLOCK_D, DEFAULT_BLOCK_N};
use otf_sketch::{Distribution, GeneratorMode, Variant};

pub const THREADS_ENV: &str = "OTFSKETCH_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "otfsketch",
    version,
    about = "Sketch sparse matrices with on-the-fly random numbers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute Â = S·A and write it with a JSON stats sidecar.
    Sketch(SketchArgs),
    /// Solve min ‖Ax − b‖ with sketch-and-precondition or diagonal LSQR.
    Solve(SolveArgs),
    /// Optimal blocking and performance estimates from the cache model.
    Analyze(AnalyzeArgs),
    /// Write a synthetic test matrix in Matrix Market format.
    Gen(GenArgs),
    /// Time sketch configurations over thread counts.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Kji,
    Jki,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Kji => Variant::Kji,
            VariantArg::Jki => Variant::Jki,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Rademacher,
    Uniform,
    UniformScaled,
    Gaussian,
}

impl From<DistArg> for Distribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Rademacher => Distribution::Rademacher,
            DistArg::Uniform => Distribution::Uniform,
            DistArg::UniformScaled => Distribution::UniformScaled,
            DistArg::Gaussian => Distribution::Gaussian,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Counter,
    Checkpoint,
}

impl From<ModeArg> for GeneratorMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Counter => GeneratorMode::Counter,
            ModeArg::Checkpoint => GeneratorMode::Checkpoint,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DecompArg {
    Qr,
    Svd,
}

impl From<DecompArg> for Decomposition {
    fn from(d: DecompArg) -> Self {
        match d {
            DecompArg::Qr => Decomposition::Qr,
            DecompArg::Svd => Decomposition::Svd,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sap,
    Lsqrd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// 16-byte header, then little-endian f64 in column-major order.
    Bin,
    /// Matrix Market dense array.
    Mtx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Uniform,
    AbnormalA,
    AbnormalB,
    AbnormalC,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn gamma_value(s: &str) -> Result<f64, String> {
    let g: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if g > 1.0 && g.is_finite() {
        Ok(g)
    } else {
        Err("must be a finite number greater than 1".into())
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    let h: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if h > 0.0 && h < 1.0 {
        Ok(h)
    } else {
        Err("must lie strictly between 0 and 1".into())
    }
}

fn density(s: &str) -> Result<f64, String> {
    let rho: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if rho > 0.0 && rho <= 1.0 {
        Ok(rho)
    } else {
        Err("must lie in (0, 1]".into())
    }
}

fn positive_real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("must be a positive finite number".into())
    }
}

/// Sketch size: explicit rows or a multiple of the column count.
#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct SketchSize {
    /// Sketch rows.
    #[arg(long, value_parser = positive_usize)]
    pub d: Option<usize>,
    /// Sketch rows as ⌈γ·n⌉.
    #[arg(long, value_parser = gamma_value)]
    pub gamma: Option<f64>,
}

impl SketchSize {
    pub fn rows(&self, n: usize) -> usize {
        match (self.d, self.gamma) {
            (Some(d), _) => d,
            (None, Some(g)) => (g * n as f64).ceil() as usize,
            (None, None) => unreachable!("clap requires one of --d/--gamma"),
        }
    }
}

#[derive(Args, Debug)]
pub struct SketchArgs {
    /// Input matrix (Matrix Market coordinate).
    #[arg(long)]
    pub matrix: PathBuf,
    #[command(flatten)]
    pub size: SketchSize,
    #[arg(long, value_enum, default_value = "kji")]
    pub variant: VariantArg,
    #[arg(long, value_enum, default_value = "uniform")]
    pub dist: DistArg,
    #[arg(long, value_enum, default_value = "counter")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_BLOCK_N, value_parser = positive_usize)]
    pub bn: usize,
    #[arg(long, default_value_t = DEFAULT_BLOCK_D, value_parser = positive_usize)]
    pub bd: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long, env = THREADS_ENV, value_parser = positive_usize)]
    pub threads: Option<usize>,
    /// Output file for Â.
    #[arg(long)]
    pub out: PathBuf,
    /// Output format; defaults to `mtx` for a `.mtx` extension, else `bin`.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Stats sidecar path (default: `<out>.json`).
    #[arg(long)]
    pub stats: Option<PathBuf>,
    /// Measure time spent inside the samplers.
    #[arg(long)]
    pub time_sampling: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 2.0, value_parser = gamma_value)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "qr")]
    pub decomp: DecompArg,
    #[arg(long, value_enum, default_value = "sap")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "uniform")]
    pub dist: DistArg,
    #[arg(long, default_value_t = otf_sketch::lsq::DEFAULT_TOL, value_parser = positive_real)]
    pub tol: f64,
    #[arg(long, default_value_t = otf_sketch::lsq::DEFAULT_MAX_ITER)]
    pub maxit: usize,
    /// Seeds both the right-hand side and the sketch.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = THREADS_ENV, value_parser = positive_usize)]
    pub threads: Option<usize>,
    /// Solve with Aᵀ (for inputs with n ≫ m).
    #[arg(long)]
    pub transpose: bool,
    /// Remove empty rows and columns first.
    #[arg(long)]
    pub drop_empty: bool,
    /// Leave the solution vector out of the report.
    #[arg(long)]
    pub omit_solution: bool,
    /// Report path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Cache size in bytes.
    #[arg(long, value_parser = positive_real)]
    pub cache_bytes: f64,
    /// Bytes per matrix entry.
    #[arg(long, default_value_t = 8.0, value_parser = positive_real)]
    pub elem_bytes: f64,
    /// Cost of one random number relative to one memory access.
    #[arg(long, value_parser = open_unit)]
    pub h: f64,
    /// Machine balance (peak flops per memory access).
    #[arg(long, value_parser = positive_real)]
    pub balance: f64,
    #[arg(long, value_parser = density)]
    pub rho: f64,
    #[arg(long, value_parser = positive_usize)]
    pub d: usize,
    #[arg(long, value_parser = positive_usize)]
    pub m: usize,
    #[arg(long, value_parser = positive_usize)]
    pub n: usize,
}

#[derive(Args, Debug, Clone)]
pub struct GenSpec {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long, value_parser = positive_usize)]
    pub m: usize,
    #[arg(long, value_parser = positive_usize)]
    pub n: usize,
    /// Density (uniform only).
    #[arg(long, value_parser = density)]
    pub rho: Option<f64>,
    #[arg(long = "gen-seed", default_value_t = 0)]
    pub gen_seed: u64,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(flatten)]
    pub spec: GenSpec,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Input matrix; mutually exclusive with `--kind`.
    #[arg(long, conflicts_with = "kind")]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum, requires_all = ["m", "n"])]
    pub kind: Option<GenKind>,
    #[arg(long, value_parser = positive_usize)]
    pub m: Option<usize>,
    #[arg(long, value_parser = positive_usize)]
    pub n: Option<usize>,
    #[arg(long, value_parser = density)]
    pub rho: Option<f64>,
    #[arg(long = "gen-seed", default_value_t = 0)]
    pub gen_seed: u64,
    #[command(flatten)]
    pub size: SketchSize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "kji,jki")]
    pub variants: Vec<VariantArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "uniform")]
    pub dists: Vec<DistArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "counter")]
    pub modes: Vec<ModeArg>,
    #[arg(long, value_delimiter = ',', default_value = "500")]
    pub bn: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "3000")]
    pub bd: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16,32")]
    pub threads: Vec<usize>,
    #[arg(long, default_value_t = 3, value_parser = positive_usize)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Measure sampler time (perturbs the totals).
    #[arg(long)]
    pub time_sampling: bool,
    /// CSV output (default: standard output).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON output.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

pub fn default_threads(arg: Option<usize>) -> usize {
    arg.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}
