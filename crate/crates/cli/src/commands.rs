use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use otf_sketch::lsq::{lsqrd_solve, make_rhs, sap_solve, SapConfig};
use otf_sketch::perf_model::{analyze as analyze_model, MachineModel};
use otf_sketch::sketch::export::write_binary;
use otf_sketch::sparse::gen::{gen_abnormal, gen_uniform_sparse, AbnormalKind, ABNORMAL_STRIDE};
use otf_sketch::sparse::mtx::{read_matrix_market, write_dense_matrix_market, write_matrix_market};
use otf_sketch::{sketch as run_sketch, CscMatrix, SketchConfig, SketchStats};

use crate::args::{
    default_threads, AnalyzeArgs, GenArgs, GenKind, GenSpec, MethodArg, OutputFormat, SketchArgs, SolveArgs,
};
use crate::{CliError, EXIT_NOT_CONVERGED};

pub type CmdResult = Result<u8, CliError>;

fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let mut w =
                BufWriter::new(File::create(p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, value)?;
            writeln!(lock)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SketchSidecar<'a> {
    matrix: &'a Path,
    output: &'a Path,
    format: &'static str,
    m: usize,
    n: usize,
    nnz: usize,
    config: &'a SketchConfig,
    stats: &'a SketchStats,
    total_seconds: f64,
}

pub fn sketch(args: SketchArgs) -> CmdResult {
    let a = read_matrix_market(&args.matrix)?;
    let d = args.size.rows(a.ncols());
    let cfg = SketchConfig::new(d)
        .with_variant(args.variant.into())
        .with_dist(args.dist.into())
        .with_mode(args.mode.into())
        .with_blocks(args.bn, args.bd)
        .with_seed(args.seed)
        .with_threads(default_threads(args.threads));
    let cfg = SketchConfig {
        time_sampling: args.time_sampling,
        ..cfg
    };
    let start = std::time::Instant::now();
    let result = run_sketch(&a, &cfg)?;
    let total_seconds = start.elapsed().as_secs_f64();

    let format = args.format.unwrap_or_else(|| {
        if args.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("mtx")) {
            OutputFormat::Mtx
        } else {
            OutputFormat::Bin
        }
    });
    match format {
        OutputFormat::Bin => write_binary(&args.out, &result.ahat)?,
        OutputFormat::Mtx => write_dense_matrix_market(&args.out, &result.ahat)?,
    }
    let stats_path = args.stats.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".json");
        PathBuf::from(p)
    });
    let sidecar = SketchSidecar {
        matrix: &args.matrix,
        output: &args.out,
        format: match format {
            OutputFormat::Bin => "bin",
            OutputFormat::Mtx => "mtx",
        },
        m: a.nrows(),
        n: a.ncols(),
        nnz: a.nnz(),
        config: &cfg,
        stats: &result.stats,
        total_seconds,
    };
    write_json(Some(&stats_path), &sidecar)?;
    log::info!("wrote {}x{} sketch to {}", d, a.ncols(), args.out.display());
    Ok(0)
}

pub fn solve(args: SolveArgs) -> CmdResult {
    let mut a = read_matrix_market(&args.matrix)?;
    if args.transpose {
        a = a.transpose();
    }
    if args.drop_empty {
        a = a.drop_empty();
    }
    let b = make_rhs(&a, args.seed);
    let mut report = match args.method {
        MethodArg::Sap => {
            let mut cfg = SapConfig::new(args.gamma);
            cfg.decomposition = args.decomp.into();
            cfg.tol = args.tol;
            cfg.max_iter = args.maxit;
            cfg.sketch = cfg
                .sketch
                .with_dist(args.dist.into())
                .with_seed(args.seed)
                .with_threads(default_threads(args.threads));
            sap_solve(&a, &b, &cfg)?
        }
        MethodArg::Lsqrd => lsqrd_solve(&a, &b, args.tol, args.maxit)?,
    };
    if args.omit_solution {
        report.x.clear();
    }
    write_json(args.out.as_deref(), &report)?;
    if report.converged {
        Ok(0)
    } else {
        eprintln!("error: not converged after {} iterations", report.iterations);
        Ok(EXIT_NOT_CONVERGED)
    }
}

pub fn analyze(args: AnalyzeArgs) -> CmdResult {
    let mm = MachineModel::from_bytes(args.cache_bytes, args.elem_bytes, args.h, args.balance)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let report = analyze_model(&mm, args.rho, args.d as u64, args.m as u64, args.n as u64)?;
    write_json(None, &report)?;
    Ok(0)
}

pub fn generate(spec: &GenSpec) -> Result<CscMatrix, CliError> {
    let (m, n) = (spec.m, spec.n);
    let kind = match spec.kind {
        GenKind::Uniform => {
            let rho = spec
                .rho
                .ok_or_else(|| CliError::Usage("--rho is required for uniform matrices".into()))?;
            return Ok(gen_uniform_sparse(m, n, rho, spec.gen_seed)?);
        }
        GenKind::AbnormalA if m < ABNORMAL_STRIDE => {
            return Err(CliError::Usage(format!("abnormal-a needs --m >= {ABNORMAL_STRIDE}")));
        }
        GenKind::AbnormalC if n < ABNORMAL_STRIDE => {
            return Err(CliError::Usage(format!("abnormal-c needs --n >= {ABNORMAL_STRIDE}")));
        }
        GenKind::AbnormalB if n < 3 => return Err(CliError::Usage("abnormal-b needs --n >= 3".into())),
        GenKind::AbnormalA => AbnormalKind::A,
        GenKind::AbnormalB => AbnormalKind::B,
        GenKind::AbnormalC => AbnormalKind::C,
    };
    if spec.rho.is_some() {
        log::warn!("--rho is ignored for abnormal matrices");
    }
    Ok(gen_abnormal(kind, m, n, spec.gen_seed)?)
}

pub fn gen(args: GenArgs) -> CmdResult {
    let a = generate(&args.spec)?;
    write_matrix_market(&args.out, &a)?;
    log::info!("wrote {}x{} matrix with {} entries", a.nrows(), a.ncols(), a.nnz());
    Ok(0)
}
