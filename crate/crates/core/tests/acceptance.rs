//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use otf_sketch::lsq::{
    lsqrd_solve, make_rhs, precond_condition_number, qr_preconditioner, sap_memory_bytes, sap_solve, Decomposition,
    SapConfig,
};
use otf_sketch::perf_model::{expected_nonzero_rows, large_rho_n1, optimize_blocking, MachineModel};
use otf_sketch::rng::{raw_word, Distribution, GeneratorMode, SketchSampler};
use otf_sketch::sketch::export::to_bytes;
use otf_sketch::sketch::generation_count_estimate;
use otf_sketch::sparse::gen::{gen_abnormal, gen_uniform_sparse, gen_with_singular_values, AbnormalKind};
use otf_sketch::{sketch, sketch_explicit, CscMatrix, SketchConfig, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const VARIANTS: [Variant; 2] = [Variant::Kji, Variant::Jki];
const DISTS: [Distribution; 4] = [
    Distribution::Rademacher,
    Distribution::Uniform,
    Distribution::UniformScaled,
    Distribution::Gaussian,
];

/// `(variant, b_n, b_d, threads)` with `b_n ∈ {1, 7, n}`, `b_d ∈ {1, 32, d}`.
fn config_grid(n: usize, d: usize) -> Vec<(Variant, usize, usize, usize)> {
    let mut out = Vec::new();
    for variant in VARIANTS {
        for b_n in [1, 7, n] {
            for b_d in [1, 32, d] {
                for threads in [1, 4] {
                    out.push((variant, b_n, b_d, threads));
                }
            }
        }
    }
    out
}

fn cfg_from(d: usize, seed: u64, (variant, b_n, b_d, threads): (Variant, usize, usize, usize)) -> SketchConfig {
    SketchConfig::new(d)
        .with_variant(variant)
        .with_blocks(b_n, b_d)
        .with_threads(threads)
        .with_seed(seed)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let densities = [1e-3, 1e-2, 1e-1];
    let mut runs = 0;
    let mut combos_seen = std::collections::HashSet::new();
    for t in 0..50usize {
        let m = rng.random_range(50..=5000);
        let n = rng.random_range(1..=300);
        let rho = densities[t % 3];
        let d = rng.random_range(8..=40);
        let a = gen_uniform_sparse(m, n, rho, t as u64).map_err(|e| e.to_string())?;
        let grid = config_grid(n, d);
        for c in 0..6 {
            let idx = (t * 6 + c) % grid.len();
            combos_seen.insert(idx);
            let cfg = cfg_from(d, 1000 + t as u64, grid[idx]).with_dist(DISTS[(t + c) % 4]);
            let got = sketch(&a, &cfg).map_err(|e| e.to_string())?.ahat;
            let want = sketch_explicit(&a, &cfg).map_err(|e| e.to_string())?.ahat;
            check(got.bit_eq(&want), || {
                format!("matrix {t} ({m}x{n}, rho {rho}) config {:?} differs", grid[idx])
            })?;
            runs += 1;
        }
    }
    check(combos_seen.len() == 36, || {
        format!("only {} of 36 configs exercised", combos_seen.len())
    })?;
    Ok(format!(
        "50 matrices, {runs} sketches, all 36 block/variant/thread configs bit-identical"
    ))
}

fn determinism() -> Outcome {
    let a = gen_uniform_sparse(1200, 90, 0.02, 5).map_err(|e| e.to_string())?;
    let d = 48;
    let grid = config_grid(90, d);
    let reference = to_bytes(&sketch(&a, &cfg_from(d, 77, grid[0])).unwrap().ahat).unwrap();
    for &c in &grid {
        let bytes = to_bytes(&sketch(&a, &cfg_from(d, 77, c)).unwrap().ahat).unwrap();
        check(bytes == reference, || format!("counter mode: {c:?} differs"))?;
    }
    let mut negatives = 0;
    for variant in VARIANTS {
        for b_n in [1, 7, 90] {
            let mut per_bd = Vec::new();
            for b_d in [1, 32, d] {
                let base = cfg_from(d, 77, (variant, b_n, b_d, 1)).with_mode(GeneratorMode::Checkpoint);
                let first = to_bytes(&sketch(&a, &base).unwrap().ahat).unwrap();
                let again = to_bytes(&sketch(&a, &base).unwrap().ahat).unwrap();
                let threaded = to_bytes(&sketch(&a, &base.clone().with_threads(4)).unwrap().ahat).unwrap();
                check(first == again && first == threaded, || {
                    format!("checkpoint mode not reproducible for {variant:?} b_n={b_n} b_d={b_d}")
                })?;
                per_bd.push(first);
            }
            for i in 0..per_bd.len() {
                for j in i + 1..per_bd.len() {
                    check(per_bd[i] != per_bd[j], || {
                        format!("checkpoint mode: b_d change left output unchanged ({variant:?}, b_n={b_n})")
                    })?;
                    negatives += 1;
                }
            }
        }
    }
    Ok(format!(
        "counter: 36 configs byte-identical; checkpoint: 18 fixed configs reproducible, {negatives} b_d changes all differ"
    ))
}

fn generation_counts() -> Outcome {
    let (m, n, d) = (800, 60, 24);
    let mut t: Vec<_> = gen_uniform_sparse(m, n, 0.03, 9).unwrap().triplets().collect();
    t.extend((0..m).map(|i| (i, i % n, 1.0 + i as f64)));
    let a = CscMatrix::from_triplets(m, n, &t).unwrap();
    let mut checked = 0;
    for variant in VARIANTS {
        for (b_n, b_d) in [(1, 5), (7, 24), (n, 10), (13, 1)] {
            for dist in DISTS {
                let cfg = SketchConfig::new(d)
                    .with_variant(variant)
                    .with_blocks(b_n, b_d)
                    .with_dist(dist);
                let got = sketch(&a, &cfg).unwrap().stats.generated;
                let est = generation_count_estimate(&a, &cfg);
                check(got == est, || {
                    format!("{variant:?} b_n={b_n} b_d={b_d} {dist:?}: {got} != {est}")
                })?;
                checked += 1;
            }
        }
    }
    let jki = sketch(&a, &SketchConfig::new(d).with_variant(Variant::Jki).with_blocks(n, d)).unwrap();
    let kji = sketch(&a, &SketchConfig::new(d).with_variant(Variant::Kji).with_blocks(n, d)).unwrap();
    check(jki.stats.generated == (d * m) as u64, || {
        format!("JKI {} != d*m = {}", jki.stats.generated, d * m)
    })?;
    check(kji.stats.generated == (d * a.nnz()) as u64, || {
        format!("KJI {} != d*nnz = {}", kji.stats.generated, d * a.nnz())
    })?;
    Ok(format!(
        "{checked} counter checks exact; b_n=n: JKI = d*m = {}, KJI = d*nnz = {}",
        d * m,
        d * a.nnz()
    ))
}

fn scan_objective(n: u64, cache: f64, h: f64, rho: f64) -> f64 {
    let n_f = n as f64;
    4.0 * n_f * rho / cache + h * (1.0 - (1.0 - rho).powi(n as i32)) / n_f
}

fn optimizer_optimality() -> Outcome {
    let tuples: [(f64, f64, f64); 20] = [
        (1e4, 0.5, 1e-4),
        (1e4, 0.04, 1e-5),
        (2e4, 0.2, 1e-6),
        (5e4, 0.9, 5e-5),
        (8e4, 0.5, 1e-4),
        (1e3, 0.3, 1e-4),
        (1e4, 0.04, 1.0),
        (1e4, 0.04, 0.5),
        (4e4, 0.1, 0.6),
        (2e4, 0.5, 0.75),
        (5e3, 0.9, 0.9),
        (6e4, 0.25, 0.5),
        (1e4, 0.5, 0.01),
        (1e4, 0.1, 0.1),
        (2e4, 0.2, 0.3),
        (5e3, 0.9, 0.05),
        (3e4, 0.01, 0.002),
        (1e3, 0.3, 0.2),
        (8e3, 0.05, 1e-3),
        (4e4, 0.5, 0.02),
    ];
    let mut worst = 0.0f64;
    for (cache, h, rho) in tuples {
        let mm = MachineModel::new(cache, h, 10.0).map_err(|e| e.to_string())?;
        let shape = optimize_blocking(&mm, rho).map_err(|e| e.to_string())?;
        let best = (1..=cache as u64)
            .map(|n| scan_objective(n, cache, h, rho))
            .fold(f64::INFINITY, f64::min);
        let gap = scan_objective(shape.n1, cache, h, rho) / best - 1.0;
        worst = worst.max(gap);
        check(gap <= 1e-3, || {
            format!("(M={cache}, h={h}, rho={rho}): n1={} is {gap:e} above scan", shape.n1)
        })?;
        if rho <= 1e-4 {
            check(shape.n1 == 1, || {
                format!("(M={cache}, h={h}, rho={rho}): n1={} != 1", shape.n1)
            })?;
        }
        if rho >= 0.5 {
            let closed = large_rho_n1(&mm, rho);
            check((shape.n1 as f64 - closed).abs() <= 1.0, || {
                format!(
                    "(M={cache}, h={h}, rho={rho}): n1={} vs closed form {closed:.3}",
                    shape.n1
                )
            })?;
        }
    }
    Ok(format!(
        "20 tuples, worst objective gap {worst:.1e}; small and large density regimes match"
    ))
}

fn expected_rows() -> Outcome {
    let params: [(u64, u64, f64); 10] = [
        (1000, 5, 0.003),
        (100, 1, 0.01),
        (10, 2, 0.5),
        (200, 10, 0.02),
        (50, 50, 0.01),
        (500, 3, 0.1),
        (300, 20, 0.001),
        (64, 8, 0.25),
        (1000, 1, 0.0005),
        (40, 100, 0.005),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let trials = 10_000;
    let mut worst = 0.0f64;
    for (m1, n1, rho) in params {
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..trials {
            let y = (0..m1)
                .filter(|_| (0..n1).fold(false, |hit, _| rng.random_bool(rho) | hit))
                .count() as f64;
            sum += y;
            sum_sq += y * y;
        }
        let mean = sum / trials as f64;
        let se = ((sum_sq / trials as f64 - mean * mean) / (trials as f64 - 1.0)).sqrt();
        let z = (expected_nonzero_rows(m1, n1, rho) - mean).abs() / se;
        worst = worst.max(z);
        check(z <= 3.0, || format!("({m1}, {n1}, {rho}): {z:.2} standard errors off"))?;
    }
    Ok(format!("10 parameter sets, worst deviation {worst:.2} standard errors"))
}

fn condition_bound() -> Outcome {
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for n in [20, 50, 100] {
        let m = 50 * n;
        let mut conds = Vec::with_capacity(100);
        for t in 0..100u64 {
            let a = gen_uniform_sparse(m, n, 0.05, 10_000 * n as u64 + t).unwrap();
            let cfg = SketchConfig::new(2 * n).with_dist(Distribution::Gaussian).with_seed(t);
            let ahat = sketch(&a, &cfg).unwrap().ahat;
            let p = qr_preconditioner(&ahat).unwrap().ok_or("singular sketch")?;
            conds.push(precond_condition_number(&a, &p).map_err(|e| e.to_string())?);
        }
        conds.sort_by(f64::total_cmp);
        let within = conds.iter().filter(|&&c| c <= 10.0).count();
        let median = (conds[49] + conds[50]) / 2.0;
        lines.push(format!("n={n}: {within}/100 <= 10, median {median:.2}"));
        if within < 95 || median > 6.5 {
            failed.push(n);
        }
    }
    let summary = lines.join("; ");
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{summary} (failing n: {failed:?})"))
    }
}

fn geometric(n: usize, cond: f64) -> Vec<f64> {
    (0..n).map(|i| cond.powf(-(i as f64) / (n - 1) as f64)).collect()
}

struct Problem {
    name: &'static str,
    a: CscMatrix,
}

fn problems(ill_conditioned: bool) -> Vec<Problem> {
    let mut out = vec![
        Problem {
            name: "uniform 5000x100 rho=0.05",
            a: gen_uniform_sparse(5000, 100, 0.05, 1).unwrap(),
        },
        Problem {
            name: "uniform 3000x50 rho=0.1",
            a: gen_uniform_sparse(3000, 50, 0.1, 2).unwrap(),
        },
        Problem {
            name: "uniform 20000x80 rho=0.01",
            a: gen_uniform_sparse(20000, 80, 0.01, 3).unwrap(),
        },
        Problem {
            name: "orthonormal 2000x40",
            a: gen_with_singular_values(2000, &[1.0; 40], 4).unwrap(),
        },
        Problem {
            name: "cond 1e3 2000x50",
            a: gen_with_singular_values(2000, &geometric(50, 1e3), 5).unwrap(),
        },
    ];
    if ill_conditioned {
        out.push(Problem {
            name: "cond 1e6 2000x50",
            a: gen_with_singular_values(2000, &geometric(50, 1e6), 6).unwrap(),
        });
        out.push(Problem {
            name: "cond 1e6 4000x100",
            a: gen_with_singular_values(4000, &geometric(100, 1e6), 7).unwrap(),
        });
    }
    out
}

fn iteration_counts() -> Outcome {
    let mut worst = 0;
    let mut runs = 0;
    for (k, p) in problems(true).iter().enumerate() {
        let b = make_rhs(&p.a, 100 + k as u64);
        for decomposition in [Decomposition::Qr, Decomposition::Svd] {
            let mut cfg = SapConfig::new(2.0);
            cfg.decomposition = decomposition;
            let rep = sap_solve(&p.a, &b, &cfg).map_err(|e| e.to_string())?;
            worst = worst.max(rep.iterations);
            runs += 1;
            check(rep.converged && rep.iterations <= 120, || {
                format!(
                    "{} ({decomposition:?}): {} iterations, status {:?}",
                    p.name, rep.iterations, rep.status
                )
            })?;
        }
    }
    Ok(format!("{runs} SAP solves (incl. cond 1e6), max {worst} iterations"))
}

fn solution_accuracy() -> Outcome {
    let mut worst_sap = 0.0f64;
    let mut worst_d = 0.0f64;
    for (k, p) in problems(false).iter().enumerate() {
        let b = make_rhs(&p.a, 200 + k as u64);
        let sap = sap_solve(&p.a, &b, &SapConfig::new(2.0)).map_err(|e| e.to_string())?;
        let lsqrd = lsqrd_solve(&p.a, &b, 1e-14, 20_000).map_err(|e| e.to_string())?;
        worst_sap = worst_sap.max(sap.error_metric);
        worst_d = worst_d.max(lsqrd.error_metric);
        check(sap.error_metric <= 1e-13, || {
            format!("{}: SAP metric {:e}", p.name, sap.error_metric)
        })?;
        check(lsqrd.converged && lsqrd.error_metric <= 1e-13, || {
            format!(
                "{}: LSQR-D metric {:e} after {} iterations",
                p.name, lsqrd.error_metric, lsqrd.iterations
            )
        })?;
    }
    Ok(format!(
        "5 problems, worst SAP {worst_sap:.2e}, worst LSQR-D {worst_d:.2e}"
    ))
}

fn memory_formula() -> Outcome {
    let small = sap_memory_bytes(582, 2.0) as f64 / 1e6;
    let large = sap_memory_bytes(2586, 2.0) as f64 / 1e6;
    check((small - 5.42).abs() <= 0.01 * 5.42, || format!("n=582: {small} MB"))?;
    check((large - 107.0).abs() <= 0.01 * 107.0, || format!("n=2586: {large} MB"))?;
    let a = gen_uniform_sparse(400, 30, 0.2, 1).unwrap();
    let rep = sap_solve(&a, &make_rhs(&a, 2), &SapConfig::new(2.0)).map_err(|e| e.to_string())?;
    check(rep.sap_extra_memory_bytes == sap_memory_bytes(30, 2.0), || {
        "report disagrees with formula".into()
    })?;
    Ok(format!("n=582: {small:.2} MB, n=2586: {large:.1} MB"))
}

fn rng_statistics() -> Outcome {
    let z: f64 = 3.719_016_485;
    let mut details = Vec::new();
    let text = include_str!("../testdata/raw_word_vectors.csv");
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let parse = |s: &str| s.parse::<u64>().map_err(|e| e.to_string());
        let want = u64::from_str_radix(f[3], 16).map_err(|e| e.to_string())?;
        let got = raw_word(parse(f[0])?, parse(f[1])?, parse(f[2])?);
        check(got == want, || format!("vector row {rows}: {got:016x} != {want:016x}"))?;
        rows += 1;
    }
    check(rows == 64, || format!("{rows} vectors"))?;
    details.push("64 vectors exact".to_string());

    for mode in [GeneratorMode::Counter, GeneratorMode::Checkpoint] {
        let mut s = SketchSampler::new(31, mode, Distribution::Uniform);
        s.set_state(0, 5);
        let mut v = s.get_samples(100_000);
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let ks = v
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let cdf = (x + 1.0) / 2.0;
                (cdf - k as f64 / n).max((k + 1) as f64 / n - cdf)
            })
            .fold(0.0, f64::max);
        let crit = ((2.0f64 / 1e-4).ln() / (2.0 * n)).sqrt();
        check(ks < crit, || format!("{mode:?}: KS {ks} >= {crit}"))?;
        details.push(format!("{mode:?} KS {ks:.4}"));
    }

    let mut counts = [0u64; 256];
    for j in 0..64u64 {
        for i in 0..4096u64 {
            for byte in raw_word(7, i, j).to_le_bytes() {
                counts[byte as usize] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    let expect = total as f64 / 256.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expect).powi(2) / expect).sum();
    let k: f64 = 255.0;
    let c = 2.0 / (9.0 * k);
    let crit = k * (1.0 - c + z * c.sqrt()).powi(3);
    check(chi2 < crit, || format!("byte chi-square {chi2} >= {crit}"))?;
    details.push(format!("byte chi2 {chi2:.1}"));

    let z2 = 3.890_591_886;
    for mode in [GeneratorMode::Counter, GeneratorMode::Checkpoint] {
        let mut s = SketchSampler::new(13, mode, Distribution::Gaussian);
        s.set_state(0, 2);
        let v = s.get_samples(1_000_000);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        check(mean.abs() <= z2 / n.sqrt(), || {
            format!("{mode:?}: gaussian mean {mean}")
        })?;
        check((var - 1.0).abs() <= z2 * (2.0 / (n - 1.0)).sqrt(), || {
            format!("{mode:?}: gaussian variance {var}")
        })?;
        details.push(format!("{mode:?} var {var:.4}"));
    }
    Ok(details.join(", "))
}

fn abnormal_generators() -> Outcome {
    let (m, n) = (100_000, 10_000);
    let mut details = Vec::new();
    for (kind, seed) in [(AbnormalKind::A, 1), (AbnormalKind::B, 2), (AbnormalKind::C, 3)] {
        let a = gen_abnormal(kind, m, n, seed).map_err(|e| e.to_string())?;
        let density = a.density();
        match kind {
            AbnormalKind::B => check((density - 1e-3).abs() <= 1e-4, || format!("B density {density}"))?,
            _ => check(a.nnz() == 1_000_000, || format!("{kind:?} has {} entries", a.nnz()))?,
        }
        for variant in VARIANTS {
            let cfg = SketchConfig::new(16)
                .with_variant(variant)
                .with_blocks(500, 8)
                .with_seed(seed);
            let got = sketch(&a, &cfg).map_err(|e| e.to_string())?.ahat;
            let want = sketch_explicit(&a, &cfg).map_err(|e| e.to_string())?.ahat;
            check(got.bit_eq(&want), || {
                format!("{kind:?} {variant:?}: sketch differs from explicit")
            })?;
        }
        details.push(format!("{kind:?} density {density:.3e}"));
    }
    Ok(format!(
        "{}; both kernels bit-identical to explicit",
        details.join(", ")
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("cross-kernel/blocking/thread determinism", determinism),
        ("generation counts", generation_counts),
        ("optimizer optimality", optimizer_optimality),
        ("expected nonzero rows", expected_rows),
        ("condition-number bound", condition_bound),
        ("iteration counts", iteration_counts),
        ("solution accuracy", solution_accuracy),
        ("memory formula", memory_formula),
        ("rng statistics", rng_statistics),
        ("abnormal generators", abnormal_generators),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", k + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.1}s)", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
