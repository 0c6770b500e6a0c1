//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Dataset-based criteria (5-7) read LIBSVM files `a1a`, `a1a.t`, `w1a`,
//! `w1a.t`, `a5a`, `a5a.t`, `a6a`, `a6a.t` from `$COREBALL_DATA`, or from
//! `data/` at the workspace root. They fail when the files are missing.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use common::{blobs, uniform, Instance};
use coreball::bench::{default_c_grid, run_bench, select_c, BenchOptions, BenchReport, CChoice};
use coreball::core::meb::{
    away_apply_step, away_line_search, candidate, furthest_candidate, furthest_exhaustive, fw_apply_step,
    fw_line_search, gradient, nearest_in_coreset,
};
use coreball::core::rng::solver_rng;
use coreball::core::{
    train_observed, Algorithm, DualState, IterationRecord, KernelSpec, Observer, SolverConfig, TildeKernel,
};
use coreball::libsvm::read_libsvm;
use coreball::train::{check_solver_kernel, KernelChoice, Param};
use coreball_oracle::nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

const EPSILON: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn threshold(eps: f64) -> f64 {
    eps * (2.0 + eps)
}

/// Dense `g = D2 - a' K a` over the support only.
fn dense_g(k: &DMatrix<f64>, delta2: f64, state: &DualState) -> f64 {
    let support = state.coreset();
    let mut quad = 0.0;
    for &i in support {
        for &j in support {
            quad += state.weight(i) * state.weight(j) * k[(i, j)];
        }
    }
    delta2 - quad
}

/// Checks every iterate against dense recomputation.
struct Monitor<'k> {
    k: &'k DMatrix<f64>,
    delta2: f64,
    last: f64,
    steps: u64,
    decreases: u64,
    max_drift: f64,
}

impl Observer for Monitor<'_> {
    fn on_step(&mut self, record: &IterationRecord, state: &DualState, _: &TildeKernel<'_>) {
        let g = dense_g(self.k, self.delta2, state);
        // allow rounding in the dense sum itself
        if g < self.last - 1e-13 * g.abs().max(1.0) {
            self.decreases += 1;
        }
        self.max_drift = self.max_drift.max((record.r2 - g).abs() / g.abs().max(f64::MIN_POSITIVE));
        self.last = g;
        self.steps += 1;
    }
}

struct OracleRuns {
    runs: usize,
    optimal: usize,
    worst_gap: f64,
    monotone: usize,
    steps: u64,
    max_drift: f64,
    certified: usize,
    converged: usize,
    worst_certificate: f64,
    seconds: f64,
}

/// Result of one solver run on one oracle instance.
#[derive(Default)]
struct RunCheck {
    optimal: bool,
    gap: f64,
    monotone: bool,
    steps: u64,
    drift: f64,
    converged: bool,
    certified: bool,
    certificate: f64,
}

fn check_instance(seed: u64) -> Vec<RunCheck> {
    let m = [10, 30, 50][seed as usize % 3];
    let spec = if (seed / 3) % 2 == 0 { KernelSpec::Rbf { sigma2: 1.0 } } else { KernelSpec::Linear };
    let c = [1.0, 10.0, 100.0][(seed / 6) as usize % 3];
    let inst = blobs(m, 3, 0.5, 500 + seed);
    let tk = inst.tilde(spec, c);
    let k = inst.oracle_gram(spec, c);
    let (g_star, _) = coreball_oracle::maximize_g(&k, tk.delta2());
    let mut out = Vec::new();
    for algorithm in [Algorithm::Fw, Algorithm::Mfw, Algorithm::Bc] {
        let config = SolverConfig { epsilon: EPSILON, seed, ..SolverConfig::default() };
        let mut monitor =
            Monitor { k: &k, delta2: tk.delta2(), last: f64::NEG_INFINITY, steps: 0, decreases: 0, max_drift: 0.0 };
        let sol = train_observed(&tk, algorithm, &config, &mut monitor).expect("solver error");
        let g = dense_g(&k, tk.delta2(), &sol.state);
        let mut run = RunCheck {
            optimal: sol.stats.converged && g >= (1.0 - threshold(EPSILON)) * g_star,
            gap: (g_star - g) / g_star,
            monotone: monitor.decreases == 0,
            steps: monitor.steps,
            drift: monitor.max_drift,
            converged: sol.stats.converged,
            ..RunCheck::default()
        };
        if sol.stats.converged {
            let alpha = sol.state.alpha();
            let grad: Vec<f64> = (0..m).map(|i| -2.0 * (0..m).map(|j| k[(i, j)] * alpha[j]).sum::<f64>()).collect();
            let mean: f64 = grad.iter().zip(alpha).map(|(g, a)| g * a).sum();
            let top = grad.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            run.certificate = (top - mean) / (threshold(EPSILON) * g);
            run.certified = run.certificate <= 1.0 + 1e-9;
        }
        out.push(run);
    }
    out
}

/// Criteria 1, 2 and the certificate half of 8 share these runs.
fn oracle_runs() -> OracleRuns {
    let start = Instant::now();
    let checks: Vec<RunCheck> = (0..50u64).into_par_iter().flat_map_iter(check_instance).collect();
    OracleRuns {
        runs: checks.len(),
        optimal: checks.iter().filter(|r| r.optimal).count(),
        worst_gap: checks.iter().map(|r| r.gap).fold(0.0, f64::max),
        monotone: checks.iter().filter(|r| r.monotone).count(),
        steps: checks.iter().map(|r| r.steps).sum(),
        max_drift: checks.iter().map(|r| r.drift).fold(0.0, f64::max),
        certified: checks.iter().filter(|r| r.certified).count(),
        converged: checks.iter().filter(|r| r.converged).count(),
        worst_certificate: checks.iter().filter(|r| r.converged).map(|r| r.certificate).fold(f64::NEG_INFINITY, f64::max),
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn random_state(tk: &TildeKernel<'_>, support: usize, rng: &mut impl Rng) -> DualState {
    let rows = rand::seq::index::sample(rng, tk.len(), support).into_vec();
    let raw: Vec<f64> = rows.iter().map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<(usize, f64)> = rows.iter().zip(&raw).map(|(&i, &w)| (i, w / total)).collect();
    DualState::from_weights(tk, &weights).unwrap()
}

/// Best `g` on a 1e-3 grid along the FW (or away) segment from `state`.
fn grid_best(k: &DMatrix<f64>, delta2: f64, state: &DualState, i: usize, away: bool, hi: f64) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let steps = (hi / 1e-3).floor() as usize;
    let mut a = state.alpha().to_vec();
    for s in 0..=steps {
        let l = s as f64 * 1e-3;
        for (v, &base) in a.iter_mut().zip(state.alpha()) {
            *v = base * if away { 1.0 + l } else { 1.0 - l };
        }
        a[i] += if away { -l } else { l };
        best = best.max(coreball_oracle::objective(k, delta2, &a));
    }
    best
}

fn criterion_3() -> Outcome {
    let mut rng = solver_rng(3);
    let specs = [
        (KernelSpec::Rbf { sigma2: 0.5 }, 10.0),
        (KernelSpec::Linear, 1.0),
        (KernelSpec::PolyInhomogeneous { degree: 2 }, 5.0),
        (KernelSpec::PolyHomogeneous { gamma: 0.8, degree: 2 }, 2.0),
    ];
    let (mut fw_ok, mut away_ok, mut worst) = (0, 0, f64::NEG_INFINITY);
    let states = 1000;
    for trial in 0..states {
        let (spec, c) = specs[trial % specs.len()];
        let inst = uniform(10, 3, 10_000 + trial as u64);
        let tk = inst.tilde(spec, c);
        let k = inst.oracle_gram(spec, c);
        let state = random_state(&tk, 4, &mut rng);

        let far = furthest_exhaustive(&tk, &state);
        let mut next = state.clone();
        let lambda = fw_line_search(&tk, &state, &far).unwrap_or(0.0);
        fw_apply_step(&tk, &mut next, &far, lambda, 1e-12);
        let diff = grid_best(&k, tk.delta2(), &state, far.index, false, 1.0) - coreball_oracle::objective(&k, tk.delta2(), next.alpha());
        worst = worst.max(diff);
        if diff <= 1e-12 {
            fw_ok += 1;
        }

        let near = nearest_in_coreset(&tk, &state).unwrap();
        let aj = state.weight(near.index);
        let lambda = away_line_search(&tk, &state, &near).unwrap();
        let mut next = state.clone();
        away_apply_step(&tk, &mut next, &near, lambda, 1e-12).unwrap();
        let diff = grid_best(&k, tk.delta2(), &state, near.index, true, aj / (1.0 - aj))
            - coreball_oracle::objective(&k, tk.delta2(), next.alpha());
        worst = worst.max(diff);
        if diff <= 1e-12 {
            away_ok += 1;
        }
    }
    outcome(
        fw_ok == states && away_ok == states,
        format!("FW {fw_ok}/{states}, away {away_ok}/{states} at or above the 1e-3 grid; worst grid excess {worst:.2e}"),
    )
}

fn criterion_4() -> Outcome {
    let inst = uniform(10_000, 5, 4);
    let tk = inst.tilde(KernelSpec::Rbf { sigma2: 1.0 }, 10.0);
    let state = random_state(&tk, 10, &mut solver_rng(44));
    let mut scores: Vec<f64> = (0..tk.len()).map(|i| candidate(&tk, &state, i).score).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    let cutoff = scores[tk.len() / 20 - 1];
    let config = SolverConfig { sample_size: 59, ..SolverConfig::default() };
    let mut rng = solver_rng(404);
    let trials = 1000;
    let hits = (0..trials).filter(|_| furthest_candidate(&tk, &state, &config, &mut rng).score >= cutoff).count();
    let freq = hits as f64 / trials as f64;
    outcome(freq >= 0.94, format!("{hits}/{trials} sampled maxima in the top 5% (frequency {freq:.3}, need >= 0.94)"))
}

fn criterion_8_gradient() -> (bool, String) {
    let mut worst: f64 = 0.0;
    let mut rng = solver_rng(8);
    for (n, (spec, c)) in [(KernelSpec::Rbf { sigma2: 0.6 }, 10.0), (KernelSpec::Linear, 1.0), (KernelSpec::PolyHomogeneous { gamma: 0.5, degree: 2 }, 3.0)]
        .into_iter()
        .enumerate()
    {
        let inst: Instance = uniform(20, 3, 80 + n as u64);
        let tk = inst.tilde(spec, c);
        let k = inst.oracle_gram(spec, c);
        for _ in 0..5 {
            let state = random_state(&tk, 10, &mut rng);
            let grad = gradient(&tk, &state);
            let h = 1e-5;
            for i in 0..tk.len() {
                let mut up = state.alpha().to_vec();
                let mut down = up.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (coreball_oracle::objective(&k, tk.delta2(), &up) - coreball_oracle::objective(&k, tk.delta2(), &down)) / (2.0 * h);
                worst = worst.max((grad[i] - fd).abs() / fd.abs().max(1e-3));
            }
        }
    }
    (worst <= 1e-5, format!("finite differences agree to {worst:.1e} relative"))
}

/// Tail mean of `(g* - g_{k+1}) / (g* - g_k)` over the last 50 steps whose
/// error is still well above rounding.
fn tail_ratio(records: &[IterationRecord], g_star: f64) -> (f64, usize) {
    let floor = 1e-11 * g_star;
    let errors: Vec<f64> = records.iter().map(|r| g_star - r.r2).collect();
    let ratios: Vec<f64> = errors.windows(2).filter(|w| w[0] > floor && w[1] > floor).map(|w| w[1] / w[0]).collect();
    let tail = &ratios[ratios.len().saturating_sub(50)..];
    (tail.iter().sum::<f64>() / tail.len().max(1) as f64, tail.len())
}

fn criterion_9() -> Outcome {
    let inst = blobs(200, 3, 0.5, 2024);
    let spec = KernelSpec::Rbf { sigma2: 1.0 };
    let tk = inst.tilde(spec, 10.0);
    let (g_star, _) = coreball_oracle::maximize_g(&inst.oracle_gram(spec, 10.0), tk.delta2());
    // exhaustive search keeps sampling noise out of the rate comparison
    let config = SolverConfig { epsilon: 1e-9, sample_size: 200, max_iterations: 200_000, ..SolverConfig::default() };
    let mut fw = Vec::new();
    let fw_sol = train_observed(&tk, Algorithm::Fw, &config, &mut fw).unwrap();
    let mut mfw = Vec::new();
    let mfw_sol = train_observed(&tk, Algorithm::Mfw, &config, &mut mfw).unwrap();
    let (fw_ratio, fw_n) = tail_ratio(&fw, g_star);
    let (mfw_ratio, mfw_n) = tail_ratio(&mfw, g_star);
    outcome(
        mfw_n > 0 && fw_n > 0 && mfw_ratio < fw_ratio,
        format!(
            "tail mean error ratio MFW {mfw_ratio:.4} ({mfw_n} steps, {} iterations, converged {}) vs FW {fw_ratio:.6} ({fw_n} steps, {} iterations, converged {})",
            mfw_sol.stats.iterations, mfw_sol.stats.converged, fw_sol.stats.iterations, fw_sol.stats.converged
        ),
    )
}

fn data_dir() -> PathBuf {
    std::env::var_os("COREBALL_DATA")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap().join("data"))
}

fn load_pair(name: &str) -> Result<(coreball::core::Dataset, coreball::core::Dataset), String> {
    let dir = data_dir();
    let train = dir.join(name);
    let test = dir.join(format!("{name}.t"));
    if !train.exists() || !test.exists() {
        return Err(format!("dataset files {name} and {name}.t not found in {}", dir.display()));
    }
    let train = read_libsvm(&train).map_err(|e| e.to_string())?;
    let test = read_libsvm(&test).map_err(|e| e.to_string())?;
    Ok((train, test))
}

fn dataset_bench(name: &str, kernel: KernelChoice, solvers: Vec<Algorithm>) -> Result<BenchReport, String> {
    let (train, test) = load_pair(name)?;
    let config = SolverConfig { epsilon: EPSILON, ..SolverConfig::default() };
    let kernel = kernel.resolve(&train, config.seed).map_err(|e| e.to_string())?;
    let options = BenchOptions {
        kernel,
        c: CChoice::Select { grid: default_c_grid(), validation_fraction: 0.3 },
        config,
        solvers,
        trace_dir: None,
        parallel: false,
    };
    run_bench(name, &train, &test, &options).map_err(|e| e.to_string())
}

fn within(report: &BenchReport, targets: &[(Algorithm, f64)], band: f64) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(solver, target) in targets {
        match report.row(solver) {
            Some(r) => {
                let hit = (r.accuracy - target).abs() <= band;
                ok &= hit;
                parts.push(format!("{} {:.2}% (C={}, target {target}±{band})", solver.as_str(), r.accuracy, r.c));
            }
            None => {
                ok = false;
                parts.push(format!("{} missing", solver.as_str()));
            }
        }
    }
    (ok, parts.join(", "))
}

fn criterion_5() -> Outcome {
    let rbf = KernelChoice::Rbf { sigma2: Param::Auto };
    let all = vec![Algorithm::Bc, Algorithm::Fw, Algorithm::Mfw];
    let a1a = match dataset_bench("a1a", rbf, all.clone()) {
        Ok(r) => within(&r, &[(Algorithm::Fw, 83.52), (Algorithm::Mfw, 83.52), (Algorithm::Bc, 83.52)], 1.5),
        Err(e) => (false, e),
    };
    let w1a = match dataset_bench("w1a", rbf, all) {
        Ok(r) => within(&r, &[(Algorithm::Bc, 97.80), (Algorithm::Fw, 97.31), (Algorithm::Mfw, 97.65)], 1.0),
        Err(e) => (false, e),
    };
    outcome(a1a.0 && w1a.0, format!("a1a: {}; w1a: {}", a1a.1, w1a.1))
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["a5a", "a6a"] {
        let result = load_pair(name).and_then(|(train, test)| {
            let config = SolverConfig { epsilon: EPSILON, ..SolverConfig::default() };
            let kernel = KernelChoice::Rbf { sigma2: Param::Auto }.resolve(&train, 0).map_err(|e| e.to_string())?;
            let (c, _) = select_c(&train, kernel, Algorithm::Mfw, &config, &default_c_grid(), 0.3).map_err(|e| e.to_string())?;
            let options = BenchOptions {
                kernel,
                c: CChoice::Fixed(c),
                config,
                solvers: vec![Algorithm::Bc, Algorithm::Mfw],
                trace_dir: None,
                parallel: false,
            };
            run_bench(name, &train, &test, &options).map_err(|e| e.to_string())
        });
        match result {
            Ok(report) => {
                let bc = report.row(Algorithm::Bc).map(|r| r.time_s).unwrap_or(f64::NAN);
                let mfw = report.row(Algorithm::Mfw).map(|r| r.time_s).unwrap_or(f64::NAN);
                let speedup = bc / mfw;
                ok &= mfw < bc && speedup >= 2.0;
                parts.push(format!("{name}: t(BC) {bc:.2}s, t(MFW) {mfw:.2}s, speedup {speedup:.2}"));
            }
            Err(e) => {
                ok = false;
                parts.push(e);
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let polyh = KernelChoice::Polyh { gamma: Param::Auto, degree: 2 };
    let refuses = check_solver_kernel(Algorithm::Bc, &KernelSpec::PolyHomogeneous { gamma: 1.0, degree: 2 }).is_err();
    let w1a = match dataset_bench("w1a", polyh, vec![Algorithm::Bc, Algorithm::Fw, Algorithm::Mfw]) {
        Ok(r) => {
            let (ok, text) = within(&r, &[(Algorithm::Fw, 97.22), (Algorithm::Mfw, 97.49)], 1.5);
            (ok && r.row(Algorithm::Bc).is_none(), text)
        }
        Err(e) => (false, e),
    };
    outcome(refuses && w1a.0, format!("BC refuses polyh: {refuses}; w1a: {}", w1a.1))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let report = |n: u32, name: &str, o: &Outcome| {
        println!("criterion {n} [{name}]: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };

    let runs = oracle_runs();
    let c1 = outcome(
        runs.optimal == runs.runs,
        format!(
            "{}/{} runs reach g >= (1 - (2e+e^2)) g*; worst relative gap {:.2e}; {:.1}s",
            runs.optimal, runs.runs, runs.worst_gap, runs.seconds
        ),
    );
    report(1, "oracle optimality", &c1);
    results.push((1, "oracle optimality", c1));
    let c2 = outcome(
        runs.monotone == runs.runs && runs.max_drift <= 1e-8,
        format!(
            "{}/{} runs monotone over {} dense-checked iterates; max incremental drift {:.1e}",
            runs.monotone, runs.runs, runs.steps, runs.max_drift
        ),
    );
    report(2, "monotonicity", &c2);
    results.push((2, "monotonicity", c2));

    let checks: [(u32, &str, fn() -> Outcome); 2] = [(3, "line search", criterion_3), (4, "sampling theorem", criterion_4)];
    for (n, name, f) in checks {
        let o = f();
        report(n, name, &o);
        results.push((n, name, o));
    }
    let data: [(u32, &str, fn() -> Outcome); 3] =
        [(5, "dataset accuracy", criterion_5), (6, "relative speed", criterion_6), (7, "non-normalized kernel", criterion_7)];
    for (n, name, f) in data {
        let o = f();
        report(n, name, &o);
        results.push((n, name, o));
    }

    let (grad_ok, grad_text) = criterion_8_gradient();
    let c8 = outcome(
        grad_ok && runs.certified == runs.converged && runs.converged == runs.runs,
        format!(
            "{grad_text}; certificate holds on {}/{} converged runs (worst gap/threshold {:.3})",
            runs.certified, runs.converged, runs.worst_certificate
        ),
    );
    report(8, "gradient and certificate", &c8);
    results.push((8, "gradient and certificate", c8));

    let c9 = criterion_9();
    report(9, "convergence tail", &c9);
    results.push((9, "convergence tail", c9));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
