//! Benchmark runs comparing the solvers on a train/test pair.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use coreball_core::rng::solver_rng;
use coreball_core::{Algorithm, Dataset, KernelSpec, SolverConfig};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::train::{accuracy, check_solver_kernel, train_ovo, write_trace, TrainOptions};

pub const CSV_HEADER: &str = "dataset,solver,accuracy,time_s,speedup,coreset,iters";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub dataset: String,
    pub solver: Algorithm,
    /// Test accuracy in percent.
    pub accuracy: f64,
    pub time_s: f64,
    /// `t_BC / t_solver`; `None` when BC did not run.
    pub speedup: Option<f64>,
    pub coreset: usize,
    pub iters: u64,
    pub converged: bool,
    pub c: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_HEADER}");
        for r in &self.rows {
            let speedup = r.speedup.map(|s| format!("{s:.4}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{:.4},{:.6},{},{},{}",
                r.dataset,
                r.solver.as_str(),
                r.accuracy,
                r.time_s,
                speedup,
                r.coreset,
                r.iters
            );
        }
        out
    }

    pub fn row(&self, solver: Algorithm) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.solver == solver)
    }
}

/// How C is chosen for each solver.
#[derive(Debug, Clone, PartialEq)]
pub enum CChoice {
    Fixed(f64),
    /// Best validation accuracy over the grid, on a held-out fraction of the
    /// training set.
    Select { grid: Vec<f64>, validation_fraction: f64 },
}

/// `2^0, 2^1, ..., 2^12`.
pub fn default_c_grid() -> Vec<f64> {
    (0..=12).map(|e| f64::from(1u32 << e)).collect()
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub kernel: KernelSpec,
    pub c: CChoice,
    pub config: SolverConfig,
    pub solvers: Vec<Algorithm>,
    pub trace_dir: Option<PathBuf>,
    /// Train class pairs concurrently. Off by default so times are comparable.
    pub parallel: bool,
}

/// Splits `dataset` into (fit, validation) with `fraction` of the rows held out.
pub fn validation_split(dataset: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Usage("validation fraction must lie in (0, 1)".into()));
    }
    if dataset.len() < 2 {
        return Err(Error::Usage("dataset too small for a validation split".into()));
    }
    let mut rows: Vec<usize> = (0..dataset.len()).collect();
    rows.shuffle(&mut solver_rng(seed));
    let held = ((dataset.len() as f64 * fraction).round() as usize).clamp(1, dataset.len() - 1);
    let (val, fit) = rows.split_at(held);
    Ok((dataset.subset(fit)?, dataset.subset(val)?))
}

/// Picks the grid value with the best validation accuracy; ties go to the
/// smaller C. Returns the choice and every `(C, accuracy)` tried.
pub fn select_c(
    dataset: &Dataset,
    kernel: KernelSpec,
    algorithm: Algorithm,
    config: &SolverConfig,
    grid: &[f64],
    validation_fraction: f64,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let (fit, val) = validation_split(dataset, validation_fraction, config.seed)?;
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut scores = Vec::with_capacity(grid.len());
    for &c in &grid {
        let options = TrainOptions { config: config.clone(), ..TrainOptions::new(kernel, c, algorithm) };
        let trained = train_ovo(&fit, &options)?;
        scores.push((c, accuracy(&trained.model, &val)));
    }
    let best = scores
        .iter()
        .fold(None::<(f64, f64)>, |best, &(c, a)| match best {
            Some((_, ba)) if ba >= a => best,
            _ => Some((c, a)),
        })
        .ok_or_else(|| Error::Usage("empty C grid".into()))?;
    Ok((best.0, scores))
}

/// Trains every requested solver with identical settings and scores it on
/// `test`. BC is skipped with a warning on non-normalized kernels.
pub fn run_bench(name: &str, train: &Dataset, test: &Dataset, options: &BenchOptions) -> Result<BenchReport> {
    let mut rows = Vec::new();
    for &solver in &options.solvers {
        if let Err(e) = check_solver_kernel(solver, &options.kernel) {
            log::warn!("skipping {}: {e}", solver.as_str());
            continue;
        }
        let c = match &options.c {
            CChoice::Fixed(c) => *c,
            CChoice::Select { grid, validation_fraction } => {
                let (c, scores) =
                    select_c(train, options.kernel, solver, &options.config, grid, *validation_fraction)?;
                log::info!("{name} {}: selected C = {c} from {scores:?}", solver.as_str());
                c
            }
        };
        let train_options = TrainOptions {
            config: options.config.clone(),
            trace: options.trace_dir.is_some(),
            parallel: options.parallel,
            ..TrainOptions::new(options.kernel, c, solver)
        };
        let trained = train_ovo(train, &train_options)?;
        if let Some(dir) = &options.trace_dir {
            let path = trace_path(dir, name, solver);
            write_trace(BufWriter::new(File::create(&path)?), &trained.machines)?;
        }
        if !trained.converged() {
            log::warn!("{name} {}: stopped before convergence", solver.as_str());
        }
        rows.push(BenchRow {
            dataset: name.to_string(),
            solver,
            accuracy: accuracy(&trained.model, test),
            time_s: trained.wall_time_seconds,
            speedup: None,
            coreset: trained.coreset_size(),
            iters: trained.iterations(),
            converged: trained.converged(),
            c,
        });
    }
    if let Some(t_bc) = rows.iter().find(|r| r.solver == Algorithm::Bc).map(|r| r.time_s) {
        for r in &mut rows {
            r.speedup = Some(if r.solver == Algorithm::Bc { 1.0 } else { t_bc / r.time_s });
        }
    }
    Ok(BenchReport { rows })
}

pub fn trace_path(dir: &Path, name: &str, solver: Algorithm) -> PathBuf {
    dir.join(format!("{name}_{}.csv", solver.as_str()))
}
