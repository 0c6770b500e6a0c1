//! One-versus-one training on a parsed dataset.

use std::io::Write;
use std::time::Instant;

use coreball_core::{
    avg_sq_distance, build_binary, predict_ovo, split_ovo, train_observed, Algorithm, ClassId, Dataset,
    IterationRecord, KernelSpec, OvoModel, SolverConfig, TildeKernel, TrainStats,
};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Pairs drawn by the Monte-Carlo distance estimate on large datasets.
pub const AUTO_PAIRS: usize = 100_000;

/// A kernel parameter given explicitly or derived from the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Value(f64),
    /// Mean squared distance between training patterns (`sigma2`) or its
    /// inverse (`gamma`).
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Rbf { sigma2: Param },
    Linear,
    Poly { degree: u32 },
    Polyh { gamma: Param, degree: u32 },
}

impl KernelChoice {
    pub fn name(&self) -> &'static str {
        match self {
            KernelChoice::Rbf { .. } => "rbf",
            KernelChoice::Linear => "linear",
            KernelChoice::Poly { .. } => "poly",
            KernelChoice::Polyh { .. } => "polyh",
        }
    }

    pub fn is_normalized(&self) -> bool {
        matches!(self, KernelChoice::Rbf { .. })
    }

    /// Fixes `auto` parameters from `dataset`.
    pub fn resolve(&self, dataset: &Dataset, seed: u64) -> Result<KernelSpec> {
        let mean = || avg_sq_distance(dataset, AUTO_PAIRS, seed);
        let spec = match *self {
            KernelChoice::Rbf { sigma2: Param::Value(sigma2) } => KernelSpec::Rbf { sigma2 },
            KernelChoice::Rbf { sigma2: Param::Auto } => KernelSpec::Rbf { sigma2: mean()? },
            KernelChoice::Linear => KernelSpec::Linear,
            KernelChoice::Poly { degree } => KernelSpec::PolyInhomogeneous { degree },
            KernelChoice::Polyh { gamma: Param::Value(gamma), degree } => KernelSpec::PolyHomogeneous { gamma, degree },
            KernelChoice::Polyh { gamma: Param::Auto, degree } => {
                KernelSpec::PolyHomogeneous { gamma: 1.0 / mean()?, degree }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub kernel: KernelSpec,
    pub c: f64,
    pub algorithm: Algorithm,
    /// `config.seed` is the base seed; pair `p` uses `seed + p`.
    pub config: SolverConfig,
    /// Keep every iteration record.
    pub trace: bool,
    /// Train the class pairs on the rayon pool.
    pub parallel: bool,
}

impl TrainOptions {
    pub fn new(kernel: KernelSpec, c: f64, algorithm: Algorithm) -> Self {
        Self { kernel, c, algorithm, config: SolverConfig::default(), trace: false, parallel: true }
    }
}

#[derive(Debug, Clone)]
pub struct MachineReport {
    pub positive_class: ClassId,
    pub negative_class: ClassId,
    pub rows: usize,
    pub stats: TrainStats,
    pub trace: Vec<IterationRecord>,
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: OvoModel,
    pub machines: Vec<MachineReport>,
    /// Elapsed time of the solver phase, parsing excluded.
    pub wall_time_seconds: f64,
}

impl Trained {
    pub fn converged(&self) -> bool {
        self.machines.iter().all(|m| m.stats.converged)
    }

    pub fn iterations(&self) -> u64 {
        self.machines.iter().map(|m| m.stats.iterations).sum()
    }

    /// Total core set size over all machines.
    pub fn coreset_size(&self) -> usize {
        self.machines.iter().map(|m| m.stats.coreset_size).sum()
    }
}

/// Rejects solver/kernel combinations the MEB reduction does not cover.
pub fn check_solver_kernel(algorithm: Algorithm, kernel: &KernelSpec) -> Result<()> {
    if algorithm == Algorithm::Bc && !kernel.is_normalized() {
        let kernel = match kernel {
            KernelSpec::Linear => "the linear kernel",
            KernelSpec::PolyInhomogeneous { .. } => "the polynomial kernel",
            _ => "the homogeneous polynomial kernel",
        };
        return Err(Error::NeedsNormalizedKernel { kernel });
    }
    Ok(())
}

/// Trains one machine per class pair and assembles the vote model.
pub fn train_ovo(dataset: &Dataset, options: &TrainOptions) -> Result<Trained> {
    check_solver_kernel(options.algorithm, &options.kernel)?;
    options.kernel.validate()?;
    options.config.validate()?;
    if !(options.c > 0.0 && options.c.is_finite()) {
        return Err(Error::Usage("C must be a positive number".into()));
    }
    let subs = split_ovo(dataset)?;
    let start = Instant::now();
    let run = |(p, sub): (usize, &coreball_core::BinarySubproblem)| -> Result<_> {
        let tk = TildeKernel::for_subproblem(options.kernel, dataset, sub, options.c)?;
        let config = SolverConfig { seed: options.config.seed.wrapping_add(p as u64), ..options.config.clone() };
        let mut trace = Vec::new();
        let t0 = Instant::now();
        let solution = if options.trace {
            train_observed(&tk, options.algorithm, &config, &mut trace)?
        } else {
            train_observed(&tk, options.algorithm, &config, ())?
        };
        let mut stats = solution.stats;
        stats.wall_time_seconds = t0.elapsed().as_secs_f64();
        if stats.init_fallback {
            log::warn!("pair ({}, {}): random MEB init fell back to two points", sub.positive_class, sub.negative_class);
        }
        let machine = build_binary(&tk, &solution.state, sub)?;
        let report = MachineReport {
            positive_class: sub.positive_class,
            negative_class: sub.negative_class,
            rows: sub.len(),
            stats,
            trace,
        };
        Ok((machine, report))
    };
    let results: Vec<_> = if options.parallel {
        subs.par_iter().enumerate().map(run).collect::<Result<_>>()?
    } else {
        subs.iter().enumerate().map(run).collect::<Result<_>>()?
    };
    let wall_time_seconds = start.elapsed().as_secs_f64();
    let (machines, reports): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let model = OvoModel::new(dataset.classes().to_vec(), machines)?;
    Ok(Trained { model, machines: reports, wall_time_seconds })
}

pub fn predict_all(model: &OvoModel, dataset: &Dataset) -> Vec<ClassId> {
    dataset.samples().par_iter().map(|s| predict_ovo(model, &s.features)).collect()
}

/// Percentage of rows whose prediction equals the label.
pub fn accuracy(model: &OvoModel, dataset: &Dataset) -> f64 {
    let predicted = predict_all(model, dataset);
    let correct = predicted.iter().zip(dataset.samples()).filter(|(p, s)| **p == s.label).count();
    100.0 * correct as f64 / dataset.len() as f64
}

pub const TRACE_HEADER: &str = "positive,negative,iteration,step,index,lambda,delta_plus,delta_minus,r2,coreset";

/// Writes the per-iteration trace of every machine as CSV.
pub fn write_trace<W: Write>(mut out: W, machines: &[MachineReport]) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for m in machines {
        for r in &m.trace {
            writeln!(
                out,
                "{},{},{},{},{},{:?},{:?},{},{:?},{}",
                m.positive_class,
                m.negative_class,
                r.iteration,
                r.step.as_str(),
                r.index,
                r.lambda,
                r.delta_plus,
                if r.delta_minus.is_nan() { String::new() } else { format!("{:?}", r.delta_minus) },
                r.r2,
                r.coreset_size
            )?;
        }
    }
    Ok(())
}
