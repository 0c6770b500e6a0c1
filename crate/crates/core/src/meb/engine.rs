//! Main loops of the FW, MFW and BC solvers.
//!
//! The engine keeps `(K~a)_l` for every row `l` of an active set: the core
//! set for FW and MFW, the cumulative working set for BC. Columns of `k~`
//! restricted to the active set come from an LRU [`KernelCache`]. Candidate
//! rows are always evaluated from fresh columns; the maintained values only
//! drive the nearest-point search and the reduced QP, and are recomputed
//! exactly every `refresh_interval` steps and before termination is accepted.

use alloc::vec::Vec;

use rand::seq::index;

use super::ops::{
    away_lambda_for, fw_lambda_for, init_random_meb, init_two_point, radius_after_away, radius_after_toward,
    Candidate,
};
use super::{check_stop, DualState, InitPolicy, IterationRecord, Observer, SolverConfig, StepKind, TrainStats};
use crate::cache::KernelCache;
use crate::error::{Error, Result};
use crate::kernel::TildeKernel;
use crate::qp::{smo, CachedColumns};
use crate::rng::{solver_rng, SolverRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Plain Frank-Wolfe.
    Fw,
    /// Frank-Wolfe with away steps.
    Mfw,
    /// Badoiu-Clarkson core set iterations (the core vector machine).
    Bc,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Fw => "fw",
            Algorithm::Mfw => "mfw",
            Algorithm::Bc => "bc",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub state: DualState,
    pub stats: TrainStats,
}

pub fn train_fw(tk: &TildeKernel<'_>, config: &SolverConfig) -> Result<Solution> {
    train(tk, Algorithm::Fw, config)
}

pub fn train_mfw(tk: &TildeKernel<'_>, config: &SolverConfig) -> Result<Solution> {
    train(tk, Algorithm::Mfw, config)
}

pub fn train_bc(tk: &TildeKernel<'_>, config: &SolverConfig) -> Result<Solution> {
    train(tk, Algorithm::Bc, config)
}

pub fn train(tk: &TildeKernel<'_>, algorithm: Algorithm, config: &SolverConfig) -> Result<Solution> {
    train_observed(tk, algorithm, config, ())
}

/// Runs `algorithm` and reports every iterate to `observer`.
///
/// Hitting `max_iterations` or the inner solver cap is not an error: the
/// last iterate is returned with `stats.converged == false`.
pub fn train_observed<O: Observer>(
    tk: &TildeKernel<'_>,
    algorithm: Algorithm,
    config: &SolverConfig,
    observer: O,
) -> Result<Solution> {
    config.validate()?;
    let m = tk.len();
    if m < 2 {
        return Err(Error::TooFewRows { needed: 2, got: m });
    }
    let mut rng = solver_rng(config.seed);
    let mut stats = TrainStats::default();
    let init_evals;
    let state = match config.init {
        InitPolicy::TwoPoint => {
            init_evals = m as u64;
            init_two_point(tk, &mut rng)?
        }
        InitPolicy::RandomMeb { p } => {
            let out = init_random_meb(tk, config, p, &mut rng)?;
            stats.inner_steps = out.inner_steps;
            stats.init_fallback = out.fallback;
            init_evals = out.kernel_evals;
            out.state
        }
    };

    let mut engine = Engine {
        tk,
        config,
        algorithm,
        cache: KernelCache::new(config.cache_bytes),
        rng,
        active: state.coreset().to_vec(),
        state,
        g: Vec::new(),
        col: Vec::new(),
        since_refresh: 0,
        stats,
        observer,
    };
    engine.refresh();
    engine.emit(StepKind::Init, usize::MAX, 0.0, f64::NAN, f64::NAN);
    engine.run()?;

    engine.refresh();
    let mut stats = engine.stats;
    let cache = engine.cache.stats();
    stats.kernel_evals = init_evals + cache.kernel_evals;
    stats.cache_hits = cache.hits;
    stats.final_r2 = engine.state.r2();
    stats.final_objective = engine.state.r2();
    stats.coreset_size = engine.state.coreset().len();
    Ok(Solution { state: engine.state, stats })
}

struct Engine<'t, 'a, O> {
    tk: &'t TildeKernel<'a>,
    config: &'t SolverConfig,
    algorithm: Algorithm,
    cache: KernelCache,
    rng: SolverRng,
    state: DualState,
    /// Sorted rows whose `(K~a)` is maintained.
    active: Vec<usize>,
    /// `(K~a)_l` aligned with `active`.
    g: Vec<f64>,
    col: Vec<f64>,
    since_refresh: u64,
    stats: TrainStats,
    observer: O,
}

impl<O: Observer> Engine<'_, '_, O> {
    fn run(&mut self) -> Result<()> {
        let m = self.tk.len();
        let sampled = self.config.sample_size < m;
        let epsilon = self.config.epsilon;
        loop {
            if self.stats.iterations >= self.config.max_iterations {
                self.stats.converged = false;
                return Ok(());
            }
            let mut cand = self.furthest(sampled);
            let mut delta_plus = cand.delta_plus(self.state.r2());
            if check_stop(delta_plus, epsilon) {
                self.refresh();
                cand = if sampled && self.config.exact_final_check {
                    self.stats.exact_scans += 1;
                    self.furthest(false)
                } else {
                    self.candidate(cand.index)
                };
                delta_plus = cand.delta_plus(self.state.r2());
                if check_stop(delta_plus, epsilon) {
                    self.stats.converged = true;
                    return Ok(());
                }
            }

            match self.algorithm {
                Algorithm::Fw => self.toward(&cand, delta_plus, f64::NAN)?,
                Algorithm::Mfw => {
                    let near = self.nearest();
                    let delta_minus = near.delta_minus(self.state.r2());
                    if self.state.coreset().len() > 1 && delta_minus > delta_plus {
                        self.away(&near, delta_plus, delta_minus)?;
                    } else {
                        self.toward(&cand, delta_plus, delta_minus)?;
                    }
                }
                Algorithm::Bc => {
                    if !self.core_step(&cand, delta_plus)? {
                        self.stats.converged = false;
                        return Ok(());
                    }
                }
            }
            self.stats.iterations += 1;
            self.maintain();
        }
    }

    /// `(K~a)_i` from a fresh column over the active set.
    fn kalpha(&mut self, i: usize) -> f64 {
        self.cache.get_column(self.tk, i, &self.active, &mut self.col);
        let alpha = self.state.alpha();
        self.active.iter().zip(&self.col).map(|(&j, &k)| alpha[j] * k).sum()
    }

    fn candidate(&mut self, i: usize) -> Candidate {
        let kalpha = self.kalpha(i);
        Candidate::new(self.tk, self.state.quad(), i, kalpha)
    }

    fn furthest(&mut self, sampled: bool) -> Candidate {
        let m = self.tk.len();
        let mut best: Option<Candidate> = None;
        if sampled {
            for i in index::sample(&mut self.rng, m, self.config.sample_size).iter() {
                let c = self.candidate(i);
                if best.is_none_or(|b| c.beats_as_furthest(&b)) {
                    best = Some(c);
                }
            }
        } else {
            for i in 0..m {
                let c = self.candidate(i);
                if best.is_none_or(|b| c.beats_as_furthest(&b)) {
                    best = Some(c);
                }
            }
        }
        best.expect("at least one row")
    }

    /// Nearest core point from the maintained `(K~a)` values.
    fn nearest(&self) -> Candidate {
        let quad = self.state.quad();
        let mut best: Option<Candidate> = None;
        for (&j, &g) in self.active.iter().zip(&self.g) {
            if self.state.weight(j) > 0.0 {
                let c = Candidate::new(self.tk, quad, j, g);
                if best.is_none_or(|b| c.beats_as_nearest(&b)) {
                    best = Some(c);
                }
            }
        }
        best.expect("core set is never empty")
    }

    fn toward(&mut self, cand: &Candidate, delta_plus: f64, delta_minus: f64) -> Result<()> {
        let tk = self.tk;
        let lambda = fw_lambda_for(tk, self.state.quad(), self.state.r2(), cand)?;
        self.stats.fw_steps += 1;
        if lambda > 0.0 {
            let (quad, r2) = radius_after_toward(tk, self.state.quad(), self.state.r2(), cand, lambda);
            let moved = self.state.move_toward(cand.index, lambda, self.config.zero_tolerance);
            self.state.set_radius(quad, r2);
            if moved.pruned {
                self.active = self.state.coreset().to_vec();
                self.refresh();
            } else {
                if moved.inserted {
                    let pos = self.active.binary_search(&cand.index).unwrap_err();
                    self.active.insert(pos, cand.index);
                    self.g.insert(pos, cand.kalpha);
                }
                self.cache.get_column(tk, cand.index, &self.active, &mut self.col);
                let keep = 1.0 - lambda;
                for (g, &k) in self.g.iter_mut().zip(&self.col) {
                    *g = keep * *g + lambda * k;
                }
            }
            self.state.iteration += 1;
        }
        self.emit(StepKind::Toward, cand.index, lambda, delta_plus, delta_minus);
        Ok(())
    }

    fn away(&mut self, near: &Candidate, delta_plus: f64, delta_minus: f64) -> Result<()> {
        let tk = self.tk;
        let j = near.index;
        let aj = self.state.weight(j);
        if aj >= 1.0 {
            return Err(Error::AwayStepForbidden { index: j });
        }
        let lambda = away_lambda_for(tk, self.state.quad(), self.state.r2(), near, aj);
        self.stats.away_steps += 1;
        let mut kind = StepKind::Away;
        if lambda > 0.0 {
            self.cache.get_column(tk, j, &self.active, &mut self.col);
            let (quad, r2) = radius_after_away(tk, self.state.quad(), self.state.r2(), near, lambda);
            let dropped = self.state.move_away(j, lambda, self.config.zero_tolerance);
            self.state.set_radius(quad, r2);
            let grow = 1.0 + lambda;
            for (g, &k) in self.g.iter_mut().zip(&self.col) {
                *g = grow * *g - lambda * k;
            }
            if dropped {
                let pos = self.active.binary_search(&j).expect("away row is active");
                self.active.remove(pos);
                self.g.remove(pos);
                self.stats.drop_steps += 1;
                kind = StepKind::Drop;
            }
            self.state.iteration += 1;
        }
        self.emit(kind, j, lambda, delta_plus, delta_minus);
        Ok(())
    }

    /// Adds `cand` to the working set and re-solves the reduced QP over it.
    /// Returns `false` when the inner solver hit its cap.
    fn core_step(&mut self, cand: &Candidate, delta_plus: f64) -> Result<bool> {
        let i = cand.index;
        if let Err(pos) = self.active.binary_search(&i) {
            self.active.insert(pos, i);
            self.g.insert(pos, cand.kalpha);
        }
        let mut alpha: Vec<f64> = self.active.iter().map(|&j| self.state.weight(j)).collect();
        let mut src = CachedColumns::new(self.tk, &mut self.cache);
        let capped = match smo(
            &mut src,
            &self.active,
            &mut alpha,
            &mut self.g,
            self.config.inner_epsilon(),
            self.config.inner_iter_cap,
        ) {
            Ok(steps) => {
                self.stats.inner_steps += steps;
                false
            }
            Err(Error::InnerSolverCap { iterations }) => {
                self.stats.inner_steps += iterations;
                true
            }
            Err(e) => return Err(e),
        };

        let zero_tol = self.config.zero_tolerance;
        let mut pruned = false;
        let weights: Vec<(usize, f64)> = self
            .active
            .iter()
            .zip(&alpha)
            .filter_map(|(&j, &a)| {
                if a > zero_tol {
                    Some((j, a))
                } else {
                    pruned |= a > 0.0;
                    None
                }
            })
            .collect();
        let quad: f64 = alpha.iter().zip(&self.g).map(|(a, g)| a * g).sum();
        self.state = DualState::from_support(self.tk.len(), &weights, self.state.iteration + 1);
        self.state.set_radius(quad, self.tk.delta2() - quad);
        if pruned {
            self.state.renormalize();
            self.refresh();
        }
        self.emit(StepKind::Core, i, f64::NAN, delta_plus, f64::NAN);
        Ok(!capped)
    }

    /// Periodic exact refresh and simplex drift control.
    fn maintain(&mut self) {
        self.since_refresh += 1;
        let drift = (self.state.weight_sum() - 1.0).abs();
        if drift > 1e-10 {
            self.state.renormalize();
            self.refresh();
        } else if self.since_refresh >= self.config.refresh_interval {
            self.refresh();
        }
        #[cfg(debug_assertions)]
        self.debug_check();
    }

    /// Recomputes `(K~a)` over the active set, `R` and `r2` from columns.
    fn refresh(&mut self) {
        let tk = self.tk;
        let mut g = Vec::with_capacity(self.active.len());
        for p in 0..self.active.len() {
            let i = self.active[p];
            let v = self.kalpha(i);
            g.push(v);
        }
        let alpha = self.state.alpha();
        let quad: f64 = self.active.iter().zip(&g).map(|(&j, &v)| alpha[j] * v).sum();
        debug_assert!(
            self.g.is_empty() || self.stats.iterations == 0 || close(self.state.quad(), quad),
            "incremental R drifted: {} vs exact {quad}",
            self.state.quad()
        );
        self.g = g;
        self.state.set_radius(quad, tk.delta2() - quad);
        self.since_refresh = 0;
    }

    /// Per-step dense check on small core sets; larger ones are checked at
    /// every refresh.
    #[cfg(debug_assertions)]
    fn debug_check(&self) {
        if self.active.len() > 16 {
            return;
        }
        let dense = self.state.dense_quad(self.tk);
        let quad = self.state.quad();
        debug_assert!(close(quad, dense), "incremental R drifted: {quad} vs dense {dense}");
    }

    fn emit(&mut self, step: StepKind, index: usize, lambda: f64, delta_plus: f64, delta_minus: f64) {
        let record = IterationRecord {
            iteration: self.state.iteration(),
            step,
            index,
            lambda,
            delta_plus,
            delta_minus,
            r2: self.state.r2(),
            coreset_size: self.state.coreset().len(),
        };
        self.observer.on_step(&record, &self.state, self.tk);
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-8 * b.abs().max(1.0)
}
