//! Frank-Wolfe, modified Frank-Wolfe and core vector machine solvers for the
//! MEB form of the L2-SVM dual.
//!
//! Notation used throughout: `R = a' K~ a` (the squared norm of the center
//! `c = sum a_i z_i`), `r2 = D2 - R = g(a)`, and `(K~a)_i = z_i' c`.
//!
//! Point selection always works on the gradient of `g`, `-2 (K~a)_i`. For
//! each candidate we report a *score* `D2 + R - 2 (K~a)_i`. On a normalized
//! kernel the score is the squared distance `||z_i - c||^2`; on other kernels
//! it is a shifted gradient component, and
//! `delta_plus = score / r2 - 1 = (grad_i - a'grad) / g(a)`
//! is exactly the relative duality-gap quantity behind the stopping test.
//! [`gamma2`] always returns the true squared distance.

mod engine;
mod ops;

use alloc::vec::Vec;

pub use engine::{train, train_bc, train_fw, train_mfw, train_observed, Algorithm, Solution};
pub use ops::{
    away_apply_step, away_lambda, away_line_search, away_radius_update, candidate, center_product, check_stop,
    furthest_candidate, furthest_exhaustive, fw_apply_step, fw_lambda, fw_line_search, fw_radius_update, gamma2,
    gradient, init_random_meb, init_two_point, nearest_in_coreset, objective, stop_threshold, Candidate,
    InitOutcome,
};

use crate::error::{Error, Result};
use crate::kernel::TildeKernel;

/// How the initial core set is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitPolicy {
    /// A random point and the point furthest from it, each with weight 1/2.
    TwoPoint,
    /// Exact MEB of `p` random points, keeping those with positive weight.
    RandomMeb { p: usize },
}

impl Default for InitPolicy {
    fn default() -> Self {
        InitPolicy::RandomMeb { p: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop when `delta_plus <= (1 + epsilon)^2 - 1`.
    pub epsilon: f64,
    /// Rows drawn per furthest-point search; `>= m` means exhaustive.
    pub sample_size: usize,
    pub max_iterations: u64,
    pub seed: u64,
    pub init: InitPolicy,
    /// Weights at or below this are pruned from the core set.
    pub zero_tolerance: f64,
    pub cache_bytes: usize,
    /// Re-validate termination with an exhaustive scan when sampling.
    pub exact_final_check: bool,
    /// Steps between exact recomputations of `(K~a)` on the core set, `R` and `r2`.
    pub refresh_interval: u64,
    /// Pairwise-step cap of the reduced QP solver.
    pub inner_iter_cap: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            sample_size: 59,
            max_iterations: 10_000_000,
            seed: 0,
            init: InitPolicy::default(),
            zero_tolerance: 1e-12,
            cache_bytes: 64 << 20,
            exact_final_check: true,
            refresh_interval: 100,
            inner_iter_cap: 1_000_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config("epsilon must lie in (0, 1)"));
        }
        if self.sample_size == 0 {
            return Err(Error::Config("sample size must be at least 1"));
        }
        if let InitPolicy::RandomMeb { p } = self.init {
            if p < 2 {
                return Err(Error::Config("random MEB initialization needs p >= 2"));
            }
        }
        if !(self.zero_tolerance >= 0.0) {
            return Err(Error::Config("zero tolerance must be non-negative"));
        }
        if self.refresh_interval == 0 {
            return Err(Error::Config("refresh interval must be at least 1"));
        }
        Ok(())
    }

    /// Tolerance of the reduced QP solves (BC inner loop, random-MEB init).
    pub fn inner_epsilon(&self) -> f64 {
        self.epsilon / 10.0
    }
}

/// Per-run counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainStats {
    pub iterations: u64,
    pub fw_steps: u64,
    pub away_steps: u64,
    /// Away steps that removed a point from the core set.
    pub drop_steps: u64,
    /// Pairwise steps of the reduced QP solver (BC and random-MEB init).
    pub inner_steps: u64,
    pub kernel_evals: u64,
    pub cache_hits: u64,
    /// Exhaustive scans run to certify termination.
    pub exact_scans: u64,
    /// Filled in by callers that can read a clock.
    pub wall_time_seconds: f64,
    /// `g(a) = D2 - a' K~ a` at the returned iterate.
    pub final_objective: f64,
    pub final_r2: f64,
    pub coreset_size: usize,
    pub converged: bool,
    /// Random-MEB initialization failed and two-point init was used instead.
    pub init_fallback: bool,
}

/// Iterate on the unit simplex with its cached quadratic form.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    alpha: Vec<f64>,
    coreset: Vec<usize>,
    quad: f64,
    r2: f64,
    iteration: u64,
}

impl DualState {
    /// Builds a state from explicit `(row, weight)` pairs, computing `R` directly.
    pub fn from_weights(tk: &TildeKernel<'_>, weights: &[(usize, f64)]) -> Result<Self> {
        let m = tk.len();
        let mut alpha = alloc::vec![0.0; m];
        let mut sum = 0.0;
        for &(i, w) in weights {
            if i >= m {
                return Err(Error::IndexOutOfRange { index: i, len: m });
            }
            if !(w >= 0.0) {
                return Err(Error::Config("weights must be non-negative"));
            }
            alpha[i] += w;
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::Config("weights must sum to one"));
        }
        let coreset: Vec<usize> = (0..m).filter(|&i| alpha[i] > 0.0).collect();
        if coreset.is_empty() {
            return Err(Error::EmptyCoreset);
        }
        let mut state = Self { alpha, coreset, quad: 0.0, r2: 0.0, iteration: 0 };
        state.quad = state.dense_quad(tk);
        state.r2 = tk.delta2() - state.quad;
        Ok(state)
    }

    /// State over `m` rows with the given support; `R` and `r2` are left at zero.
    pub(crate) fn from_support(m: usize, weights: &[(usize, f64)], iteration: u64) -> Self {
        let mut alpha = alloc::vec![0.0; m];
        let mut coreset = Vec::with_capacity(weights.len());
        for &(i, w) in weights {
            alpha[i] = w;
            coreset.push(i);
        }
        coreset.sort_unstable();
        Self { alpha, coreset, quad: 0.0, r2: 0.0, iteration }
    }

    /// Number of rows the state is defined over.
    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// Dense weight vector (zero outside the core set).
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.alpha[i]
    }

    /// Sorted support `{i : a_i > 0}`.
    pub fn coreset(&self) -> &[usize] {
        &self.coreset
    }

    /// `R = a' K~ a`.
    pub fn quad(&self) -> f64 {
        self.quad
    }

    /// `r2 = D2 - R`, the objective `g(a)`.
    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn weight_sum(&self) -> f64 {
        self.coreset.iter().map(|&i| self.alpha[i]).sum()
    }

    /// `a' K~ a` evaluated entry by entry over the core set.
    pub fn dense_quad(&self, tk: &TildeKernel<'_>) -> f64 {
        let mut quad = 0.0;
        for &j in &self.coreset {
            let mut row = 0.0;
            for &l in &self.coreset {
                row += self.alpha[l] * tk.entry(j, l);
            }
            quad += self.alpha[j] * row;
        }
        quad
    }

    pub(crate) fn position(&self, i: usize) -> core::result::Result<usize, usize> {
        self.coreset.binary_search(&i)
    }

    /// `a <- (1 - lambda) a + lambda e_i`, pruning weights at or below
    /// `zero_tol` and renormalizing when anything was pruned.
    pub(crate) fn move_toward(&mut self, i: usize, lambda: f64, zero_tol: f64) -> Toward {
        let keep = 1.0 - lambda;
        for &j in &self.coreset {
            self.alpha[j] *= keep;
        }
        self.alpha[i] += lambda;
        let inserted = match self.position(i) {
            Ok(_) => false,
            Err(pos) => {
                self.coreset.insert(pos, i);
                true
            }
        };
        let before = self.coreset.len();
        let alpha = &mut self.alpha;
        self.coreset.retain(|&j| {
            if j != i && alpha[j] <= zero_tol {
                alpha[j] = 0.0;
                false
            } else {
                true
            }
        });
        let pruned = self.coreset.len() != before;
        if pruned {
            self.renormalize();
        }
        Toward { inserted, pruned }
    }

    /// `a <- (1 + lambda) a - lambda e_j`; drops `j` when its weight reaches
    /// `zero_tol` or `lambda` is at its feasibility bound. Returns whether `j`
    /// was dropped.
    pub(crate) fn move_away(&mut self, j: usize, lambda: f64, zero_tol: f64) -> bool {
        let aj = self.alpha[j];
        let bound = aj / (1.0 - aj);
        let grow = 1.0 + lambda;
        for &l in &self.coreset {
            self.alpha[l] *= grow;
        }
        self.alpha[j] -= lambda;
        if lambda >= bound || self.alpha[j] <= zero_tol {
            self.alpha[j] = 0.0;
            if let Ok(pos) = self.position(j) {
                self.coreset.remove(pos);
            }
            true
        } else {
            false
        }
    }

    pub(crate) fn renormalize(&mut self) {
        let sum = self.weight_sum();
        for &j in &self.coreset {
            self.alpha[j] /= sum;
        }
    }

    pub(crate) fn set_radius(&mut self, quad: f64, r2: f64) {
        self.quad = quad;
        self.r2 = r2;
    }
}

/// Membership changes made by [`DualState::move_toward`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Toward {
    pub inserted: bool,
    pub pruned: bool,
}

/// What an iteration did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Init,
    /// Frank-Wolfe step toward the furthest point.
    Toward,
    /// Away step from the nearest core point.
    Away,
    /// Away step at its bound, removing the point.
    Drop,
    /// BC iteration: one point added, reduced QP re-solved.
    Core,
}

impl StepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StepKind::Init => "init",
            StepKind::Toward => "fw",
            StepKind::Away => "away",
            StepKind::Drop => "drop",
            StepKind::Core => "bc",
        }
    }
}

/// One row of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub step: StepKind,
    /// Row moved toward, away from, or added.
    pub index: usize,
    pub lambda: f64,
    pub delta_plus: f64,
    /// `NaN` where no away candidate is computed.
    pub delta_minus: f64,
    pub r2: f64,
    pub coreset_size: usize,
}

/// Receives every iterate. The default implementation ignores them.
pub trait Observer {
    fn on_step(&mut self, record: &IterationRecord, state: &DualState, tk: &TildeKernel<'_>) {
        let _ = (record, state, tk);
    }
}

impl Observer for () {}

impl<T: Observer + ?Sized> Observer for &mut T {
    fn on_step(&mut self, record: &IterationRecord, state: &DualState, tk: &TildeKernel<'_>) {
        (**self).on_step(record, state, tk)
    }
}

/// Collects the trace in memory.
impl Observer for Vec<IterationRecord> {
    fn on_step(&mut self, record: &IterationRecord, _: &DualState, _: &TildeKernel<'_>) {
        self.push(*record);
    }
}
