//! Single-step operations on a [`DualState`], evaluating `k~` directly.
//!
//! The training engine applies the same formulas with cached columns and
//! incrementally maintained `(K~a)` values.

use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng;

use super::{DualState, SolverConfig};
use crate::error::{Error, Result};
use crate::kernel::TildeKernel;
use crate::qp::{smo, DirectColumns};
use crate::rng::SolverRng;

/// A row evaluated against the current center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub index: usize,
    /// `(K~a)_i = z_i' c`.
    pub kalpha: f64,
    /// `D2 + R - 2 (K~a)_i`; drives selection, step choice and stopping.
    pub score: f64,
    /// `||z_i - c||^2`.
    pub gamma2: f64,
}

impl Candidate {
    pub(crate) fn new(tk: &TildeKernel<'_>, quad: f64, index: usize, kalpha: f64) -> Self {
        let score = tk.delta2() + quad - 2.0 * kalpha;
        let gamma2 = if tk.is_normalized() { score } else { tk.diag()[index] + quad - 2.0 * kalpha };
        Self { index, kalpha, score, gamma2 }
    }

    /// Relative outward violation `score / r2 - 1`.
    pub fn delta_plus(&self, r2: f64) -> f64 {
        self.score / r2 - 1.0
    }

    /// Relative inward slack `1 - score / r2`.
    pub fn delta_minus(&self, r2: f64) -> f64 {
        1.0 - self.score / r2
    }

    /// Ordering for the furthest search: larger score, then smaller index.
    #[inline]
    pub(crate) fn beats_as_furthest(&self, other: &Candidate) -> bool {
        self.score > other.score || (self.score == other.score && self.index < other.index)
    }

    /// Ordering for the nearest search: smaller score, then smaller index.
    #[inline]
    pub(crate) fn beats_as_nearest(&self, other: &Candidate) -> bool {
        self.score < other.score || (self.score == other.score && self.index < other.index)
    }
}

/// `(K~a)_i = sum_{j in core set} a_j k~(j, i)`, summed in row order.
pub fn center_product(tk: &TildeKernel<'_>, state: &DualState, i: usize) -> f64 {
    state.coreset().iter().map(|&j| state.weight(j) * tk.entry(i, j)).sum()
}

pub fn candidate(tk: &TildeKernel<'_>, state: &DualState, i: usize) -> Candidate {
    Candidate::new(tk, state.quad(), i, center_product(tk, state, i))
}

/// Squared distance `||z_i - c||^2 = k~(i,i) + R - 2 (K~a)_i`.
pub fn gamma2(tk: &TildeKernel<'_>, state: &DualState, i: usize) -> f64 {
    candidate(tk, state, i).gamma2
}

/// Exhaustive furthest point (largest gradient component); ties go to the smallest row.
pub fn furthest_exhaustive(tk: &TildeKernel<'_>, state: &DualState) -> Candidate {
    let mut best = candidate(tk, state, 0);
    for i in 1..tk.len() {
        let c = candidate(tk, state, i);
        if c.beats_as_furthest(&best) {
            best = c;
        }
    }
    best
}

/// Furthest point among `config.sample_size` distinct uniformly drawn rows
/// (all rows when the sample would cover them).
pub fn furthest_candidate(
    tk: &TildeKernel<'_>,
    state: &DualState,
    config: &SolverConfig,
    rng: &mut SolverRng,
) -> Candidate {
    let m = tk.len();
    if config.sample_size >= m {
        return furthest_exhaustive(tk, state);
    }
    let mut best: Option<Candidate> = None;
    for i in index::sample(rng, m, config.sample_size).iter() {
        let c = candidate(tk, state, i);
        if best.is_none_or(|b| c.beats_as_furthest(&b)) {
            best = Some(c);
        }
    }
    best.unwrap_or_else(|| furthest_exhaustive(tk, state))
}

/// Nearest core point (smallest gradient component over the core set).
pub fn nearest_in_coreset(tk: &TildeKernel<'_>, state: &DualState) -> Result<Candidate> {
    let mut best: Option<Candidate> = None;
    for &j in state.coreset() {
        let c = candidate(tk, state, j);
        if best.is_none_or(|b| c.beats_as_nearest(&b)) {
            best = Some(c);
        }
    }
    best.ok_or(Error::EmptyCoreset)
}

/// Stopping threshold `(1 + epsilon)^2 - 1`.
pub fn stop_threshold(epsilon: f64) -> f64 {
    epsilon * (2.0 + epsilon)
}

pub fn check_stop(delta_plus: f64, epsilon: f64) -> bool {
    delta_plus <= stop_threshold(epsilon)
}

/// Closed-form FW step `1/2 (1 - r2 / gamma2)` for normalized kernels, clipped to `[0, 1]`.
pub fn fw_lambda(r2: f64, gamma2: f64) -> f64 {
    (0.5 * (1.0 - r2 / gamma2)).clamp(0.0, 1.0)
}

/// Closed-form away step `min{d / (2 (1 - d)), a_j / (1 - a_j)}` for normalized kernels.
pub fn away_lambda(delta_minus: f64, alpha_j: f64) -> f64 {
    let bound = alpha_j / (1.0 - alpha_j);
    if delta_minus <= 0.0 {
        0.0
    } else if delta_minus >= 1.0 {
        bound
    } else {
        (delta_minus / (2.0 * (1.0 - delta_minus))).min(bound)
    }
}

/// Radius after an optimal FW step: `r2 (1 + d^2 / (4 (1 + d)))`.
pub fn fw_radius_update(r2: f64, delta_plus: f64) -> f64 {
    r2 * (1.0 + delta_plus * delta_plus / (4.0 * (1.0 + delta_plus)))
}

/// Radius after an away step of size `lambda` from a point at squared distance `gamma2`:
/// `(1 + lambda) r2 - lambda (1 + lambda) gamma2`.
pub fn away_radius_update(r2: f64, gamma2: f64, lambda: f64) -> f64 {
    (1.0 + lambda) * r2 - lambda * (1.0 + lambda) * gamma2
}

/// Exact maximizer of `g((1 - l) a + l e_i)` over `l in [0, 1]`.
pub fn fw_line_search(tk: &TildeKernel<'_>, state: &DualState, cand: &Candidate) -> Result<f64> {
    fw_lambda_for(tk, state.quad(), state.r2(), cand)
}

pub(crate) fn fw_lambda_for(tk: &TildeKernel<'_>, quad: f64, r2: f64, cand: &Candidate) -> Result<f64> {
    let degenerate = Error::DegenerateDirection { index: cand.index };
    if tk.is_normalized() {
        if !(cand.gamma2 > 0.0) {
            return Err(degenerate);
        }
        Ok(fw_lambda(r2, cand.gamma2))
    } else {
        let denom = quad - 2.0 * cand.kalpha + tk.diag()[cand.index];
        if !(denom > 0.0) {
            return Err(degenerate);
        }
        Ok(((quad - cand.kalpha) / denom).clamp(0.0, 1.0))
    }
}

/// Exact maximizer of `g((1 + l) a - l e_j)` over `l in [0, a_j / (1 - a_j)]`.
pub fn away_line_search(tk: &TildeKernel<'_>, state: &DualState, cand: &Candidate) -> Result<f64> {
    let aj = state.weight(cand.index);
    if aj >= 1.0 {
        return Err(Error::AwayStepForbidden { index: cand.index });
    }
    if !(aj > 0.0) {
        return Err(Error::Config("away step from a row outside the core set"));
    }
    Ok(away_lambda_for(tk, state.quad(), state.r2(), cand, aj))
}

pub(crate) fn away_lambda_for(tk: &TildeKernel<'_>, quad: f64, r2: f64, cand: &Candidate, aj: f64) -> f64 {
    if tk.is_normalized() {
        away_lambda(cand.delta_minus(r2), aj)
    } else {
        let bound = aj / (1.0 - aj);
        let denom = quad - 2.0 * cand.kalpha + tk.diag()[cand.index];
        if !(denom > 0.0) {
            return bound;
        }
        ((cand.kalpha - quad) / denom).clamp(0.0, bound)
    }
}

/// `(R, r2)` after a FW step of size `lambda` toward `cand`.
pub(crate) fn radius_after_toward(tk: &TildeKernel<'_>, quad: f64, r2: f64, cand: &Candidate, lambda: f64) -> (f64, f64) {
    let delta2 = tk.delta2();
    if tk.is_normalized() {
        let r2 = fw_radius_update(r2, cand.delta_plus(r2));
        (delta2 - r2, r2)
    } else {
        let keep = 1.0 - lambda;
        let quad = keep * keep * quad + 2.0 * lambda * keep * cand.kalpha + lambda * lambda * tk.diag()[cand.index];
        (quad, delta2 - quad)
    }
}

/// `(R, r2)` after an away step of size `lambda` from `cand`.
pub(crate) fn radius_after_away(tk: &TildeKernel<'_>, quad: f64, r2: f64, cand: &Candidate, lambda: f64) -> (f64, f64) {
    let delta2 = tk.delta2();
    if tk.is_normalized() {
        let r2 = away_radius_update(r2, cand.gamma2, lambda);
        (delta2 - r2, r2)
    } else {
        let grow = 1.0 + lambda;
        let quad = grow * grow * quad - 2.0 * lambda * grow * cand.kalpha + lambda * lambda * tk.diag()[cand.index];
        (quad, delta2 - quad)
    }
}

/// Applies `a <- (1 - lambda) a + lambda e_i` and updates `R` and `r2`.
///
/// On normalized kernels the radius update assumes `lambda` came from
/// [`fw_line_search`].
pub fn fw_apply_step(
    tk: &TildeKernel<'_>,
    state: &mut DualState,
    cand: &Candidate,
    lambda: f64,
    zero_tolerance: f64,
) {
    if lambda == 0.0 {
        return;
    }
    let (quad, r2) = radius_after_toward(tk, state.quad(), state.r2(), cand, lambda);
    let moved = state.move_toward(cand.index, lambda, zero_tolerance);
    if moved.pruned {
        let quad = state.dense_quad(tk);
        state.set_radius(quad, tk.delta2() - quad);
    } else {
        state.set_radius(quad, r2);
    }
    state.iteration += 1;
}

/// Applies `a <- (1 + lambda) a - lambda e_j`, dropping `j` at the bound.
/// Returns whether `j` left the core set.
pub fn away_apply_step(
    tk: &TildeKernel<'_>,
    state: &mut DualState,
    cand: &Candidate,
    lambda: f64,
    zero_tolerance: f64,
) -> Result<bool> {
    let aj = state.weight(cand.index);
    if aj >= 1.0 {
        return Err(Error::AwayStepForbidden { index: cand.index });
    }
    if lambda == 0.0 {
        return Ok(false);
    }
    let (quad, r2) = radius_after_away(tk, state.quad(), state.r2(), cand, lambda);
    let dropped = state.move_away(cand.index, lambda, zero_tolerance);
    state.set_radius(quad, r2);
    state.iteration += 1;
    Ok(dropped)
}

/// `g(a) = D2 - a' K~ a`, evaluated entry by entry.
pub fn objective(tk: &TildeKernel<'_>, state: &DualState) -> f64 {
    tk.delta2() - state.dense_quad(tk)
}

/// `grad g(a) = -2 K~ a` over every row.
pub fn gradient(tk: &TildeKernel<'_>, state: &DualState) -> Vec<f64> {
    (0..tk.len()).map(|i| -2.0 * center_product(tk, state, i)).collect()
}

/// Random point `a` and its furthest point `b`, each with weight 1/2.
pub fn init_two_point(tk: &TildeKernel<'_>, rng: &mut SolverRng) -> Result<DualState> {
    let m = tk.len();
    if m < 2 {
        return Err(Error::TooFewRows { needed: 2, got: m });
    }
    let a = rng.random_range(0..m);
    let diag = tk.diag();
    let mut b = usize::MAX;
    let mut best = f64::NEG_INFINITY;
    let mut kab = 0.0;
    for i in 0..m {
        let kai = tk.entry(a, i);
        let d = diag[a] + diag[i] - 2.0 * kai;
        if i != a && d > best {
            best = d;
            b = i;
            kab = kai;
        }
    }
    two_point_state(tk, a, b, kab)
}

pub(crate) fn two_point_state(tk: &TildeKernel<'_>, a: usize, b: usize, kab: f64) -> Result<DualState> {
    let m = tk.len();
    let mut alpha = alloc::vec![0.0; m];
    alpha[a] = 0.5;
    alpha[b] = 0.5;
    let diag = tk.diag();
    let quad = (diag[a] + diag[b] + 2.0 * kab) / 4.0;
    let mut coreset = alloc::vec![a, b];
    coreset.sort_unstable();
    Ok(DualState { alpha, coreset, quad, r2: tk.delta2() - quad, iteration: 0 })
}

/// Result of the random-MEB initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct InitOutcome {
    pub state: DualState,
    pub inner_steps: u64,
    pub kernel_evals: u64,
    /// The inner solver failed and two-point initialization was used.
    pub fallback: bool,
}

/// Exact MEB of `p` random rows (all rows when `p >= m`), solved to
/// `epsilon / 10`; rows keeping a weight above the zero tolerance form the
/// initial core set.
pub fn init_random_meb(tk: &TildeKernel<'_>, config: &SolverConfig, p: usize, rng: &mut SolverRng) -> Result<InitOutcome> {
    let m = tk.len();
    if m < 2 {
        return Err(Error::TooFewRows { needed: 2, got: m });
    }
    let p = p.clamp(2, m);
    let mut set: Vec<usize> = if p == m { (0..m).collect() } else { index::sample(rng, m, p).into_vec() };
    set.sort_unstable();

    let mut src = DirectColumns::new(tk);
    let mut alpha = alloc::vec![1.0 / p as f64; p];
    let mut grad = alloc::vec![0.0; p];
    let mut col = Vec::new();
    for (q, &i) in set.iter().enumerate() {
        crate::qp::ColumnSource::column(&mut src, i, &set, &mut col);
        grad[q] = col.iter().zip(&alpha).map(|(k, a)| k * a).sum();
    }
    match smo(&mut src, &set, &mut alpha, &mut grad, config.inner_epsilon(), config.inner_iter_cap) {
        Ok(inner_steps) => {
            let weights: Vec<(usize, f64)> = set
                .iter()
                .zip(&alpha)
                .filter(|(_, &a)| a > config.zero_tolerance)
                .map(|(&i, &a)| (i, a))
                .collect();
            let total: f64 = weights.iter().map(|w| w.1).sum();
            let mut full = alloc::vec![0.0; m];
            for &(i, a) in &weights {
                full[i] = a / total;
            }
            let coreset: Vec<usize> = weights.iter().map(|w| w.0).collect();
            let mut state = DualState { alpha: full, coreset, quad: 0.0, r2: 0.0, iteration: 0 };
            let quad = state.dense_quad(tk);
            state.set_radius(quad, tk.delta2() - quad);
            let kernel_evals = src.evals + (state.coreset.len() * state.coreset.len()) as u64;
            Ok(InitOutcome { state, inner_steps, kernel_evals, fallback: false })
        }
        Err(Error::InnerSolverCap { iterations }) => {
            let evals = src.evals + m as u64;
            let state = init_two_point(tk, rng)?;
            Ok(InitOutcome { state, inner_steps: iterations, kernel_evals: evals, fallback: true })
        }
        Err(e) => Err(e),
    }
}
