//! Reduced QP over a subset of rows, solved by pairwise (SMO-style) updates.
//!
//! Maximizes `g(a) = D2 - a' K~ a` over the simplex restricted to an index
//! set. Each step moves weight from the row with the smallest gradient among
//! positive weights to the row with the largest gradient, using the exact
//! two-variable optimum, until
//! `max_i grad_i - min_{j: a_j > 0} grad_j <= inner_eps * g(a)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::cache::KernelCache;
use crate::error::{Error, Result};
use crate::kernel::TildeKernel;

/// Provider of `k~` columns restricted to a sorted row set.
pub trait ColumnSource {
    fn kernel(&self) -> &TildeKernel<'_>;
    fn column(&mut self, i: usize, rows: &[usize], out: &mut Vec<f64>);
}

/// Evaluates every entry on demand.
pub struct DirectColumns<'t, 'a> {
    tk: &'t TildeKernel<'a>,
    pub evals: u64,
}

impl<'t, 'a> DirectColumns<'t, 'a> {
    pub fn new(tk: &'t TildeKernel<'a>) -> Self {
        Self { tk, evals: 0 }
    }
}

impl ColumnSource for DirectColumns<'_, '_> {
    fn kernel(&self) -> &TildeKernel<'_> {
        self.tk
    }

    fn column(&mut self, i: usize, rows: &[usize], out: &mut Vec<f64>) {
        out.clear();
        out.extend(rows.iter().map(|&j| self.tk.entry(i, j)));
        self.evals += rows.len() as u64;
    }
}

/// Routes column requests through a [`KernelCache`].
pub struct CachedColumns<'t, 'a, 'c> {
    tk: &'t TildeKernel<'a>,
    cache: &'c mut KernelCache,
}

impl<'t, 'a, 'c> CachedColumns<'t, 'a, 'c> {
    pub fn new(tk: &'t TildeKernel<'a>, cache: &'c mut KernelCache) -> Self {
        Self { tk, cache }
    }
}

impl ColumnSource for CachedColumns<'_, '_, '_> {
    fn kernel(&self) -> &TildeKernel<'_> {
        self.tk
    }

    fn column(&mut self, i: usize, rows: &[usize], out: &mut Vec<f64>) {
        self.cache.get_column(self.tk, i, rows, out);
    }
}

/// Runs SMO in place. `set` must be sorted; `alpha` and `grad` are aligned
/// with it and `grad[p] = sum_q alpha[q] k~(set[p], set[q])` on entry.
/// Returns the number of pairwise steps taken.
pub(crate) fn smo<S: ColumnSource>(
    src: &mut S,
    set: &[usize],
    alpha: &mut [f64],
    grad: &mut [f64],
    inner_eps: f64,
    iter_cap: u64,
) -> Result<u64> {
    debug_assert_eq!(set.len(), alpha.len());
    debug_assert_eq!(set.len(), grad.len());
    let delta2 = src.kernel().delta2();
    let n = set.len();
    if n == 1 {
        alpha[0] = 1.0;
        return Ok(0);
    }
    let mut col_up = Vec::with_capacity(n);
    let mut col_down = Vec::with_capacity(n);
    let mut steps = 0u64;
    loop {
        // up: largest gradient of g, i.e. smallest (K~a)_p; down: largest (K~a)_p with a_p > 0
        let mut up = 0;
        let mut down = usize::MAX;
        let mut quad = 0.0;
        for p in 0..n {
            quad += alpha[p] * grad[p];
            if grad[p] < grad[up] {
                up = p;
            }
            if alpha[p] > 0.0 && (down == usize::MAX || grad[p] > grad[down]) {
                down = p;
            }
        }
        let objective = delta2 - quad;
        let gap = 2.0 * (grad[down] - grad[up]);
        if gap <= inner_eps * objective {
            return Ok(steps);
        }
        if steps >= iter_cap {
            return Err(Error::InnerSolverCap { iterations: steps });
        }
        src.column(set[up], set, &mut col_up);
        src.column(set[down], set, &mut col_down);
        let curvature = col_up[up] + col_down[down] - 2.0 * col_up[down];
        let mut t = (grad[down] - grad[up]) / curvature;
        let clipped = !(t < alpha[down]);
        if clipped {
            t = alpha[down];
        }
        alpha[up] += t;
        alpha[down] = if clipped { 0.0 } else { alpha[down] - t };
        for p in 0..n {
            grad[p] += t * (col_up[p] - col_down[p]);
        }
        steps += 1;
    }
}

/// Solves the reduced QP over `index_set`, warm-started from `warm_alpha`
/// (aligned with `index_set`, feasible on the restricted simplex).
pub fn reduced_qp_solve(
    tk: &TildeKernel<'_>,
    index_set: &[usize],
    warm_alpha: &[f64],
    inner_eps: f64,
    iter_cap: u64,
) -> Result<Vec<f64>> {
    if index_set.is_empty() {
        return Err(Error::EmptyCoreset);
    }
    if index_set.len() != warm_alpha.len() {
        return Err(Error::Config("index set and warm start differ in length"));
    }
    if let Some(&bad) = index_set.iter().find(|&&i| i >= tk.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: tk.len() });
    }
    let sum: f64 = warm_alpha.iter().sum();
    if warm_alpha.iter().any(|&a| !(a >= 0.0)) || (sum - 1.0).abs() > 1e-10 {
        return Err(Error::Config("warm start is not on the simplex"));
    }
    let mut order: Vec<usize> = (0..index_set.len()).collect();
    order.sort_by_key(|&p| index_set[p]);
    let set: Vec<usize> = order.iter().map(|&p| index_set[p]).collect();
    if set.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("index set contains duplicates"));
    }
    let mut alpha: Vec<f64> = order.iter().map(|&p| warm_alpha[p]).collect();

    let mut src = DirectColumns::new(tk);
    let mut grad = vec![0.0; set.len()];
    let mut col = Vec::new();
    for (p, &i) in set.iter().enumerate() {
        src.column(i, &set, &mut col);
        grad[p] = col.iter().zip(&alpha).map(|(k, a)| k * a).sum();
    }
    smo(&mut src, &set, &mut alpha, &mut grad, inner_eps, iter_cap)?;

    let mut out = vec![0.0; index_set.len()];
    for (sorted_pos, &p) in order.iter().enumerate() {
        out[p] = alpha[sorted_pos];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SparseVector;
    use crate::kernel::KernelSpec;

    #[test]
    fn singleton_set_gets_full_weight() {
        let rows = [SparseVector::from_dense(&[1.0]), SparseVector::from_dense(&[2.0])];
        let tk = TildeKernel::new(KernelSpec::Linear, rows.iter().collect(), &[1, -1], 1.0).unwrap();
        assert_eq!(reduced_qp_solve(&tk, &[1], &[1.0], 1e-7, 10).unwrap(), vec![1.0]);
    }

    #[test]
    fn symmetric_pair_splits_evenly() {
        let rows = [SparseVector::from_dense(&[1.0, 0.0]), SparseVector::from_dense(&[0.0, 1.0])];
        let tk = TildeKernel::new(KernelSpec::Rbf { sigma2: 1.0 }, rows.iter().collect(), &[1, -1], 2.0).unwrap();
        let alpha = reduced_qp_solve(&tk, &[0, 1], &[1.0, 0.0], 1e-12, 100).unwrap();
        assert!((alpha[0] - 0.5).abs() < 1e-12);
        assert!((alpha[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_infeasible_warm_start_and_caps() {
        let rows: Vec<SparseVector> = (0..6).map(|i| SparseVector::from_dense(&[i as f64, 1.0])).collect();
        let tk = TildeKernel::new(KernelSpec::Rbf { sigma2: 0.5 }, rows.iter().collect(), &[1, -1, 1, -1, 1, -1], 5.0)
            .unwrap();
        assert!(reduced_qp_solve(&tk, &[0, 1], &[0.7, 0.7], 1e-7, 10).is_err());
        assert!(reduced_qp_solve(&tk, &[], &[], 1e-7, 10).is_err());
        let warm = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(
            reduced_qp_solve(&tk, &[0, 1, 2, 3, 4, 5], &warm, 1e-14, 1),
            Err(Error::InnerSolverCap { iterations: 1 })
        );
    }
}
