//! Dense reference computations for tests.
//!
//! Nothing here shares code with `coreball-core`: kernels are evaluated on
//! dense slices and the simplex QP is solved with accelerated projected
//! gradient followed by an exact active-set polish.

pub use nalgebra;

use nalgebra::{DMatrix, DVector};

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `exp(-||a - b||^2 / (2 sigma2))`
pub fn rbf(a: &[f64], b: &[f64], sigma2: f64) -> f64 {
    (-sq_dist(a, b) / (2.0 * sigma2)).exp()
}

/// Dense `k~(i, j) = y_i y_j (k(x_i, x_j) + 1) + [i = j] / C`.
pub fn tilde_gram(points: &[Vec<f64>], labels: &[f64], c: f64, kernel: impl Fn(&[f64], &[f64]) -> f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        let mut v = labels[i] * labels[j] * (kernel(&points[i], &points[j]) + 1.0);
        if i == j {
            v += 1.0 / c;
        }
        v
    })
}

/// `a' K a`.
pub fn quad(k: &DMatrix<f64>, alpha: &[f64]) -> f64 {
    let a = DVector::from_column_slice(alpha);
    a.dot(&(k * &a))
}

/// `g(a) = delta2 - a' K a`.
pub fn objective(k: &DMatrix<f64>, delta2: f64, alpha: &[f64]) -> f64 {
    delta2 - quad(k, alpha)
}

/// `grad g(a) = -2 K a`.
pub fn gradient(k: &DMatrix<f64>, alpha: &[f64]) -> Vec<f64> {
    let a = DVector::from_column_slice(alpha);
    (k * a).iter().map(|v| -2.0 * v).collect()
}

/// Euclidean projection onto the unit simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (j as f64 + 1.0);
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone)]
pub struct SimplexOptimum {
    pub alpha: Vec<f64>,
    /// `min a' K a` over the simplex.
    pub quad: f64,
    /// Frank-Wolfe gap `2 (a'Ka - min_i (Ka)_i)` at `alpha`.
    pub gap: f64,
}

/// Minimizes `a' K a` over the unit simplex for a symmetric positive definite `K`.
pub fn minimize_on_simplex(k: &DMatrix<f64>) -> SimplexOptimum {
    let fista = fista(k, 200_000);
    let polished = polish(k, &fista.alpha);
    match polished {
        Some(p) if p.gap <= fista.gap || p.quad <= fista.quad => p,
        _ => fista,
    }
}

fn summarize(k: &DMatrix<f64>, alpha: Vec<f64>) -> SimplexOptimum {
    let a = DVector::from_column_slice(&alpha);
    let ka = k * &a;
    let q = a.dot(&ka);
    let min = ka.iter().cloned().fold(f64::INFINITY, f64::min);
    SimplexOptimum { alpha, quad: q, gap: 2.0 * (q - min) }
}

/// FISTA with gradient restarts; stops when the FW gap is below `1e-14 * a'Ka`.
fn fista(k: &DMatrix<f64>, max_iter: usize) -> SimplexOptimum {
    let n = k.nrows();
    let lipschitz = 2.0 * k.symmetric_eigenvalues().max();
    let step = 1.0 / lipschitz;
    let mut x = vec![1.0 / n as f64; n];
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut prev_f = f64::INFINITY;
    for _ in 0..max_iter {
        let yv = DVector::from_column_slice(&y);
        let grad = (k * &yv) * 2.0;
        let trial: Vec<f64> = y.iter().zip(grad.iter()).map(|(v, g)| v - step * g).collect();
        let next = project_simplex(&trial);
        let s = summarize(k, next.clone());
        if s.gap <= 1e-14 * s.quad {
            return s;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        if s.quad > prev_f {
            if t == 1.0 {
                // a plain projected step no longer descends
                break;
            }
            t = 1.0;
            y = x.clone();
            continue;
        }
        let beta = (t - 1.0) / t_next;
        y = next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
        x = next;
        t = t_next;
        prev_f = s.quad;
    }
    summarize(k, x)
}

/// Active-set refinement: solves the KKT system on a support estimate
/// exactly, dropping negative weights and adding violators.
fn polish(k: &DMatrix<f64>, start: &[f64]) -> Option<SimplexOptimum> {
    let n = k.nrows();
    let max = start.iter().cloned().fold(0.0, f64::max);
    let mut support: Vec<usize> = (0..n).filter(|&i| start[i] > 1e-9 * max).collect();
    for _ in 0..4 * n + 10 {
        if support.is_empty() {
            return None;
        }
        let s = support.len();
        let sub = DMatrix::from_fn(s, s, |a, b| k[(support[a], support[b])]);
        let chol = sub.cholesky()?;
        let w = chol.solve(&DVector::from_element(s, 1.0));
        let total: f64 = w.iter().sum();
        let weights: Vec<f64> = w.iter().map(|v| v / total).collect();
        if let Some((pos, _)) = weights
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
        {
            support.remove(pos);
            continue;
        }
        let mut alpha = vec![0.0; n];
        for (&i, &v) in support.iter().zip(&weights) {
            alpha[i] = v;
        }
        let out = summarize(k, alpha);
        let ka = k * DVector::from_column_slice(&out.alpha);
        let violator = (0..n)
            .filter(|i| !support.contains(i))
            .min_by(|&a, &b| ka[a].total_cmp(&ka[b]))
            .filter(|&i| ka[i] < out.quad * (1.0 - 1e-13));
        match violator {
            Some(i) => {
                support.push(i);
                support.sort_unstable();
            }
            None => return Some(out),
        }
    }
    None
}

/// Optimum of `g(a) = delta2 - a' K a` and the optimal weights.
pub fn maximize_g(k: &DMatrix<f64>, delta2: f64) -> (f64, Vec<f64>) {
    let opt = minimize_on_simplex(k);
    (delta2 - opt.quad, opt.alpha)
}
