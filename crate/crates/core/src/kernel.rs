//! Base Mercer kernels and the labelled, regularized MEB kernel.

use alloc::vec::Vec;

use crate::data::{BinarySubproblem, Dataset, SparseVector};
use crate::error::{Error, Result};

/// Absolute tolerance when checking that a normalized kernel has a constant diagonal.
pub const DIAGONAL_TOLERANCE: f64 = 1e-12;

/// Base kernel `k(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `exp(-||a - b||^2 / (2 sigma2))`
    Rbf { sigma2: f64 },
    /// `a'b`
    Linear,
    /// `(a'b + 1)^degree`
    PolyInhomogeneous { degree: u32 },
    /// `(gamma a'b)^degree`
    PolyHomogeneous { gamma: f64, degree: u32 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { sigma2 } if !(sigma2 > 0.0 && sigma2.is_finite()) => {
                Err(Error::Config("RBF sigma2 must be positive and finite"))
            }
            KernelSpec::PolyInhomogeneous { degree: 0 } | KernelSpec::PolyHomogeneous { degree: 0, .. } => {
                Err(Error::Config("polynomial degree must be at least 1"))
            }
            KernelSpec::PolyHomogeneous { gamma, .. } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::Config("polynomial gamma must be positive and finite"))
            }
            _ => Ok(()),
        }
    }

    /// Whether `k(x, x)` is the same for every `x`. Only the RBF kernel is.
    pub fn is_normalized(&self) -> bool {
        matches!(self, KernelSpec::Rbf { .. })
    }

    pub fn eval(&self, a: &SparseVector, b: &SparseVector) -> f64 {
        match self {
            KernelSpec::Rbf { .. } => self.eval_with_norms(a, b, a.sq_norm(), b.sq_norm()),
            _ => self.eval_with_norms(a, b, 0.0, 0.0),
        }
    }

    /// Kernel value given precomputed squared norms (only the RBF kernel reads them).
    #[inline]
    pub(crate) fn eval_with_norms(&self, a: &SparseVector, b: &SparseVector, na: f64, nb: f64) -> f64 {
        let dot = a.dot(b);
        match *self {
            KernelSpec::Rbf { sigma2 } => {
                let d2 = (na + nb - 2.0 * dot).max(0.0);
                libm::exp(-d2 / (2.0 * sigma2))
            }
            KernelSpec::Linear => dot,
            KernelSpec::PolyInhomogeneous { degree } => powi(dot + 1.0, degree),
            KernelSpec::PolyHomogeneous { gamma, degree } => powi(gamma * dot, degree),
        }
    }
}

/// Square-and-multiply integer power.
fn powi(mut base: f64, mut exp: u32) -> f64 {
    let mut acc = 1.0;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}

/// `k~(i, j) = y_i y_j (k(x_i, x_j) + 1) + [i = j] / C` over a fixed set of rows.
///
/// Owns the diagonal and `delta2` (the constant `D2` of the objective). For a
/// normalized base kernel `delta2 = 2 + 1/C` is the common diagonal value;
/// otherwise it is the largest diagonal entry, which keeps `g(a) >= 0` on the
/// whole simplex.
#[derive(Debug, Clone)]
pub struct TildeKernel<'a> {
    spec: KernelSpec,
    rows: Vec<&'a SparseVector>,
    labels: Vec<f64>,
    c: f64,
    norms: Vec<f64>,
    diag: Vec<f64>,
    delta2: f64,
    normalized: bool,
}

impl<'a> TildeKernel<'a> {
    pub fn new(spec: KernelSpec, rows: Vec<&'a SparseVector>, labels: &[i8], c: f64) -> Result<Self> {
        spec.validate()?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Config("C must be positive and finite"));
        }
        if rows.len() != labels.len() {
            return Err(Error::Config("rows and labels differ in length"));
        }
        if rows.is_empty() {
            return Err(Error::TooFewRows { needed: 1, got: 0 });
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(Error::Config("labels must be +1 or -1"));
        }
        let norms = rows.iter().map(|r| r.sq_norm()).collect();
        let mut tk = Self {
            spec,
            rows,
            labels: labels.iter().map(|&y| f64::from(y)).collect(),
            c,
            norms,
            diag: Vec::new(),
            delta2: 0.0,
            normalized: spec.is_normalized(),
        };
        tk.diag = (0..tk.len()).map(|i| tk.entry(i, i)).collect();
        tk.delta2 = tk.compute_delta2()?;
        Ok(tk)
    }

    /// Kernel over the rows of one OVO subproblem.
    pub fn for_subproblem(spec: KernelSpec, dataset: &'a Dataset, sub: &BinarySubproblem, c: f64) -> Result<Self> {
        Self::new(spec, sub.features(dataset), &sub.labels(), c)
    }

    /// Treat the kernel as non-normalized even if the base kernel is: the
    /// solvers then take the gradient-form code path. Used to check that
    /// both paths agree on normalized kernels.
    pub fn with_generic_path(mut self) -> Self {
        self.normalized = false;
        self.delta2 = self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self
    }

    fn compute_delta2(&self) -> Result<f64> {
        if self.normalized {
            let expected = self.diag[0];
            for (row, &value) in self.diag.iter().enumerate() {
                if (value - expected).abs() > DIAGONAL_TOLERANCE {
                    return Err(Error::InconsistentDiagonal { row, value, expected });
                }
            }
            Ok(expected)
        } else {
            Ok(self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn delta2(&self) -> f64 {
        self.delta2
    }

    pub fn row(&self, i: usize) -> &'a SparseVector {
        self.rows[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }

    /// Diagonal `k~(i, i)` for every row.
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Checked `k~(i, j)`.
    pub fn tilde_eval(&self, i: usize, j: usize) -> Result<f64> {
        let len = self.len();
        for index in [i, j] {
            if index >= len {
                return Err(Error::IndexOutOfRange { index, len });
            }
        }
        Ok(self.entry(i, j))
    }

    /// `k~(i, j)` without bounds reporting. Symmetric bit-for-bit.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let k = self.spec.eval_with_norms(self.rows[i], self.rows[j], self.norms[i], self.norms[j]);
        let v = self.labels[i] * self.labels[j] * (k + 1.0);
        if i == j {
            v + 1.0 / self.c
        } else {
            v
        }
    }

    /// Diagonal and `delta2`, re-checking the normalization invariant.
    pub fn tilde_diag(&self) -> Result<(&[f64], f64)> {
        Ok((&self.diag, self.compute_delta2()?))
    }
}
