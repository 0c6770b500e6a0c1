#![allow(dead_code)]

use coreball_core::rng::solver_rng;
use coreball_core::{KernelSpec, SparseVector, TildeKernel};
use coreball_oracle::nalgebra::DMatrix;
use rand::Rng;

/// Labelled dense points with their sparse copies.
pub struct Instance {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub rows: Vec<SparseVector>,
}

impl Instance {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<i8>) -> Self {
        let rows = points.iter().map(|p| SparseVector::from_dense(p)).collect();
        Self { points, labels, rows }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn tilde(&self, spec: KernelSpec, c: f64) -> TildeKernel<'_> {
        TildeKernel::new(spec, self.rows.iter().collect(), &self.labels, c).unwrap()
    }

    /// Dense `k~` built from independent kernel code.
    pub fn oracle_gram(&self, spec: KernelSpec, c: f64) -> DMatrix<f64> {
        let y: Vec<f64> = self.labels.iter().map(|&v| f64::from(v)).collect();
        coreball_oracle::tilde_gram(&self.points, &y, c, |a, b| base_kernel(spec, a, b))
    }
}

pub fn base_kernel(spec: KernelSpec, a: &[f64], b: &[f64]) -> f64 {
    match spec {
        KernelSpec::Rbf { sigma2 } => coreball_oracle::rbf(a, b, sigma2),
        KernelSpec::Linear => coreball_oracle::dot(a, b),
        KernelSpec::PolyInhomogeneous { degree } => (coreball_oracle::dot(a, b) + 1.0).powi(degree as i32),
        KernelSpec::PolyHomogeneous { gamma, degree } => (gamma * coreball_oracle::dot(a, b)).powi(degree as i32),
    }
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Two Gaussian blobs in `dim` dimensions with centers `+-spread` on every axis.
pub fn blobs(m: usize, dim: usize, spread: f64, seed: u64) -> Instance {
    let mut rng = solver_rng(seed);
    let mut points = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i in 0..m {
        let y: i8 = if i % 2 == 0 { 1 } else { -1 };
        let p: Vec<f64> = (0..dim).map(|_| f64::from(y) * spread + gaussian(&mut rng)).collect();
        points.push(p);
        labels.push(y);
    }
    Instance::new(points, labels)
}

/// Points uniform in `[-1, 1]^dim` with random labels.
pub fn uniform(m: usize, dim: usize, seed: u64) -> Instance {
    let mut rng = solver_rng(seed);
    let points: Vec<Vec<f64>> = (0..m).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let labels = (0..m).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
    Instance::new(points, labels)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
