//! Sparse samples, labelled corpora and one-versus-one decomposition.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::solver_rng;

/// Integer class identifier as read from the data file.
pub type ClassId = i32;

/// Below this many rows the mean pairwise squared distance is computed exactly.
pub const EXACT_PAIR_LIMIT: usize = 2000;

/// Sparse feature vector with 0-based, strictly increasing indices and no
/// stored zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from `(index, value)` pairs, dropping explicit zeros.
    ///
    /// Indices are 0-based and must be strictly increasing.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, f64)>,
    {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut last: Option<u32> = None;
        for (position, (index, value)) in pairs.into_iter().enumerate() {
            if let Some(prev) = last {
                if index <= prev {
                    return Err(Error::NonIncreasingIndex { position });
                }
            }
            last = Some(index);
            if value != 0.0 {
                indices.push(index);
                values.push(value);
            }
        }
        Ok(Self { indices, values })
    }

    /// Dense constructor, mostly useful in tests.
    pub fn from_dense(values: &[f64]) -> Self {
        let pairs = values.iter().enumerate().map(|(i, &v)| (i as u32, v));
        // indices from enumerate are strictly increasing
        Self::from_pairs(pairs).unwrap_or_default()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Largest stored index plus one, or zero for the empty vector.
    pub fn dim(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize + 1)
    }

    /// Sparse dot product; indices present in only one operand are skipped.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (ai, av) = (&self.indices, &self.values);
        let (bi, bv) = (&other.indices, &other.values);
        let (mut p, mut q) = (0, 0);
        let mut sum = 0.0;
        while p < ai.len() && q < bi.len() {
            match ai[p].cmp(&bi[q]) {
                core::cmp::Ordering::Less => p += 1,
                core::cmp::Ordering::Greater => q += 1,
                core::cmp::Ordering::Equal => {
                    sum += av[p] * bv[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        sum
    }

    pub fn sq_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// `||a - b||^2` by merging the two index lists.
    pub fn sq_distance(&self, other: &SparseVector) -> f64 {
        let (ai, av) = (&self.indices, &self.values);
        let (bi, bv) = (&other.indices, &other.values);
        let (mut p, mut q) = (0, 0);
        let mut sum = 0.0;
        while p < ai.len() || q < bi.len() {
            let d = if q == bi.len() || (p < ai.len() && ai[p] < bi[q]) {
                p += 1;
                av[p - 1]
            } else if p == ai.len() || bi[q] < ai[p] {
                q += 1;
                -bv[q - 1]
            } else {
                p += 1;
                q += 1;
                av[p - 1] - bv[q - 1]
            };
            sum += d * d;
        }
        sum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: SparseVector,
    pub label: ClassId,
}

impl Sample {
    pub fn new(features: SparseVector, label: ClassId) -> Self {
        Self { features, label }
    }
}

/// Training or test corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    num_features: usize,
    classes: Vec<ClassId>,
}

impl Dataset {
    /// Builds a dataset, collecting the sorted class set and feature count.
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::TooFewRows { needed: 1, got: 0 });
        }
        let num_features = samples.iter().map(|s| s.features.dim()).max().unwrap_or(0);
        let mut classes: Vec<ClassId> = samples.iter().map(|s| s.label).collect();
        classes.sort_unstable();
        classes.dedup();
        Ok(Self { samples, num_features, classes })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// One past the largest 0-based feature index, i.e. the largest 1-based
    /// index seen on disk.
    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn sample(&self, row: usize) -> &Sample {
        &self.samples[row]
    }

    /// Dataset restricted to `rows`, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let mut samples = Vec::with_capacity(rows.len());
        for &r in rows {
            let s = self
                .samples
                .get(r)
                .ok_or(Error::IndexOutOfRange { index: r, len: self.samples.len() })?;
            samples.push(s.clone());
        }
        Self::new(samples)
    }
}

/// Binary problem for one unordered class pair. The smaller class id is the
/// positive side.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySubproblem {
    pub positive_class: ClassId,
    pub negative_class: ClassId,
    /// `(dataset row, y)` with `y` in `{-1, +1}`, in dataset order.
    pub rows: Vec<(usize, i8)>,
}

impl BinarySubproblem {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<i8> {
        self.rows.iter().map(|&(_, y)| y).collect()
    }

    pub fn features<'a>(&self, dataset: &'a Dataset) -> Vec<&'a SparseVector> {
        self.rows.iter().map(|&(r, _)| &dataset.sample(r).features).collect()
    }
}

/// One binary subproblem per unordered class pair, `K (K - 1) / 2` in all,
/// ordered lexicographically by `(positive_class, negative_class)`.
pub fn split_ovo(dataset: &Dataset) -> Result<Vec<BinarySubproblem>> {
    let classes = dataset.classes();
    if classes.len() < 2 {
        return Err(Error::Config("one-versus-one needs at least two classes"));
    }
    let mut out = Vec::with_capacity(classes.len() * (classes.len() - 1) / 2);
    for (a, &pos) in classes.iter().enumerate() {
        for &neg in &classes[a + 1..] {
            let rows = dataset
                .samples()
                .iter()
                .enumerate()
                .filter_map(|(r, s)| match s.label {
                    l if l == pos => Some((r, 1)),
                    l if l == neg => Some((r, -1)),
                    _ => None,
                })
                .collect();
            out.push(BinarySubproblem { positive_class: pos, negative_class: neg, rows });
        }
    }
    Ok(out)
}

/// Mean squared Euclidean distance between training patterns.
///
/// Exact over all `i < j` pairs up to [`EXACT_PAIR_LIMIT`] rows; above that,
/// a Monte-Carlo mean over `sample_pairs` uniformly drawn pairs `i != j`.
pub fn avg_sq_distance(dataset: &Dataset, sample_pairs: usize, seed: u64) -> Result<f64> {
    let rows: Vec<&SparseVector> = dataset.samples().iter().map(|s| &s.features).collect();
    avg_sq_distance_rows(&rows, sample_pairs, seed)
}

pub(crate) fn avg_sq_distance_rows(rows: &[&SparseVector], sample_pairs: usize, seed: u64) -> Result<f64> {
    let m = rows.len();
    if m < 2 {
        return Err(Error::NoPairs);
    }
    if sample_pairs == 0 {
        return Err(Error::Config("sample_pairs must be at least 1"));
    }
    if m <= EXACT_PAIR_LIMIT {
        let mut sum = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                sum += rows[i].sq_distance(rows[j]);
            }
        }
        let pairs = (m * (m - 1) / 2) as f64;
        return Ok(sum / pairs);
    }
    let mut rng = solver_rng(seed);
    let mut sum = 0.0;
    for _ in 0..sample_pairs {
        let i = rng.random_range(0..m);
        let mut j = rng.random_range(0..m - 1);
        if j >= i {
            j += 1;
        }
        sum += rows[i].sq_distance(rows[j]);
    }
    Ok(sum / sample_pairs as f64)
}
