//! Binary and one-versus-one classifiers built from a solved dual.
//!
//! The bias is folded into the kernel, so a binary machine decides with
//! `h(x) = sum_i coef_i (k(sv_i, x) + 1)` where `coef_i = a_i y_i`.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::{BinarySubproblem, ClassId, SparseVector};
use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, TildeKernel};
use crate::meb::DualState;

#[derive(Debug, Clone, PartialEq)]
pub struct SupportVector {
    pub features: SparseVector,
    /// `a_i y_i`, never zero.
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    pub kernel: KernelSpec,
    pub c: f64,
    pub support: Vec<SupportVector>,
    pub positive_class: ClassId,
    pub negative_class: ClassId,
}

impl BinaryModel {
    pub fn decision_value(&self, x: &SparseVector) -> f64 {
        self.support.iter().map(|sv| sv.coef * (self.kernel.eval(&sv.features, x) + 1.0)).sum()
    }

    /// Positive class when the decision value is `>= 0`.
    pub fn predict(&self, x: &SparseVector) -> ClassId {
        if self.decision_value(x) >= 0.0 {
            self.positive_class
        } else {
            self.negative_class
        }
    }
}

/// Extracts the support of `state` (rows of `tk`) as a self-contained machine.
pub fn build_binary(tk: &TildeKernel<'_>, state: &DualState, sub: &BinarySubproblem) -> Result<BinaryModel> {
    if state.len() != tk.len() {
        return Err(Error::Config("dual state and kernel differ in size"));
    }
    let support: Vec<SupportVector> = state
        .coreset()
        .iter()
        .filter(|&&i| state.weight(i) > 0.0)
        .map(|&i| SupportVector { features: tk.row(i).clone(), coef: state.weight(i) * tk.label(i) })
        .collect();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    Ok(BinaryModel {
        kernel: tk.spec(),
        c: tk.c(),
        support,
        positive_class: sub.positive_class,
        negative_class: sub.negative_class,
    })
}

/// One machine per unordered class pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OvoModel {
    classes: Vec<ClassId>,
    machines: Vec<BinaryModel>,
}

impl OvoModel {
    /// `classes` must be strictly increasing and `machines` must cover every
    /// unordered pair of them exactly once.
    pub fn new(classes: Vec<ClassId>, machines: Vec<BinaryModel>) -> Result<Self> {
        let k = classes.len();
        if k < 2 {
            return Err(Error::NoPairs);
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("class ids must be strictly increasing"));
        }
        if machines.len() != k * (k - 1) / 2 {
            return Err(Error::Config("need exactly one machine per class pair"));
        }
        let mut seen = vec![false; k * k];
        for m in &machines {
            let (a, b) = match (classes.binary_search(&m.positive_class), classes.binary_search(&m.negative_class)) {
                (Ok(a), Ok(b)) if a != b => (a.min(b), a.max(b)),
                _ => return Err(Error::Config("machine refers to an unknown or repeated class")),
            };
            if core::mem::replace(&mut seen[a * k + b], true) {
                return Err(Error::Config("class pair appears twice"));
            }
        }
        Ok(Self { classes, machines })
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    pub fn machines(&self) -> &[BinaryModel] {
        &self.machines
    }

    pub fn into_machines(self) -> Vec<BinaryModel> {
        self.machines
    }
}

/// Majority vote over all machines; ties go to the smallest class id.
pub fn predict_ovo(model: &OvoModel, x: &SparseVector) -> ClassId {
    let mut votes = vec![0u32; model.classes.len()];
    for m in &model.machines {
        let winner = m.predict(x);
        if let Ok(p) = model.classes.binary_search(&winner) {
            votes[p] += 1;
        }
    }
    let mut best = 0;
    for (p, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = p;
        }
    }
    model.classes[best]
}
