//! Kernel L2-SVM training through the minimal enclosing ball (MEB) view.
//!
//! The L2-SVM dual with the labelled, regularized kernel
//! `k~(i, j) = y_i y_j (k(x_i, x_j) + 1) + [i = j] / C`
//! is a quadratic program over the unit simplex:
//!
//! ```text
//! maximize   g(a) = D2 - a' K~ a
//! subject to sum(a) = 1, a >= 0
//! ```
//!
//! For normalized base kernels (constant diagonal) this is exactly the dual
//! of the MEB of the feature points `z_i`, with `g(a)` the squared radius of
//! the ball centered at `c = sum a_i z_i`. Three solvers are provided:
//!
//! - [`meb::train_fw`]: Frank-Wolfe, one toward-vertex step per iteration.
//! - [`meb::train_mfw`]: Frank-Wolfe with away (and drop) steps.
//! - [`meb::train_bc`]: the Badoiu-Clarkson / core vector machine loop,
//!   re-solving the reduced QP over the core set with an SMO inner solver.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, timing and the
//! command-line front end live in the `coreball` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cache;
pub mod data;
mod error;
pub mod kernel;
pub mod meb;
pub mod model;
pub mod qp;
pub mod rng;

pub use cache::{CacheStats, KernelCache};
pub use data::{avg_sq_distance, split_ovo, BinarySubproblem, ClassId, Dataset, Sample, SparseVector};
pub use error::{Error, Result};
pub use kernel::{KernelSpec, TildeKernel};
pub use meb::{
    train, train_bc, train_fw, train_mfw, train_observed, Algorithm, DualState, InitPolicy, IterationRecord,
    Observer, Solution, SolverConfig, StepKind, TrainStats,
};
pub use model::{build_binary, predict_ovo, BinaryModel, OvoModel, SupportVector};
