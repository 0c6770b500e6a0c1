//! File formats, training orchestration and benchmarks on top of
//! [`coreball_core`].
//!
//! - [`libsvm`]: the sparse LIBSVM text format.
//! - [`model_file`]: self-contained `coreball-svm v1` model files.
//! - [`train`]: one-versus-one training with per-pair seeds, run in parallel.
//! - [`bench`]: solver comparisons and the C grid search helper.

pub mod bench;
mod error;
pub mod libsvm;
pub mod model_file;
pub mod train;

pub use coreball_core as core;
pub use error::{Error, Result};

/// Exit status for a run that stopped before its stopping test fired.
pub const EXIT_NOT_CONVERGED: i32 = 3;
