use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the algorithmic core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A configuration value or combination is invalid.
    Config(&'static str),
    /// An operation needed more rows than were supplied.
    TooFewRows { needed: usize, got: usize },
    IndexOutOfRange { index: usize, len: usize },
    /// A sparse vector had indices that were not strictly increasing.
    NonIncreasingIndex { position: usize },
    /// A kernel flagged as normalized produced a non-constant diagonal.
    InconsistentDiagonal { row: usize, value: f64, expected: f64 },
    /// The line-search denominator vanished: the chosen point coincides with the center.
    DegenerateDirection { index: usize },
    /// Away steps are undefined from a vertex carrying the whole weight.
    AwayStepForbidden { index: usize },
    EmptyCoreset,
    EmptySupport,
    /// The reduced-QP solver hit its iteration cap before reaching tolerance.
    InnerSolverCap { iterations: u64 },
    /// Fewer than two points: no pairwise distance exists.
    NoPairs,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::TooFewRows { needed, got } => {
                write!(f, "need at least {needed} rows, got {got}")
            }
            Error::IndexOutOfRange { index, len } => {
                write!(f, "row index {index} out of range for {len} rows")
            }
            Error::NonIncreasingIndex { position } => {
                write!(f, "non-increasing feature index at entry {position}")
            }
            Error::InconsistentDiagonal { row, value, expected } => write!(
                f,
                "kernel is flagged normalized but diagonal entry {row} is {value} (expected {expected})"
            ),
            Error::DegenerateDirection { index } => {
                write!(f, "degenerate search direction: point {index} coincides with the center")
            }
            Error::AwayStepForbidden { index } => {
                write!(f, "away step from {index} is forbidden: it carries the whole weight")
            }
            Error::EmptyCoreset => f.write_str("core set is empty"),
            Error::EmptySupport => f.write_str("model has no support vectors"),
            Error::InnerSolverCap { iterations } => {
                write!(f, "reduced QP solver did not converge within {iterations} steps")
            }
            Error::NoPairs => f.write_str("average squared distance needs at least two points"),
        }
    }
}

impl core::error::Error for Error {}
