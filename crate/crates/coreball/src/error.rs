use std::io;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Io(#[from] io::Error),
    /// Malformed LIBSVM input. Lines are 1-based.
    #[error("{message} at line {line}")]
    Parse { line: usize, message: String },
    #[error("model file: {message} at line {line}")]
    Model { line: usize, message: String },
    #[error("no samples in input")]
    EmptyData,
    #[error(
        "the core vector machine needs a normalized kernel (constant k(x, x)); \
         with {kernel} the SVM dual is not a MEB dual, use --solver fw or mfw"
    )]
    NeedsNormalizedKernel { kernel: &'static str },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] coreball_core::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }

    pub(crate) fn model(line: usize, message: impl Into<String>) -> Self {
        Error::Model { line, message: message.into() }
    }

    /// Process exit code: 1 for usage errors, 2 for data errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::NeedsNormalizedKernel { .. } => 1,
            Error::Core(coreball_core::Error::Config(_)) => 1,
            _ => 2,
        }
    }
}
