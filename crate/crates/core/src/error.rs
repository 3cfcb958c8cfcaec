use thiserror::Error;

/// Errors raised by state construction, analysis and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {value} out of range for party {party} (dimension {dim})")]
    IndexOutOfRange {
        party: usize,
        value: usize,
        dim: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by the caller's arguments rather than by the
    /// content of a state or file.
    pub fn is_argument_error(&self) -> bool {
        matches!(
            self,
            Error::IndexOutOfRange { .. }
                | Error::InvalidArgument(_)
                | Error::Degenerate(_)
                | Error::DimensionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
