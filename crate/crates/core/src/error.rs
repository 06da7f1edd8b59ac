use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dataset too small: need at least {required} samples, got {got}")]
    EmptyDataset { required: usize, got: usize },

    #[error("surrogate pool needs at least {required} samples for a nonzero coefficient, got {got}")]
    EmptySurrogate { required: usize, got: usize },

    #[error("dimension mismatch ({context}): expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("surrogate covariance is singular even after ridge {ridge:e}")]
    SingularCovariance { ridge: f64 },

    #[error("target metric has zero variance")]
    DegenerateTarget,

    #[error("failure probability must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("interval half-width must be positive, got {0}")]
    InvalidAlpha(f64),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Internal invariant violations map to exit code 2; everything else is a
    /// user or data error.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "ParseError",
            Error::Schema(_) => "SchemaError",
            Error::EmptyDataset { .. } => "EmptyDataset",
            Error::EmptySurrogate { .. } => "EmptySurrogate",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SingularCovariance { .. } => "SingularCovariance",
            Error::DegenerateTarget => "DegenerateTarget",
            Error::InvalidDelta(_) => "InvalidDelta",
            Error::InvalidAlpha(_) => "InvalidAlpha",
            Error::InvalidSplit(_) => "InvalidSplit",
            Error::InsufficientData(_) => "InsufficientData",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Invariant(_) => "InvariantViolation",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
