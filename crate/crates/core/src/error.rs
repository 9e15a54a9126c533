use thiserror::Error;

/// Broad failure category, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum EqwsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("degenerate image: zero variance")]
    DegenerateImage,

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid filter bank: {0}")]
    InvalidBank(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("fit failed for (j1={j1}, j2={j2}): {reason}")]
    FitFailed { j1: usize, j2: usize, reason: String },

    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl EqwsError {
    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        EqwsError::Format {
            format,
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            EqwsError::InvalidParams(_) | EqwsError::Unsupported(_) => ErrorClass::Config,
            EqwsError::DegenerateImage
            | EqwsError::SizeMismatch { .. }
            | EqwsError::Format { .. }
            | EqwsError::Io(_)
            | EqwsError::Json(_) => ErrorClass::Data,
            EqwsError::NonFinite(_)
            | EqwsError::InvalidBank(_)
            | EqwsError::Singular(_)
            | EqwsError::FitFailed { .. } => ErrorClass::Numerical,
        }
    }
}

pub type Result<T, E = EqwsError> = std::result::Result<T, E>;
