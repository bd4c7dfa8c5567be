use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes of the sensing, recovery and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode index {0}; expected 1..=4")]
    InvalidMode(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("anchor ({row}, {col}) is outside the valid range for a {p}x{p} patch")]
    AnchorOutOfRange { row: usize, col: usize, p: usize },

    #[error("correlation undefined: channel {0} is constant")]
    ConstantChannel(char),

    #[error("gradient descent diverged at step {step} (|d| = {norm:e}); reduce the step size")]
    Divergence { step: usize, norm: f64 },

    #[error("non-finite state at iteration {iteration}: {what}")]
    NonFinite { iteration: usize, what: String },

    #[error("corrupt measurement data: {0}")]
    Corrupt(String),

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 for usage and validation problems, 3 for corrupt inputs, 4 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Corrupt(_) | Error::Image { .. } | Error::Io(_) | Error::Json(_) => 3,
            Error::Divergence { .. } | Error::NonFinite { .. } => 4,
            _ => 2,
        }
    }
}
