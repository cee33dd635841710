use thiserror::Error;

/// Errors raised by every evaluator, kernel and front end in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("division by zero")]
    DivisionByZero,

    /// The requested point hits a pole of the sum (x + k = 0 for some 0 <= k <= N).
    #[error("pole: {0}")]
    Pole(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// An identity that must hold exactly (or within tolerance) failed.
    #[error("identity violation in {identity} at {location}")]
    IdentityViolation { identity: String, location: String },

    #[error("precision context mismatch: {0} bits vs {1} bits")]
    ContextMismatch(u32, u32),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("stirling cache: {0}")]
    Cache(String),
}

impl Error {
    /// Short machine-readable tag used in JSON error objects and FFI codes.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DivisionByZero => "division_by_zero",
            Error::Pole(_) => "pole",
            Error::NoConvergence(_) => "no_convergence",
            Error::IdentityViolation { .. } => "identity_violation",
            Error::ContextMismatch(..) => "context_mismatch",
            Error::Parse(_) => "parse",
            Error::Cache(_) => "cache",
        }
    }

    pub(crate) fn identity(identity: impl Into<String>, location: impl Into<String>) -> Self {
        Error::IdentityViolation {
            identity: identity.into(),
            location: location.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
