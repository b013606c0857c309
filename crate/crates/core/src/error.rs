use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("modulus {0} is too large (must be below 2^63)")]
    ModulusTooLarge(u64),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("verification failed in clause {clause}: {detail}")]
    VerificationFailed { clause: String, detail: String },

    #[error("weight pairing sigma.alpha = {0} is nonzero")]
    NonzeroPairing(i64),

    #[error("quiver contains a cyclic path")]
    CyclicQuiver,

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("variable index error at position {pos}: {msg}")]
    Index { pos: usize, msg: String },
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::PreconditionViolated(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// True for errors caused by malformed input text or JSON, as opposed to
    /// well-formed input that violates an operation's precondition.
    pub fn is_format_error(&self) -> bool {
        matches!(
            self,
            Error::Format(_) | Error::Syntax { .. } | Error::Index { .. } | Error::NotPrime(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
