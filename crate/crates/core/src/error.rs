use thiserror::Error;

/// Errors produced by the divergence-selection library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivselError {
    #[error("length mismatch: x has {x} entries, mu has {mu}")]
    LengthMismatch { x: usize, mu: usize },

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input")]
    EmptyInput,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, DivselError>;

impl DivselError {
    pub(crate) fn support(msg: impl Into<String>) -> Self {
        DivselError::InvalidSupport(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        DivselError::InvalidParameter(msg.into())
    }
}
