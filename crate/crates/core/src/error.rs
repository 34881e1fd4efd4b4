use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the coding, decoding and modelling routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("duplicate evaluation node {0}")]
    DuplicateNodes(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A linear solve was refused because the system is singular or its
    /// estimated condition number exceeds the guard.
    #[error("ill-conditioned system ({context}): condition number {cond:.3e} exceeds {limit:.1e}")]
    IllConditioned {
        context: &'static str,
        cond: f64,
        limit: f64,
    },

    #[error("residual check failed ({context}): {residual:.3e} > {tolerance:.3e}")]
    Residual {
        context: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("no K-subset of the outputs yields a decode consistent with enough outputs")]
    NoConsistentDecode,

    #[error("two different decodes are consistent with the outputs; matching tolerance too loose")]
    AmbiguousDecode,

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error("numerical integration failed: {0}")]
    Integration(String),

    #[error("malformed file {path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Coarse classification used by front ends to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParams(_)
            | Error::DimensionMismatch(_)
            | Error::DuplicateNodes(_)
            | Error::InvalidInput(_) => ErrorClass::Validation,
            Error::IllConditioned { .. }
            | Error::Residual { .. }
            | Error::NoConsistentDecode
            | Error::AmbiguousDecode
            | Error::BoundViolation(_)
            | Error::Integration(_) => ErrorClass::Numerical,
            Error::Format { .. } | Error::Io(_) => ErrorClass::Io,
        }
    }

    pub(crate) fn params(msg: impl Into<String>) -> Self {
        Error::InvalidParams(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
