use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CsError>;

#[derive(Debug, Error)]
pub enum CsError {
    /// A caller-supplied argument violates a precondition.
    #[error("{0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("malformed data in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CsError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CsError::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, CsError::Io { .. })
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(CsError::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}
