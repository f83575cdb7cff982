use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("distortion undefined when S = 0")]
    UndefinedDistortion,

    #[error("non-finite value in trial {trial} at step {step}: {what}")]
    NonFinite {
        trial: u64,
        step: usize,
        what: &'static str,
    },

    #[error("sequencing violated in trial {trial} at step {step}: {detail}")]
    Sequencing {
        trial: u64,
        step: usize,
        detail: &'static str,
    },

    #[error("invariant violated in trial {trial}: {detail}")]
    Invariant { trial: u64, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidDimension(_)
                | Error::InvalidParams(_)
                | Error::Precondition(_)
                | Error::DimensionMismatch { .. }
                | Error::Config(_)
                | Error::Json { .. }
        ) || matches!(self, Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound)
    }
}
