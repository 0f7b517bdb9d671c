use thiserror::Error;

use crate::opalg::ParseError;

/// Errors raised by the mode algebra and the analyses built on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mode {mode} is out of range for a {modes}-mode system")]
    ModeOutOfRange { mode: usize, modes: usize },

    #[error("{modes} modes exceed the dense limit of {limit}")]
    ModeLimit { modes: usize, limit: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected} modes, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),

    #[error("operator is not a projection (deviation {deviation:.3e})")]
    NotProjection { deviation: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("meet methods disagree by {residual:.3e}")]
    MeetDisagreement { residual: f64 },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("malformed state file: {0}")]
    StateFormat(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
