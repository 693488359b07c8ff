use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty series")]
    EmptySeries,

    #[error("non-finite input at position {index}")]
    NonFinite { index: usize },

    #[error("insufficient history: need {needed} observations, have {available}")]
    InsufficientHistory { needed: usize, available: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("length mismatch: expected input length T={expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("undefined MAPE: every truth value is zero")]
    UndefinedMape,

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: String,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no training windows: {0}")]
    NoTrainingWindows(String),

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("no negatives: contrastive batch needs at least two series")]
    NoNegatives,

    #[error("transfer matrix has no entry for pair ({0}, {1})")]
    MissingTransferPair(String, String),

    #[error("incompatible horizons: {0:?}")]
    IncompatibleHorizons(Vec<usize>),

    #[error("malformed file {path}: {message}")]
    Format { path: String, message: String },

    #[error("zoo entry {entry}: {message}")]
    ZooEntry { entry: String, message: String },

    #[error("zoo: {0}")]
    Zoo(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl std::fmt::Display, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_string(),
            message: message.into(),
        }
    }
}
