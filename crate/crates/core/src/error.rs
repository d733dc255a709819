use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, OrdError>;

#[derive(Debug, Error)]
pub enum OrdError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("missing column `{column}` in {context}")]
    MissingColumn { column: String, context: String },

    #[error("row {row}, column `{column}`: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("feature width mismatch: model expects {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("insufficient rows for label {label}: need {needed}, have {available}")]
    InsufficientRows {
        label: u8,
        needed: usize,
        available: usize,
    },

    #[error("non-finite loss at step {step} ({model})")]
    NonFiniteLoss { model: &'static str, step: usize },

    #[error("cell (mode={mode}, classifier={classifier}, seed={seed}): {source}")]
    ExperimentCell {
        mode: String,
        classifier: String,
        seed: u64,
        #[source]
        source: Box<OrdError>,
    },
}

impl OrdError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        OrdError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        OrdError::InvalidInput(msg.into())
    }
}
