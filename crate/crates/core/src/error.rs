use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("malformed series for {id}: {reason}")]
    MalformedSeries { id: String, reason: String },

    #[error("invalid reading: {0}")]
    InvalidReading(String),

    #[error("invalid inventory: {0}")]
    InvalidInventory(String),

    #[error("flux reported for tree `{0}` which has no inventory record")]
    InventoryMismatch(String),

    #[error("{path}: missing column `{column}`")]
    Schema { path: PathBuf, column: String },

    #[error("{path}:{line}: {reason}")]
    Row {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("duplicate record: {0}")]
    DuplicateRecord(String),

    #[error("no overlapping weeks between sources ({coverage})")]
    NoOverlap { coverage: String },

    #[error("non-finite value at row {row}, column `{column}`")]
    Data { row: usize, column: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("cannot fit on an empty training set")]
    EmptyTrainingSet,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("unsupported document version `{found}` (expected `{expected}`)")]
    UnsupportedVersion { found: String, expected: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }

    pub fn row(path: impl Into<PathBuf>, line: u64, reason: impl Into<String>) -> Self {
        Error::Row {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }

    /// False only for configuration errors.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Config(_))
    }
}
