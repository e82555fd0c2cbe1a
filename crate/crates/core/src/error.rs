use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown configuration key \"{0}\"")]
    UnknownKey(String),

    #[error("schema error: missing column(s) {}", .missing.join(", "))]
    Schema { missing: Vec<String> },

    #[error("data error: {0}")]
    Data(String),

    #[error("integrity check failed for {path}: expected sha256 {expected}, got {actual}")]
    HashMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("checkpoint length mismatch: expected {expected} bytes, found {actual}")]
    LengthMismatch { expected: u64, actual: u64 },

    #[error("training aborted at window {window}: {reason}")]
    Training { window: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 = configuration, 3 = data, 4 = numeric failure, 1 = anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownKey(_) => 2,
            Error::Schema { .. } | Error::Data(_) | Error::HashMismatch { .. } | Error::Csv(_) => 3,
            Error::NonFinite { .. } | Error::Training { .. } | Error::Shape { .. } => 4,
            Error::Checkpoint(_) | Error::LengthMismatch { .. } | Error::Json(_) => 2,
            Error::Io(_) => 1,
        }
    }
}
