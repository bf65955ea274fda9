use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("resource budget exceeded: {0}")]
    Budget(String),

    #[error("graph integrity violation: {0}")]
    Integrity(String),

    #[error("unsupported graph file version {found} (expected {expected})")]
    Version { found: String, expected: u32 },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("results table: {0}")]
    Table(String),

    #[error("checksum mismatch: header says {expected}, body hashes to {actual}")]
    Checksum { expected: String, actual: String },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
