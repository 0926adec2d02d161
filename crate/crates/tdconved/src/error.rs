//! Crate-wide error type. Every variant carries enough context to act on,
//! and maps to a one-word category for the CLI's machine-readable failures.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Dimension disagreement between two tensors or a tensor and an
    /// operation's expectation. Both shapes are named.
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// Index outside a valid range (token ids, tap numbers, ...).
    #[error("index out of range in {op}: {index} not below {len}")]
    Index {
        op: &'static str,
        index: usize,
        len: usize,
    },

    /// A fixed capacity (e.g. the position-embedding table) was exceeded.
    #[error("capacity exceeded in {op}: {got} > {max}")]
    Capacity {
        op: &'static str,
        got: usize,
        max: usize,
    },

    /// A caller broke an API contract (stale incremental state, empty
    /// input where at least one element is required, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed bytes in one of the on-disk formats; `offset` is the byte
    /// position where decoding failed.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable one-word category, printed by the CLI on failure.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Shape { .. } => "shape",
            Error::Index { .. } => "index",
            Error::Capacity { .. } => "capacity",
            Error::Contract(_) => "contract",
            Error::Format { .. } => "format",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }
}
