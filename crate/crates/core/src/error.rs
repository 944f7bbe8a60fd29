//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by graphkv operations.
///
/// `InvalidArgument` and `Config` are caller mistakes; the file-format
/// variants are distinct so tooling can tell a corrupt tensor from a
/// truncated one; `Invariant` means an internal contract was broken and
/// maps to a distinct CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("bad magic bytes {found:?}, expected \"GKT1\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported tensor format version {found}, expected 1")]
    UnsupportedVersion { found: u32 },

    #[error("unsupported tensor rank {found}, expected 2")]
    UnsupportedRank { found: u32 },

    #[error("tensor payload truncated: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: u64, actual: u64 },

    #[error("{extra} trailing bytes after tensor payload")]
    TrailingBytes { extra: u64 },

    #[error("tensor header declares {elements} elements, refusing to allocate")]
    OversizedTensor { elements: u128 },

    #[error("non-finite value at payload index {index}")]
    NonFinitePayload { index: usize },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
