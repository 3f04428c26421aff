use std::path::PathBuf;

/// Errors produced by the kernels, loaders and the CLI.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("operands belong to different RNS bases")]
    BasisMismatch,
    #[error("unsupported transform size {n}: {reason}")]
    UnsupportedSize { n: usize, reason: String },
    #[error("length mismatch: expected {expected}, got {got}")]
    Length { expected: usize, got: usize },
    #[error("input bound violated: {0}")]
    Bound(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
