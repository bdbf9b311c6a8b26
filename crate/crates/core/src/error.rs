use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("wall at nadir: {0}")]
    WallAtNadir(String),

    #[error("division domain error: {0}")]
    DivisionDomain(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported LAS point data format {code} (supported: 0, 1, 6, 7)")]
    UnsupportedFormat { code: u8 },

    #[error("corrupt file at byte offset {offset}: {message}")]
    Corrupt { offset: u64, message: String },

    #[error("schema error: missing column `{column}`")]
    Schema { column: String },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("config error in {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("unknown {kind} `{name}`; available: {available}")]
    Lookup {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
