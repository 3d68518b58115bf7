use std::path::PathBuf;

/// Crate-wide error type. Each variant maps to a distinct process exit code
/// (see [`Error::exit_code`]) so callers can tell error classes apart.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("ingest error in {path} at line {line}: {msg}")]
    Ingest {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("wire-format error in stream {src}->{dst} at offset {offset}: {msg}")]
    Wire {
        src: usize,
        dst: usize,
        offset: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Ingest { .. } => 3,
            Error::Wire { .. } => 4,
            Error::Io { .. } => 5,
            Error::Internal(_) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
