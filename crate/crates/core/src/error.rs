use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains no tokens")]
    EmptyInput,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no candidate answers")]
    NoCandidates,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// Short machine-readable category used on the command line error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EmptyInput",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Shape(_) => "ShapeError",
            Error::NoCandidates => "NoCandidates",
            Error::Io { .. } => "IOError",
            Error::Parse { .. } => "ParseError",
            Error::Config { .. } => "ConfigError",
            Error::Checkpoint(_) => "CheckpointError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
