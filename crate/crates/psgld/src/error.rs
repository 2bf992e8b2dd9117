use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] psgld_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Format(String),

    #[error("config field `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error("dataset `{name}` not found (looked in {looked})")]
    MissingDataset { name: String, looked: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// 2 for configuration problems, 1 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Core(psgld_core::Error::InvalidParameter { .. } | psgld_core::Error::Unsupported(_)) => 2,
            _ => 1,
        }
    }
}
