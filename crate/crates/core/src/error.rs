use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("notebook: {0}")]
    Notebook(String),

    #[error("schema: duplicate attribute {0:?}")]
    DuplicateAttribute(String),

    #[error("schema: {0}")]
    Schema(String),

    #[error("rules line {line}: {message}")]
    Rules { line: usize, message: String },

    #[error("empty cohort")]
    EmptyCohort,

    #[error("no runs")]
    NoRuns,

    #[error("nothing to plot")]
    NothingToPlot,

    #[error("invalid log: {0}")]
    InvalidLog(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("serialization: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure comes from the environment (missing or
    /// unreadable files) rather than from the content of the data.
    pub fn is_environmental(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
