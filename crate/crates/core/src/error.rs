use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("population is empty")]
    EmptyPopulation,

    #[error("route catalog is empty")]
    EmptyCatalog,

    #[error("invalid coordinate `{token}`: {reason}")]
    Coordinate { token: String, reason: String },

    #[error("invalid route `{id}`: {reason}")]
    InvalidRoute { id: String, reason: String },

    #[error("unknown user id {0}")]
    UnknownUser(u32),

    #[error("unknown route id `{0}`")]
    UnknownRoute(String),

    #[error("row length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("{path}:{line}: column `{column}`: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        column: String,
        reason: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("hold-out split infeasible: {0}")]
    InfeasibleSplit(String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl Into<PathBuf>,
        line: u64,
        column: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            column: column.into(),
            reason: reason.into(),
        }
    }
}
