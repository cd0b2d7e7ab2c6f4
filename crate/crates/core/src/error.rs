use std::path::PathBuf;

use thiserror::Error;

use crate::model::Timestamp;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate variable name in schema: {0}")]
    DuplicateVariable(String),

    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(Timestamp),

    #[error("value for undeclared variable `{variable}` at timestamp {timestamp}")]
    UndeclaredVariable { variable: String, timestamp: Timestamp },

    #[error("variable `{variable}` has the wrong kind for this operation")]
    WrongKind { variable: String },

    #[error("coordinate out of range at timestamp {timestamp}: {variable} = {value}")]
    CoordinateOutOfRange {
        timestamp: Timestamp,
        variable: String,
        value: f64,
    },

    #[error("invalid variable spec `{0}`: valid_min must be below valid_max")]
    InvalidBounds(String),

    #[error("missing required variable `{0}`")]
    MissingVariable(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error in {path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("grid shape error: {0}")]
    GridShape(String),

    #[error("column `{column}` has {bad} of {total} unparseable cells")]
    TooManyUnparseable {
        column: String,
        bad: usize,
        total: usize,
    },

    #[error("unknown ship type `{given}`; accepted types: {accepted}")]
    UnknownShipType { given: String, accepted: String },

    #[error("state variable `{0}` is absent or too sparse; use the threshold method instead")]
    StateVariableUnavailable(String),

    #[error("draft change events overlap: [{0}, {1}] and [{2}, {3}]")]
    OverlappingEvents(Timestamp, Timestamp, Timestamp, Timestamp),

    #[error("insufficient samples: need {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("feature `{0}` has zero variance and cannot be standardized")]
    ZeroVariance(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
