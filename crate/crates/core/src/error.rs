use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema violation at row {row}, column `{column}`: {message}")]
    Schema {
        row: usize,
        column: String,
        message: String,
    },

    #[error("malformed date `{value}` at row {row}")]
    MalformedDate { row: usize, value: String },

    #[error("unknown station id `{0}`")]
    UnknownStation(String),

    #[error("duplicate station id `{0}`")]
    DuplicateStation(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: &'static str,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no station reports the variable on day {day}")]
    NoReportingStation { day: i64 },

    #[error("intensity is zero at event {index}")]
    ZeroIntensity { index: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("query ({t}, {x}, {y}) lies outside the study domain")]
    OutOfDomain { t: f64, x: f64, y: f64 },

    #[error("intensity {rate} at ({t}, {x}, {y}) exceeds the dominating rate {bound}")]
    RateBoundExceeded {
        t: f64,
        x: f64,
        y: f64,
        rate: f64,
        bound: f64,
    },

    #[error("no positive cells: the catalog has no events on the alarm grid")]
    NoPositiveCells,

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(name: impl Into<String>, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            value,
            reason,
        }
    }
}
