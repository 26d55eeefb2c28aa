use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("input {input:?} lies outside the admissible input box")]
    InputOutOfDomain { input: Vec<f64> },

    #[error("degenerate sample: r(x', 2) = {r2} is not above r(x', 1) = {r1}")]
    DegenerateSample { r1: f64, r2: f64 },

    #[error("infeasible interval row: sum of lower bounds {lower_sum}, sum of upper bounds {upper_sum}")]
    InfeasibleRow { lower_sum: f64, upper_sum: f64 },

    #[error("no enabled action for state {state}")]
    PolicyUndefined { state: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
