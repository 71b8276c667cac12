use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every message starts with the name of the violated condition so that CLI
/// users and bindings can match on it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ParseError: {path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("MissingPeriod: individual {id} has no row for t={t}")]
    MissingPeriod { id: String, t: usize },
    #[error("NonBinaryOutcome: individual {id} has y={value} at t={t}, expected 0 or 1")]
    NonBinaryOutcome { id: String, t: usize, value: String },
    #[error("RaggedPanel: {0}")]
    RaggedPanel(String),
    #[error("NonFiniteRegressor: individual {individual}, t={t}, column {column}")]
    NonFinite { individual: usize, t: usize, column: usize },
    #[error("PanelTooShort: t_max={t_max}, need at least {required}")]
    PanelTooShort { t_max: usize, required: usize },
    #[error("InvalidSpec: {0}")]
    InvalidSpec(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("NoSwitchers: no individual contributes to the beta objective")]
    NoSwitchers,
    #[error("NoGammaSwitchers: no individual contributes to the gamma objective")]
    NoGammaSwitchers,
    #[error("AllWeightsZero: every kernel weight vanished at h={h}; bandwidth too small")]
    AllWeightsZero { h: f64 },
    #[error("ResampleDegenerate: {missing} of {draws} bootstrap draws had no switchers (limit 10%)")]
    ResampleDegenerate { missing: usize, draws: usize },
    #[error("TooManyFailures: {failed} of {total} replications failed (limit 5%); first: {first}")]
    TooManyFailures { failed: usize, total: usize, first: String },
    #[error("InsufficientMass: only {count} conditioning observations (need {required})")]
    InsufficientMass { count: usize, required: usize },
    #[error("EmptySample: quantile of an empty sample")]
    EmptySample,
    #[error("Io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse classes used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidConfig(_) => ErrorClass::Usage,
            Error::Parse { .. }
            | Error::MissingPeriod { .. }
            | Error::NonBinaryOutcome { .. }
            | Error::RaggedPanel(_)
            | Error::NonFinite { .. }
            | Error::PanelTooShort { .. }
            | Error::InvalidSpec(_)
            | Error::Io { .. } => ErrorClass::Data,
            Error::NoSwitchers
            | Error::NoGammaSwitchers
            | Error::AllWeightsZero { .. }
            | Error::ResampleDegenerate { .. }
            | Error::TooManyFailures { .. }
            | Error::InsufficientMass { .. }
            | Error::EmptySample => ErrorClass::Numerical,
        }
    }
}
