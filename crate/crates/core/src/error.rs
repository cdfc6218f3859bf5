//! Crate-wide error type.

use crate::fit::FitReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("violation count {violations} exceeds sample count {samples}")]
    ViolationsExceedSamples { violations: u64, samples: u64 },

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("sample set must be non-empty")]
    EmptySampleSet,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("box spec has lower[{index}] = {lower} > upper[{index}] = {upper}")]
    InvalidBox {
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("integration diverged at t = {time}{}", sample.map(|i| format!(" (sample {i})")).unwrap_or_default())]
    IntegrationDiverged { time: f64, sample: Option<u64> },

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("basis count {basis_count} exceeds sample count {samples}")]
    TooManyBasisFunctions { basis_count: usize, samples: usize },

    #[error(
        "constrained fit did not reach feasibility: max violation {:.3e} after {} iterations",
        report.constraint_violation,
        report.iterations
    )]
    InfeasibleFit { report: FitReport },

    #[error(
        "tube fit infeasible at instant {instant} (t = {time}): max violation {:.3e}",
        report.constraint_violation
    )]
    InfeasibleTubeFit {
        instant: usize,
        time: f64,
        report: FitReport,
    },

    #[error("time grids do not match")]
    GridMismatch,

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("support-scenario refit failed for sample {index}: {source}")]
    SupportRefit {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Serialization(err.to_string())
    }
}
