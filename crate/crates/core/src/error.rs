use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}` = {value}: {reason}")]
    InvalidParameter {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("excitation number {n} outside the retained ladder 1..={n_max}")]
    ExcitationOutOfRange { n: usize, n_max: usize },

    #[error("unsupported request: {0}")]
    Unsupported(String),

    /// The mean field (or photon number) used as a normalization vanishes.
    /// The unnormalized numerator is kept so callers can still plot it.
    #[error("normalization undefined: {what} = {value:e}")]
    NormalizationUndefined {
        what: &'static str,
        value: f64,
        tau: Vec<f64>,
        numerator: Vec<f64>,
    },

    #[error("step size too large: {0}")]
    StepTooLarge(String),

    #[error("integration fault at t = {t}: {reason}")]
    IntegrationFault { t: f64, reason: String },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("no APD starts were accumulated")]
    ZeroStarts,

    #[error("analysis window [{start}, {end}] falls outside the record [{record_start}, {record_end}]")]
    WindowClipped {
        start: f64,
        end: f64,
        record_start: f64,
        record_end: f64,
    },

    #[error("empty series")]
    EmptySeries,

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed artifact: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
