use thiserror::Error;

/// Errors produced anywhere in the inference pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("trajectory diverged at stage {stage} (t = {t})")]
    Diverged { stage: usize, t: f64 },

    #[error("{what} = {value} is outside the domain [0, 1]")]
    OutOfDomain { what: String, value: f64 },

    #[error("parameter {theta:?} lies outside the parameter box")]
    ThetaOutsideBox { theta: Vec<f64> },

    #[error("derivative of order {requested} requested but the basis supports at most {max}")]
    UnsupportedDerivative { requested: usize, max: usize },

    #[error("design matrix is singular: {0}")]
    SingularDesign(String),

    #[error("optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("sensitivity matrix is rank deficient")]
    RankDeficient,

    #[error("{discarded} of {total} draws were discarded after optimizer failures")]
    TooManyDiscards { discarded: usize, total: usize },

    #[error("{failed} of {total} replications failed for {method}")]
    StudyFailed {
        method: String,
        failed: usize,
        total: usize,
    },

    #[error("unknown model `{0}` (expected vdp, harmonic, null-q<k> or glucose)")]
    UnknownModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
