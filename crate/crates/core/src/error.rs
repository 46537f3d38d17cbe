use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    #[error("time {t} is outside the kernel domain (t >= 0)")]
    Domain { t: f64 },

    #[error("time {t} lies beyond the sampled span [0, {end}]")]
    Extrapolation { t: f64, end: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular step: |c + dt/2 k(0)| = {0:e} is below round-off")]
    SingularStep(f64),

    #[error("ill-posed reduction: {0}")]
    IllPosedReduction(String),

    #[error("unstable time step: {0}")]
    Unstable(String),

    #[error("step restriction violated: dt = {dt:e} exceeds dx/sqrt(a(0)) = {limit:e}; use dt <= {limit:e}")]
    StepRestriction { dt: f64, limit: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("identity convention rejected: closure residual {residual:e} exceeds {threshold:e} ({identity})")]
    Convention {
        identity: String,
        residual: f64,
        threshold: f64,
    },

    #[error("pipeline order: {0}")]
    PipelineOrder(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
