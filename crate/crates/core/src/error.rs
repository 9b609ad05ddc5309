use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coupling kappa must be nonzero (beta = gamma / 2 kappa is undefined)")]
    ZeroCoupling,

    #[error("parameter `{name}` = {value} is outside the weak-coupling range |{name}| < {limit}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("inconsistent parameters: {0}")]
    InconsistentParameters(String),

    #[error("negative radicand {value:e} while evaluating {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("time step dt = {dt} must be positive and at most {max} (40 steps per modulation period)")]
    StepSize { dt: f64, max: f64 },

    #[error("integration diverged at t = {t}: matrix entry {value:e} exceeds 1e12")]
    Divergence { t: f64, value: f64 },

    #[error("sample spacing {spacing} is too coarse for second differences (need <= {max})")]
    InsufficientSampling { spacing: f64, max: f64 },

    #[error("mode index {0} is invalid (expected 1 or 2)")]
    ModeIndex(usize),

    #[error("mean quantum number {0:e} is negative beyond round-off")]
    NegativeMeanQuanta(f64),

    #[error("inconsistent moments: D = {iup} exceeds (n + 1/2)^2 for n = {n_mean}")]
    InconsistentMoments { n_mean: f64, iup: f64 },

    #[error("invalid uncertainty product D = {0} (must be >= 1/4)")]
    InvalidUncertainty(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
