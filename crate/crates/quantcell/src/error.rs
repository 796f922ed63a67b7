//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("basis is ill-conditioned: condition estimate {cond:.3e} exceeds {limit:.1e}")]
    IllConditionedBasis { cond: f64, limit: f64 },

    #[error("basis matrix is singular")]
    SingularBasis,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input coordinate at index {index}")]
    NonFiniteInput { index: usize },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("gradient is undefined at the origin")]
    DegenerateAtOrigin,

    #[error("gradient vanishes; Gauss map is undefined")]
    DegenerateGradient,

    #[error("point is not on the unit level set: f(u) = {value:.12e}")]
    NotOnLevelSet { value: f64 },

    #[error(
        "strict convexity violated: midpoint of a sampled level-set pair reaches \
         f = {midpoint_value:.12} (margin {margin:.3e})"
    )]
    HypothesisViolation {
        margin: f64,
        midpoint_value: f64,
        witness: Box<(Vec<f64>, Vec<f64>)>,
    },

    #[error("this norm cannot be used as {role}: {reason}")]
    UnsupportedNorm { role: &'static str, reason: String },

    #[error("solver exceeded {max_iterations} iterations (residual {residual:.3e})")]
    MaxIterations { max_iterations: usize, residual: f64 },

    #[error("clamp fast path unavailable: {reason}")]
    FastPathUnavailable { reason: String },

    #[error("degenerate solve: objective gradient vanishes on active coordinate {index}")]
    DegenerateSolve { index: usize },

    #[error(
        "ambiguous face on coded coordinate {index}: |gradient component| = {gradient:.3e} \
         is below tolerance"
    )]
    AmbiguousFace { index: usize, gradient: f64 },

    #[error("inconsistent code: recovered free coordinate {index} lies on a cell edge")]
    InconsistentCode { index: usize },

    #[error("invalid code: {message}")]
    InvalidCode { message: String },

    #[error("dimension {dim} too large for vertex enumeration (limit {limit})")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error(
        "enumeration budget exceeded: {points} grid points (limit {limit}); \
         raise tau above roughly {suggested_tau_floor:.3e}"
    )]
    EnumerationBudgetExceeded {
        points: u128,
        limit: u64,
        suggested_tau_floor: f64,
    },

    #[error(
        "rejection acceptance rate {rate:.3e} is below 1e-4; use a coord-sup data norm \
         or reduce the dimension"
    )]
    AcceptanceTooLow { rate: f64 },

    #[error("insufficient data to fit K = {k}: {reason}")]
    InsufficientData { k: usize, reason: String },

    #[error("config error: {message}")]
    Config { message: String },

    #[error("internal consistency check failed: {message}")]
    Internal { message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
