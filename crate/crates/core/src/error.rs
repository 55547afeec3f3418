use thiserror::Error;

/// Errors raised by the homogenization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("point {point:?} lies outside the domain")]
    OutsideDomain { point: [f64; 3] },

    #[error("point {point:?} is not contained in any covering cube")]
    NotCovered { point: [f64; 3] },

    #[error("singular transformation at {point:?}: |det| = {det:e}")]
    SingularTransform { point: [f64; 3], det: f64 },

    #[error("invalid stiffness tensor: {0}")]
    InvalidTensor(String),

    #[error("under-resolved: {what}; need at least {required} (got {actual})")]
    UnderResolved {
        what: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("indefinite system: p^T K p = {curvature:e} at iteration {iteration}")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("tensor symmetry defect {defect:e} exceeds {tolerance:e} ({which})")]
    SymmetryDefect {
        which: &'static str,
        defect: f64,
        tolerance: f64,
    },

    #[error("homogenized tensor field covers x3 in [{lo}, {hi}] but {x3} was requested")]
    RangeMismatch { lo: f64, hi: f64, x3: f64 },

    #[error("missing {0}")]
    Missing(&'static str),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
