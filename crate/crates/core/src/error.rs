use thiserror::Error;

/// Errors reported by the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported center dimension {0} (only l = 1 and l = 3 are implemented)")]
    UnsupportedCenterDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{what} must be a unit vector (norm {norm})")]
    NotUnit { what: &'static str, norm: f64 },
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("polynomial is not harmonic (|Δ P| = {0})")]
    NotHarmonic(f64),
    #[error("polynomial does not have bidegree ({p}, {upsilon}) under the complex structure")]
    WrongBidegree { p: usize, upsilon: usize },
    #[error("quadrature budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("rank deficiency in Gram-Schmidt (pivot {0:e})")]
    RankDeficient(f64),
    #[error("pole: sin(λ t) vanishes for λ = {lambda}, t = {t}")]
    Pole { lambda: f64, t: f64 },
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("zonal closed form for a = {0} is not available (recursion not published); use the eigen-sum")]
    ClosedFormUnavailable(usize),
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("contract violation: {0}")]
    ContractViolation(String),
    #[error("Gram matrix conditioning failure (deviation {0:e})")]
    GramConditioning(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
