use thiserror::Error;

/// Every failure the toolkit reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Coiflet spec: {0}")]
    InvalidSpec(String),
    #[error("no real filter solution found for N={n}, M1={m1}")]
    UnsupportedSpec { n: usize, m1: usize },
    #[error("iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("eigenspace for eigenvalue {eigenvalue:e} is not one-dimensional (second singular value {gap:e})")]
    DegenerateEigenspace { eigenvalue: f64, gap: f64 },
    #[error("{eigenvalue:e} is not an eigenvalue (residual {residual:e})")]
    NotAnEigenvalue { eigenvalue: f64, residual: f64 },
    #[error("matrix is singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("composite Simpson rule needs an odd sample count >= 3, got {0}")]
    BadSampleCount(usize),
    #[error("resolution too low: {0}")]
    ResolutionTooLow(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no derivative seeds available and numeric fallback disabled")]
    MissingSeeds,
    #[error("Newton iteration diverged at step {step} (residual {residual:e})")]
    NewtonDivergence { step: usize, residual: f64 },
    #[error("Newton matrix singular at step {step}")]
    SingularIteration { step: usize },
    #[error("right-hand side not evaluable at t={t} (declared domain starts at {t_min})")]
    OutsideDomain { t: f64, t_min: f64 },
    #[error("polynomial root finding failed (residual {residual:e})")]
    RootfindingFailure { residual: f64 },
    #[error("quadrature not converged: max entry change {change:e} exceeds {tolerance:e}")]
    QuadratureNotConverged { change: f64, tolerance: f64 },
    #[error("unsupported boundary condition: {0}")]
    UnsupportedBc(String),
    #[error("elliptic modulus {0} outside [0, 1)")]
    ModulusOutOfRange(f64),
    #[error("series did not converge: {0}")]
    SeriesNotConverged(String),
    #[error("unknown benchmark '{0}'")]
    UnknownBenchmark(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
