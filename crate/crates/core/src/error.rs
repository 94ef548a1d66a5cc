use thiserror::Error;

/// Every failure the library reports. Numerical breakdowns (singular
/// matrices, lost admissibility) are distinguished from usage errors so the
/// CLI can map them to separate exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolgasError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("spectral parameters not pairwise distinct: |eta[{i}] - eta[{j}]| < {tol:e}")]
    Distinctness { i: usize, j: usize, tol: f64 },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("degenerate weight u[{index}] = {value:e}")]
    DegenerateWeight { index: usize, value: f64 },
    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),
    #[error("cross-check failed: {0}")]
    CrossCheck(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("need at least {required} samples, got {got}")]
    InsufficientSamples { required: usize, got: usize },
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("closed-form branch unavailable: {0}")]
    Branch(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("CFL violation: dt = {dt:e} exceeds {limit:e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("admissibility lost at cell {cell}, t = {time}: {reason}")]
    AdmissibilityBreakdown {
        cell: usize,
        time: f64,
        reason: String,
    },
    #[error("shock detected at t = {time}")]
    ShockDetected { time: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl SolgasError {
    /// True for failures caused by the numerical state rather than by the input.
    pub fn is_numerical_breakdown(&self) -> bool {
        matches!(
            self,
            SolgasError::Singular(_)
                | SolgasError::AdmissibilityBreakdown { .. }
                | SolgasError::DegenerateWeight { .. }
                | SolgasError::DegenerateMetric(_)
                | SolgasError::Numerical(_)
        )
    }
}

pub type Result<T, E = SolgasError> = std::result::Result<T, E>;
