use thiserror::Error;

/// Unified error type for the toolkit.
#[derive(Debug, Error)]
pub enum OstError {
    #[error("grid size {0} is not a power of two (>= 64)")]
    NonPowerOfTwo(usize),
    #[error("half-length must be positive and finite, got {0}")]
    NonPositiveLength(f64),
    #[error("operation requires a zero-mean field (|mean| = {0:.3e})")]
    NonZeroMean(f64),
    #[error("omega = {0} outside the admissible range (omega < 2)")]
    OmegaOutOfRange(f64),
    #[error("grid mismatch: ({0}, {1}) vs ({2}, {3})")]
    GridMismatch(f64, usize, f64, usize),
    #[error("{0}")]
    OutOfRange(String),
    #[error("profile not converged: {0}")]
    NotConverged(String),
    #[error("solver did not reach tolerance: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),
    #[error("decay-fit window [{0:.2}, {1:.2}] is empty or too short")]
    WindowTooSmall(f64, f64),
    #[error("decay-fit window signal below noise floor: {0}")]
    WindowTooNoisy(String),
    #[error("LAPACK eigensolver failed: routine {routine} info {info}")]
    EigenFailure { routine: &'static str, info: i32 },
    #[error("wave overlaps the numerical kernel (overlap {0:.3e}); VK solve refused")]
    KernelContamination(f64),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("solution amplitude exceeded the blow-up guard at t = {0}")]
    BlowupDetected(f64),
    #[error("perturbation amplitude {0} outside (0, 0.1]")]
    BadDelta(f64),
    #[error("subinterval count N = {0} must be an integer >= 2")]
    BadN(i64),
    #[error("sampling step epsilon = {0} must be positive and finite")]
    BadEpsilon(f64),
    #[error("need at least {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, OstError>;
