use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the kernel.
///
/// Variants carry the witness data that made a check fail, so reports can
/// point at the offending sample point or period vector.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("not a unit: constant term vanishes near u = {witness}")]
    NotAUnit { witness: Complex64 },

    #[error("quadrature did not converge after {points} points (last change {last_change:e})")]
    QuadratureFailure { points: usize, last_change: f64 },

    #[error("form is not contact: |coefficient| = {value:e} at {witness}")]
    NotContact { witness: String, value: f64 },

    #[error("zero section is not isotropic: theta coefficient {value:e}")]
    NotIsotropic { value: f64 },

    #[error("matrix is rank deficient at {witness} (smallest singular value {sigma:e})")]
    RankDeficient { witness: Complex64, sigma: f64 },

    #[error("exact frame completion failed: {0}; retry in numeric mode")]
    ExactGcdFailure(String),

    #[error("contact violation during reduction stage {stage}: {detail}")]
    ContactViolation { stage: usize, detail: String },

    #[error("flow leaves the domain at u = {witness}")]
    FlowEscape { witness: Complex64 },

    #[error("nonzero periods {periods:?}")]
    PeriodObstruction { periods: Vec<Complex64> },

    #[error("dilation parameter must be nonzero")]
    DegenerateDilation,

    #[error("flow integration diverged at step {step}")]
    FlowDiverged { step: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),

    #[error("control synthesis failed: condition ({condition}) {detail}")]
    ControlSynthesisFailure { condition: &'static str, detail: String },

    #[error("period solve failed after {iterations} iterations (|P| = {residual:e})")]
    PeriodSolveFailure { iterations: usize, residual: f64 },

    #[error("spray differential is singular (|det| = {det:e})")]
    SubmersivityFailure { det: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("scene error: {0}")]
    Scene(String),
}

pub type Result<T> = std::result::Result<T, Error>;
