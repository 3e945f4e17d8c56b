use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("symbol {kind} is not supported for the {family} family")]
    UnsupportedSymbol { kind: String, family: String },

    #[error("polynomial degree {degree} exceeds the maximum of {max}")]
    DegreeTooHigh { degree: usize, max: usize },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no turning point below q_max = {q_max} at energy {energy}")]
    Unbound { energy: f64, q_max: f64 },

    #[error("energy {energy} is below the potential minimum {minimum}")]
    BelowMinimum { energy: f64, minimum: f64 },

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("shooting seeds converged to {} distinct roots", roots.len())]
    BranchAmbiguity { roots: Vec<RootSummary> },

    #[error("phase continuation hit a near-zero sample at index {index}")]
    ZeroCrossing { index: usize },

    #[error("no real trajectory connects x' = {x_start} to x'' = {x_end} in the scanned momentum window")]
    NoRootTrajectory { x_start: f64, x_end: f64 },

    #[error("focal point: m_qp = {m_qp:e}")]
    FocalPoint { m_qp: f64 },

    #[error("potential does not confine at E_max = {e_max}")]
    NotConfining { e_max: f64 },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("no bracket for level m = {m}")]
    NoBracket { m: usize },

    #[error("stationary point at (q, p) = ({q}, {p})")]
    StationaryPoint { q: f64, p: f64 },

    #[error("degenerate stationary point: f''(x0) = {f2:e}")]
    DegenerateStationaryPoint { f2: f64 },

    #[error("x0 is not a stationary point: f'(x0) = {f1:e}")]
    NotStationary { f1: f64 },
}

/// One root of the complex boundary-value problem, reported on ambiguity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSummary {
    pub v_start: Complex64,
    pub action: Complex64,
}

pub type Result<T> = std::result::Result<T, Error>;
