//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, MagError>;

#[derive(Debug, Clone, Error)]
pub enum MagError {
    /// A base point left the open unit disk (or came numerically too close
    /// to the boundary to be trusted).
    #[error("point ({x}, {y}) is outside the open unit disk")]
    OutsideDisk { x: f64, y: f64 },

    /// Fundamental-domain reduction did not reach the octagon within the
    /// configured word-length budget.
    #[error("fundamental-domain reduction failed after {steps} steps (|z| = {radius})")]
    ReductionOutOfReach { steps: usize, radius: f64 },

    /// Adaptive step-size underflow or non-finite state during integration.
    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// Linearized flow grew beyond what double precision can represent
    /// faithfully; retry with a smaller horizon.
    #[error("linearization overflow at t = {t} (norm {norm:.3e}); use a smaller horizon")]
    LinearizationOverflow { t: f64, norm: f64 },

    /// An iteration (slope limit, Newton, solver) failed to converge.
    /// `last` and `previous` carry the last two iterates for diagnosis.
    #[error("{what} did not converge: last = {last:.6e}, previous = {previous:.6e}")]
    NonConvergence {
        what: String,
        last: f64,
        previous: f64,
    },

    /// A hyperbolicity fit produced rates on the wrong side of 1.
    #[error("hyperbolicity violated: fitted rates rho = {rho}, eta = {eta}")]
    HyperbolicityViolation { rho: f64, eta: f64 },

    /// Adapted-chart construction left its coordinate patch.
    #[error("adapted chart left its patch (radius {radius}); shrink epsilon")]
    ChartPatch { radius: f64 },

    /// The orbit never met the target transversal within the time cap.
    #[error("no transversal intersection within |t| <= {cap}")]
    ChartMismatch { cap: f64 },

    /// A finite-difference sample whose noise estimate exceeds its value.
    #[error("unreliable sample: value {value:.3e} vs error estimate {error:.3e}")]
    UnreliableSample { value: f64, error: f64 },

    /// A run was refused because a hypothesis margin is violated. The
    /// message names the failed inequality.
    #[error("hypothesis violated: {inequality} (margin {margin:.6e})")]
    HypothesisViolated { inequality: String, margin: f64 },

    /// Iterative least-squares solver stagnated before reaching tolerance.
    #[error("solver stagnated after {iterations} iterations at residual {residual:.3e}")]
    SolverStagnation {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    /// Bad configuration values.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
