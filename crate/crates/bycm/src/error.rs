use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller passed arguments that violate an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An experiment or codec configuration cannot be used as given.
    #[error("configuration error: {0}")]
    Config(String),

    /// A constrained optimization has no feasible point.
    #[error("infeasible: {reason} (best achievable: {best_achievable})")]
    Infeasible { reason: String, best_achievable: f64 },

    /// A computation would exceed an explicit size cap.
    #[error("capacity exceeded: {what} needs {needed}, cap is {cap}")]
    Capacity { what: String, needed: f64, cap: f64 },

    /// A structural precondition (typically a Markov condition) does not hold.
    #[error("precondition violated: {what} (violation {violation:.3e} > tolerance {tolerance:.1e})")]
    Precondition {
        what: String,
        violation: f64,
        tolerance: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
