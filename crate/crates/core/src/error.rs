use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates its documented precondition.
    #[error("configuration error: {0}")]
    Config(String),

    /// An exact-enumeration routine was asked for more edges than its limit.
    #[error("graph too large for exact enumeration: {edges} edges, limit {limit}")]
    TooLarge { edges: usize, limit: usize },

    /// A step law failed validation.
    #[error("invalid step law: {0}")]
    StepLaw(String),

    /// Degenerate input for which the requested quantity is undefined.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A DP height window would exceed the memory budget.
    #[error("DP window overflow: required {required} cells, budget {budget}")]
    WindowOverflow { required: usize, budget: usize },

    /// An iterative solve did not reach the requested tolerance.
    #[error("no convergence: {what} (achieved {achieved:e})")]
    NoConvergence { what: &'static str, achieved: f64 },

    /// Conditioning on an event of probability zero.
    #[error("conditioning event has probability zero: {0}")]
    ZeroProbability(String),

    /// Violated internal invariant; indicates a bug, not a sampling fluke.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
