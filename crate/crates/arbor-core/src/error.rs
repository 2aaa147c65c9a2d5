use thiserror::Error;

pub type Result<T> = std::result::Result<T, ArborError>;

#[derive(Debug, Error)]
pub enum ArborError {
    /// A caller violated a documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An enumeration would exceed the configured element budget.
    #[error("enumeration budget exceeded: {requested} elements, budget {budget}")]
    Budget { requested: u128, budget: u128 },

    /// A series or kernel diverges for the requested parameter.
    #[error("divergent for parameter {param}: {what}")]
    Divergent { param: f64, what: String },

    /// The requested object only exists on part of the parameter range.
    #[error("parameter {param} outside domain: {what}")]
    Domain { param: f64, what: String },

    /// An iterative refinement failed to meet its tolerance within budget.
    /// Carries the magnitudes of the last two iterates.
    #[error("no convergence after {steps} refinements: iterates {previous} -> {last} (tol {tol:.3e})")]
    NoConvergence { steps: usize, previous: f64, last: f64, tol: f64 },

    /// A cached artifact exists but fails validation.
    #[error("cache entry invalid: {0}")]
    CacheInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ArborError {
    pub fn pre(msg: impl Into<String>) -> Self {
        ArborError::Precondition(msg.into())
    }
}
