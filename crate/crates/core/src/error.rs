use thiserror::Error;

/// Errors raised by the numerical kernels and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: kernel has N={kernel}, grid has N={grid}")]
    DimensionMismatch { kernel: usize, grid: usize },

    #[error("grid functions live on different grids")]
    GridMismatch,

    #[error("budget exceeded: {what} needs {needed}, limit is {limit}")]
    BudgetExceeded {
        what: &'static str,
        needed: usize,
        limit: usize,
    },

    #[error("index {index} out of range for {len} grid points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate constraint: {0}")]
    DegenerateConstraint(String),

    #[error("empty constraint set: {0}")]
    EmptyConstraintSet(String),

    #[error("step rule failure at iteration {iteration}: no Armijo step found")]
    StepRuleFailure { iteration: usize },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("weight not admissible: {0}")]
    NotAdmissible(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("nonpositive value: {0}")]
    NonPositive(String),

    #[error("singular point: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
