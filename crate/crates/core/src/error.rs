use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid mode list: {0}")]
    InvalidModes(String),

    #[error("unfolding requires >=2 modes, tensor has {0}")]
    TooFewModes(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible starting point: ||X^T X - I||_max = {0:e}")]
    Infeasible(f64),

    #[error("non-finite {what} at iterate {iterate}")]
    NonFinite { what: &'static str, iterate: usize },

    #[error("gradient audit failed: relative error {0:e} exceeds tolerance")]
    GradientAudit(f64),

    #[error(
        "TN memory budget exceeded: core {core} needs ~{required} bytes, budget is {budget} bytes; use the ATN variant"
    )]
    MemoryBudget {
        core: usize,
        required: u128,
        budget: u128,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("model format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
