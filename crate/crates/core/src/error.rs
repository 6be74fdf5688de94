use thiserror::Error;

/// Errors shared across the engine.
///
/// The taxonomy separates three failure modes that callers must not
/// confuse: malformed input (`Parse`, `InvalidInput`), a search or
/// refinement that ran out of budget without reaching a verdict
/// (`Indeterminate`, `BudgetExceeded`, `IterationCap`), and a verifier
/// precondition that the supplied instance does not satisfy
/// (`HypothesisFailed`). A failed hypothesis is never reported as a
/// failed conclusion.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("indeterminate comparison at maximum precision: {0}")]
    Indeterminate(String),

    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("iteration cap reached in {context}; enclosure [{lower}, {upper}]")]
    IterationCap {
        context: String,
        lower: String,
        upper: String,
    },

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("no upper estimate witness: no k <= {k_max} certifies phi(k) < k")]
    NoUpperEstimateWitness { k_max: u64 },

    #[error("coordinate budget overflow: {0}")]
    OverflowBudget(String),

    #[error("series divergence guard: {0}")]
    DivergenceGuard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
