use thiserror::Error;

use crate::model::ValidationReport;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("index out of range: {what} = {index} (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("contract {contract} does not select exactly one discount level")]
    MalformedDiscountRow { contract: usize },

    #[error("recommended contract {contract} has negative preference weight for group {group}")]
    NegativeWeightRecommended { contract: usize, group: usize },

    #[error("decision is infeasible: {0}")]
    Infeasible(ValidationReport),

    #[error("assignment is infeasible for the program: {0}")]
    InfeasibleAssignment(String),

    #[error("no feasible solution: {0}")]
    NoFeasibleSolution(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("search space too large: {0}")]
    TooLarge(String),

    #[error("budget must be positive")]
    ZeroBudget,

    #[error("division by zero in metric `{0}`")]
    ZeroDenominator(&'static str),

    #[error("schema mismatch: expected `{expected}`, found `{found}`")]
    Schema { expected: String, found: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable kind, used by the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInstance(_) => "invalid-instance",
            Error::InvalidScenario(_) => "invalid-scenario",
            Error::InvalidConfig(_) => "invalid-config",
            Error::IndexOutOfRange { .. } => "index-out-of-range",
            Error::MalformedDiscountRow { .. } => "malformed-discount-row",
            Error::NegativeWeightRecommended { .. } => "negative-weight-recommended",
            Error::Infeasible(_) => "infeasible",
            Error::InfeasibleAssignment(_) => "infeasible-assignment",
            Error::NoFeasibleSolution(_) => "no-feasible-solution",
            Error::Generation(_) => "generation-failure",
            Error::TooLarge(_) => "too-large",
            Error::ZeroBudget => "zero-budget",
            Error::ZeroDenominator(_) => "zero-denominator",
            Error::Schema { .. } => "schema",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
