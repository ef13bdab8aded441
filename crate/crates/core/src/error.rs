use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty set")]
    EmptySet,

    #[error("unbalanced: total supply {supply} != total demand {demand}")]
    Unbalanced { supply: f64, demand: f64 },

    #[error("negative or non-finite {what} at index {index}: {value}")]
    InvalidMass {
        what: &'static str,
        index: usize,
        value: f64,
    },

    #[error("invalid cost matrix: {0}")]
    InvalidCosts(String),

    #[error("infeasible constraint: {0}")]
    InfeasibleConstraint(String),

    #[error("oracle guard: {n} points exceeds the brute-force limit of {limit}")]
    OracleGuard { n: usize, limit: usize },

    #[error("non-integral quota {value} at cluster {cluster}, profile {profile}")]
    NonIntegral {
        cluster: usize,
        profile: usize,
        value: f64,
    },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-positive OPT estimate {0} for a set with nonzero spread")]
    NonPositiveOpt(f64),

    #[error("empty profile class {0}")]
    EmptyProfile(usize),

    #[error("no header")]
    NoHeader,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("column not found: {0}")]
    ColumnNotFound(String),

    #[error("no usable rows in {0}")]
    NoRows(PathBuf),

    #[error("all {0} trials had a zero objective on the full dataset")]
    AllTrialsDegenerate(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
