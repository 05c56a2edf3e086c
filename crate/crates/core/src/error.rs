use thiserror::Error;

use crate::lp::LpError;

/// Errors produced by model validation, solvers, control rules and the
/// simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("non-stochastic row {row}, sum {sum:.6} (in {matrix})")]
    NonStochasticRow {
        matrix: &'static str,
        row: usize,
        sum: f64,
    },

    #[error("entry out of [0,1] in {matrix} at ({row},{col}): {value}")]
    EntryOutOfRange {
        matrix: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("alpha must lie strictly inside (0,1), got {0}")]
    AlphaOutOfRange(f64),

    #[error("non-finite reward in {vector} at index {index}")]
    NonFiniteReward { vector: &'static str, index: usize },

    #[error("vector does not lie on the simplex: component sum {sum}")]
    NotOnSimplex { sum: f64 },

    #[error("negative component {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("budget sum {sum} does not match alpha {alpha}")]
    BudgetMismatch { sum: f64, alpha: f64 },

    #[error("component {index} with value {value} is not on the 1/{n} grid")]
    NotOnGrid { index: usize, value: f64, n: u64 },

    #[error("infeasible (x,u) pair: {detail}")]
    InfeasibleControl { detail: String },

    #[error("alpha*N must be an integer: alpha {alpha}, N {n}")]
    AlphaTimesNNotIntegral { alpha: f64, n: u64 },

    #[error("missing key \"{0}\" in model description")]
    MissingKey(String),

    #[error("bad value for \"{key}\": {detail}")]
    BadValue { key: String, detail: String },

    #[error("model file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error("{context}: LP reported infeasible on inputs that must be feasible")]
    InternalInfeasible { context: &'static str },

    #[error("{context}: LP reported unbounded")]
    InternalUnbounded { context: &'static str },

    #[error("a reachability certificate is required but none was supplied")]
    MissingCertificate,

    #[error("at step {t}: {source}")]
    AtStep {
        t: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instance too large for exact enumeration: {0}")]
    InstanceTooLarge(String),
}

impl Error {
    /// Wraps an error with the trajectory/simulation step at which it occurred.
    pub fn at_step(t: usize, source: Error) -> Self {
        Error::AtStep {
            t,
            source: Box::new(source),
        }
    }
}
