//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by probability validation, linear algebra, the LP solver
/// and the designers. Payloads are `f64` regardless of the working scalar.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probability vector does not sum to 1 (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("negative probability mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("column {col} of conditional matrix sums to {sum}, not 1")]
    NotStochastic { col: usize, sum: f64 },

    #[error("marginal P_X({index}) = 0; chi-square and diagonal scalings are undefined")]
    ZeroMarginal { index: usize },

    #[error("mixture constraint violated at coordinate {index} (residual {residual})")]
    MixtureMismatch { index: usize, residual: f64 },

    #[error("P_Y({index}) = 0 but letters route mass through it")]
    ZeroSupport { index: usize },

    #[error("perturbation for letter {letter} exceeds its budget: norm {norm} > {bound}")]
    BudgetExceeded {
        letter: usize,
        norm: f64,
        bound: f64,
    },

    #[error("leakage budgets must be non-increasing")]
    UnsortedBudgets,

    #[error("at least two disclosed letters are required (K >= 2)")]
    SingleLetter,

    #[error("KL divergence undefined: p({index}) > 0 where q({index}) = 0")]
    SupportViolation { index: usize },

    #[error("chi-square reference distribution has q({index}) = 0")]
    ZeroReference { index: usize },

    #[error("SVD did not converge after {sweeps} Jacobi sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is numerically singular (sigma_min/sigma_max = {cond:e})")]
    Singular { cond: f64 },

    #[error("matrix rank {rank} is below the required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("simplex exceeded the iteration cap ({iterations} iterations)")]
    MaxIterations { iterations: usize },

    #[error("budget too large: constructed conditional has entry {entry} < 0 for letter {letter}")]
    EpsilonTooLarge { letter: usize, entry: f64 },

    #[error("letter {letter} leaks {realized} which exceeds its budget {budget}")]
    LeakageViolated {
        letter: usize,
        realized: f64,
        budget: f64,
    },

    #[error("pseudo-inverse residual check failed for letter {letter} (residual {residual:e})")]
    ResidualCheckFailed { letter: usize, residual: f64 },

    #[error("no feasible extreme-point assignment: nonzero utility cannot be achieved")]
    NoFeasibleAssignment,

    #[error("no feasible filter found by the oracle")]
    NoFeasibleFilter,

    #[error("divergence {divergence} is not supported by mode {mode}")]
    UnsupportedMode {
        divergence: &'static str,
        mode: &'static str,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
