//! Error type shared by all modules.

/// Errors surfaced by construction and evaluation routines.
///
/// Numerical degeneracies (singular covariance, vanishing variance,
/// vanishing denominators) are reported with the offending permutation
/// index so callers can point at the data problem.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("the zero polynomial has no root set")]
    ZeroPolynomial,

    #[error("matrix dimension {k} exceeds the cofactor-expansion cap of {cap}")]
    DimensionCap { k: usize, cap: usize },

    #[error("polynomial matrix must be non-empty and square")]
    EmptyMatrix,

    #[error("block-swap permutations require equal block sizes, got {sizes:?}")]
    UnequalBlocks { sizes: Vec<usize> },

    #[error("index set {{0..{n}}} is not exactly partitioned by the given blocks")]
    InvalidBlocks { n: usize },

    #[error("degenerate variance estimate for permutation {g} (sigma_hat ~ {sigma:.3e})")]
    DegenerateVariance { g: usize, sigma: f64 },

    #[error("covariance matrix is singular at beta = 0 for permutation {g}")]
    SingularAtZero { g: usize },

    #[error("constant covariance matrix is singular for permutation {g}")]
    SingularSigma { g: usize },

    #[error("regressor cross-moment matrix is singular")]
    SingularXX,

    #[error("statistic denominator vanishes at beta = {beta:.6e} for permutation {g}")]
    DenominatorZero { g: usize, beta: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("side {side} is not defined for {family} statistics")]
    UnsupportedSide { side: String, family: String },
}

pub type Result<T> = std::result::Result<T, Error>;
