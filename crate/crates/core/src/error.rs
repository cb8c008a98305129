use thiserror::Error;

/// Errors raised across the library. Variants marked fatal indicate a bug
/// in the combinatorial engine rather than bad input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("characteristics in a triple must be pairwise distinct")]
    NonDistinct,

    #[error("expected {expected} characteristics, got {got}")]
    WrongCount { expected: usize, got: usize },

    #[error("backtracking search found no fundamental system (fatal)")]
    SearchFailed,

    #[error("pencil representatives do not cover the even characteristics (fatal)")]
    CoverageFailure,

    #[error("no four-element subset with product {a} in the system with odd sum {k}")]
    NoDecomposition { a: String, k: String },

    #[error("invalid characteristic {0:?}")]
    InvalidCharacteristic(String),

    #[error("imaginary part not positive definite")]
    NotPositiveDefinite,

    #[error("C*tau + D is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("matrix is not symplectic")]
    NotSymplectic,

    #[error("evaluation point lies too close to a pole")]
    NearPole,

    #[error("characteristic {0} is not admissible here")]
    BadCharacteristic(String),

    #[error("no vanishing even theta constant")]
    NoVanishingNull,

    #[error("several even theta constants vanish: {0:?}")]
    Ambiguous(Vec<String>),

    #[error("Newton iteration did not converge after {0} steps")]
    NoConvergence(usize),

    #[error("no step keeps the imaginary part positive definite")]
    LostPositivity,

    #[error("period matrix is not on the hyperelliptic locus")]
    NotHyperelliptic,

    #[error("integrand requires a Frobenius context")]
    MissingContext,

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
