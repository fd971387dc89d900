use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("profile must contain at least one mode")]
    EmptyProfile,

    #[error("invalid weight at mode {index}: {reason}")]
    InvalidWeight { index: usize, reason: String },

    #[error("profile is not normalized: weights sum to {sum}")]
    NotNormalized { sum: String },

    #[error("a_over_L must be positive and finite, got {0}")]
    InvalidExtent(f64),

    #[error("exchange order must be at least 1")]
    InvalidOrder,

    #[error("quadrature for n = {n} did not converge: estimated relative error {estimate:e} exceeds {tolerance:e}")]
    QuadratureNotConverged { n: u32, estimate: f64, tolerance: f64 },

    #[error("exchange table holds lambda_1..lambda_{available}, lambda_{required} is needed")]
    MissingLambdas { required: usize, available: usize },

    #[error("lambda_1 must equal 1, got {0}")]
    LambdaOneNotUnity(String),

    #[error("F_{n} = {value:e} is negative beyond its error bound {bound:e}")]
    NegativeNorm { n: usize, value: f64, bound: f64 },

    #[error("F_(N+1) > F_N at N = {n} for a profile-derived table")]
    NonMonotoneNorm { n: usize },

    #[error("N = {0} is Pauli-blocked (F_N = 0)")]
    Blocked(usize),

    #[error("N = {requested} is past the reliable float range (last reliable N: {})", last_reliable.map_or("none".to_string(), |n| n.to_string()))]
    PrecisionDomain { requested: usize, last_reliable: Option<usize> },

    #[error("N = {requested} needs F up to index {needed}, table stops at {available}")]
    OutOfTable { requested: usize, needed: usize, available: usize },

    #[error("{quantity} requires N >= {min}, got N = {n}")]
    ParticleCount { quantity: &'static str, min: usize, n: usize },

    #[error("vanishing denominator in {0}")]
    VanishingDenominator(&'static str),

    #[error("unknown approximation variant '{0}'")]
    UnknownVariant(String),

    #[error("oracle accepts at most {limit} modes and N <= M, got M = {modes}, N = {n}")]
    OracleLimit { limit: usize, modes: usize, n: usize },

    #[error("result would be irrational: {0}")]
    Irrational(String),

    #[error("oracle routes disagree for {0}")]
    OracleMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
