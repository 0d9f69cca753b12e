use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative probability mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },
    #[error("probability vector has zero total mass")]
    ZeroTotalMass,
    #[error("non-finite probability mass at index {index}")]
    NonFiniteMass { index: usize },
    #[error("alphabet size mismatch: {left} vs {right}")]
    AlphabetMismatch { left: usize, right: usize },
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("probability mass must be strictly positive, got {0}")]
    DegenerateMass(f64),
    #[error("active draft count {active} exceeds total draft count {total}")]
    InvalidActiveCount { active: usize, total: usize },
    #[error("inconsistent model: {0}")]
    InconsistentModel(String),
    #[error("language model has no row for context {0:?}")]
    MissingContextRow(Vec<usize>),
    #[error("enumeration of {0} sequences exceeds the limit")]
    TooLarge(u128),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("no candidate index carries the received message")]
    NoCandidate,
    #[error("all importance weights are zero")]
    AllZeroWeights,
    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
