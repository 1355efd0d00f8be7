use thiserror::Error;

/// Errors shared across the crate.
///
/// Exact computations refuse with an error rather than degrade: anything that
/// would require enumerating more than the configured cap of elements reports
/// [`Error::CapExceeded`] instead of switching to an approximation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),

    #[error("enumeration would exceed the cap of {0} elements")]
    CapExceeded(u128),

    #[error("not a subgroup: {0}")]
    NotASubgroup(String),

    #[error("group is not transitive")]
    NotTransitive,

    #[error("invalid subgroup pair: {0}")]
    InvalidPair(String),

    #[error("word of length {got} exceeds depth {max}")]
    WordTooLong { got: usize, max: usize },

    #[error("letter {letter} out of range 1..={arity}")]
    LetterOutOfRange { letter: usize, arity: usize },

    #[error("portrait shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operation needs a pattern of depth {expected}, got depth {got}")]
    WrongDepth { got: usize, expected: usize },

    #[error("pattern failed verification: {0}")]
    UnverifiedPattern(String),

    #[error("fiber sizes are not uniform: {0}")]
    NonUniformFibers(String),

    #[error("history has probability zero")]
    ZeroProbabilityHistory,

    #[error("level {got} out of range (valid: {min}..={max})")]
    LevelOutOfRange { got: usize, min: usize, max: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
