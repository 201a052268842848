use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EcError {
    #[error("objective vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("objective senses differ")]
    SenseMismatch,
    #[error("coding mismatch: {0}")]
    CodingMismatch(String),
    #[error("population of {have} cannot yield {want} survivors")]
    TooFewMembers { have: usize, want: usize },
    #[error("member {0} has not been evaluated")]
    Unevaluated(u64),
}
