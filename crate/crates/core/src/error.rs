use thiserror::Error;

/// Construction-time violations of the core type invariants.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoreError {
    #[error("layer {index}: expected {expected} {what}, got {got}")]
    LayerShape {
        index: usize,
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("layer {index} contains a non-finite value")]
    NonFinite { index: usize },
    #[error("objective vector contains a non-finite value at {0}")]
    NonFiniteObjective(usize),
    #[error("objective vector has {values} values but {senses} senses")]
    SenseMismatch { values: usize, senses: usize },
    #[error("real vector coding: {0}")]
    Bounds(String),
    #[error("hyperparameter `{name}` = {value} outside [{low}, {high}]")]
    HyperParamRange {
        name: String,
        value: f64,
        low: f64,
        high: f64,
    },
    #[error("trajectory step {0} is marked done but is not the last step")]
    DoneNotLast(usize),
}
