use lmrk_core::CandidateId;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("coding mismatch: {0}")]
    CodingMismatch(String),
    #[error("x[{index}] = {value} lies outside [0, 1]")]
    OutOfBounds { index: usize, value: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("evaluation of candidate {id} failed: {reason}")]
    EvaluationFailed { id: CandidateId, reason: String },
    #[error("invalid evaluator configuration: {0}")]
    Config(String),
}
