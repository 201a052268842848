use lmrk_ec::EcError;
use lmrk_evaluator::EvalError;
use lmrk_net::{BroadcastError, TransportError};
use lmrk_rl::RlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("cannot parse configuration: {0}")]
    Parse(String),
    #[error("invalid configuration at `{key}`: {msg}")]
    Config { key: String, msg: String },
    #[error("submission for generation {submitted} after generation {current} opened")]
    StaleGeneration { submitted: u64, current: u64 },
    #[error("submission for generation {submitted} before it opened (current {current})")]
    FutureGeneration { submitted: u64, current: u64 },
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ec(#[from] EcError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Broadcast(#[from] BroadcastError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Runtime(String),
}

impl WorkflowError {
    pub fn config(key: &str, msg: impl ToString) -> Self {
        WorkflowError::Config {
            key: key.to_string(),
            msg: msg.to_string(),
        }
    }

    /// Problems detected before anything ran.
    pub fn is_config(&self) -> bool {
        matches!(self, WorkflowError::Parse(_) | WorkflowError::Config { .. })
    }
}
