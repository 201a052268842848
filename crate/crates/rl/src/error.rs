use lmrk_mdp::MdpError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("non-finite loss ({what}) at version {version}: policy {policy}, critic {critic}, entropy {entropy}")]
    NonFiniteLoss {
        what: &'static str,
        version: u64,
        policy: f64,
        critic: f64,
        entropy: f64,
    },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("network shape: {0}")]
    Shape(String),
    #[error("bad PPO config: {0}")]
    Config(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Staleness(#[from] lmrk_net::StalenessError),
    #[error(transparent)]
    Core(#[from] lmrk_core::CoreError),
}
