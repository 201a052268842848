//! PPO kernels: an MLP policy with a trunk-sharing critic, generalized
//! advantage estimation, the clipped surrogate loss with analytic gradients,
//! a learner that versions every gradient step, and rollout actors.

mod actor;
mod batch;
mod config;
pub mod dist;
mod error;
mod gae;
mod learner;
mod loss;
mod mlp;
mod optim;

pub use actor::{actor_rollout, sample_action, Actor, EpisodeSummary};
pub use batch::{normalize, BatchActions, RewardMap, TrainBatch};
pub use config::{OptimizerKind, PpoConfig};
pub use error::RlError;
pub use gae::{compute_gae, discounted_return};
pub use learner::{learner_update, Learner, UpdateOutcome};
pub use loss::{clipped_surrogate, ppo_loss, ppo_loss_and_grad, ratios, LossTerms};
pub use mlp::{Dense, Forward, Head, MlpPolicy, NetShape, LEAKY_SLOPE};
pub use optim::{clip_grad_norm, Optimizer};
