use lmrk_core::{PolicyPacket, Rng, Version, VersionCounter};
use lmrk_net::{record_staleness, StalenessRecord};
use rand::seq::SliceRandom;

use crate::batch::TrainBatch;
use crate::config::PpoConfig;
use crate::error::RlError;
use crate::loss::{ppo_loss_and_grad, LossTerms};
use crate::mlp::MlpPolicy;
use crate::optim::{clip_grad_norm, Optimizer};

#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub packet: PolicyPacket,
    /// One record per gradient step and source trajectory.
    pub staleness: Vec<StalenessRecord>,
    /// Loss of the last gradient step, measured before it was applied.
    pub loss: LossTerms,
    pub gradient_steps: usize,
}

/// Owns the trainable network exclusively; actors only ever see packets.
#[derive(Debug, Clone)]
pub struct Learner {
    policy: MlpPolicy,
    cfg: PpoConfig,
    optimizer: Optimizer,
    version: VersionCounter,
    rng: Rng,
}

impl Learner {
    pub fn new(policy: MlpPolicy, cfg: PpoConfig, version: Version, rng: Rng) -> Result<Self, RlError> {
        cfg.validate()?;
        let optimizer = Optimizer::new(cfg.optimizer, policy.num_params());
        Ok(Learner {
            policy,
            cfg,
            optimizer,
            version: VersionCounter::starting_at(version),
            rng,
        })
    }

    pub fn policy(&self) -> &MlpPolicy {
        &self.policy
    }

    pub fn config(&self) -> &PpoConfig {
        &self.cfg
    }

    /// Change the learning rate / loss weights (PBT explore) without
    /// resetting optimizer state.
    pub fn set_hyper(&mut self, learning_rate: f64, critic_weight: f64) {
        self.cfg.learning_rate = learning_rate;
        self.cfg.loss_weights[1] = critic_weight;
    }

    /// Replace the network (PBT exploit); optimizer state starts over.
    pub fn load(&mut self, policy: MlpPolicy) {
        self.optimizer = Optimizer::new(self.cfg.optimizer, policy.num_params());
        self.policy = policy;
    }

    pub fn version(&self) -> Version {
        self.version.current()
    }

    pub fn packet(&self) -> PolicyPacket {
        PolicyPacket::new(self.version(), self.policy.to_params())
    }

    /// `batch_reuse` passes over the batch, one version per gradient step.
    pub fn update(&mut self, batch: &TrainBatch) -> Result<UpdateOutcome, RlError> {
        learner_update(self, batch)
    }
}

pub fn learner_update(learner: &mut Learner, batch: &TrainBatch) -> Result<UpdateOutcome, RlError> {
    if batch.is_empty() {
        return Err(RlError::EmptyBatch);
    }
    let cfg = learner.cfg.clone();
    let mb = if cfg.minibatch_size == 0 {
        batch.len()
    } else {
        cfg.minibatch_size.min(batch.len())
    };
    let mut staleness = Vec::new();
    let mut last = None;
    let mut steps = 0;
    let mut order: Vec<usize> = (0..batch.len()).collect();
    for _ in 0..cfg.batch_reuse {
        let chunks: Vec<Vec<usize>> = if mb == batch.len() {
            vec![order.clone()]
        } else {
            order.shuffle(&mut learner.rng);
            order.chunks(mb).map(|c| c.to_vec()).collect()
        };
        for idx in chunks {
            let sub;
            let b = if idx.len() == batch.len() {
                batch
            } else {
                sub = batch.select(&idx);
                &sub
            };
            let (loss, grad) = ppo_loss_and_grad(b, &learner.policy, &cfg);
            let loss = loss.check(learner.version().0)?;
            let mut g = grad.flat();
            if g.iter().any(|x| !x.is_finite()) {
                return Err(RlError::NonFiniteLoss {
                    what: "gradient",
                    version: learner.version().0,
                    policy: loss.policy,
                    critic: loss.critic,
                    entropy: loss.entropy,
                });
            }
            clip_grad_norm(&mut g, cfg.max_grad_norm);
            let mut p = learner.policy.flat();
            learner.optimizer.step(&mut p, &g, cfg.learning_rate);
            if p.iter().any(|x| !(*x as f32).is_finite()) {
                return Err(RlError::NonFiniteLoss {
                    what: "parameters",
                    version: learner.version().0,
                    policy: loss.policy,
                    critic: loss.critic,
                    entropy: loss.entropy,
                });
            }
            learner.policy.set_flat(&p);
            let v = learner.version.advance();
            for &sv in &batch.trajectory_versions {
                staleness.push(record_staleness(sv, v)?);
            }
            last = Some(loss);
            steps += 1;
        }
    }
    Ok(UpdateOutcome {
        packet: learner.packet(),
        staleness,
        loss: last.expect("at least one gradient step"),
        gradient_steps: steps,
    })
}
