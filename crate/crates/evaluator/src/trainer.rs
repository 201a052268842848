//! Synchronous in-process PPO: a learner plus a handful of actors stepping
//! in lockstep. Used wherever an evaluation needs "train for N frames".

use lmrk_core::{Action, PolicyParams, SeedTree, Trajectory, Version};
use lmrk_mdp::{spawn, EnvConfig, Move, ScriptedSparring};
use lmrk_rl::{Actor, EpisodeSummary, Learner, MlpPolicy, NetShape, PpoConfig, RewardMap, RlError, TrainBatch};
use serde::{Deserialize, Serialize};

use crate::emogi::{EmogiConfig, EmogiStream, EpochSummary};

/// Network shape used for an environment.
pub fn shape_for_env(name: &str) -> Result<NetShape, RlError> {
    match name {
        "pendulum" => Ok(NetShape::pendulum()),
        "ponglite" => Ok(NetShape::ponglite()),
        other => Err(RlError::Config(format!("no network shape for environment {other:?}"))),
    }
}

/// Spawn an environment session and wrap it in an actor.
pub fn make_actor(env: &EnvConfig, agent_id: u32, seed: SeedTree) -> Result<Actor, RlError> {
    let env_seed = env.seed.map(|s| SeedTree::new(s).index(agent_id as u64)).unwrap_or(seed.child("env"));
    let (session, controllers) = spawn(&env.name, env, env_seed.seed())?;
    let eps = env.sparring_epsilon.unwrap_or(ScriptedSparring::EPSILON);
    Ok(Actor::new(agent_id, session, controllers, eps, seed.child("actor").rng()))
}

pub fn moved(action: &Action) -> bool {
    action.as_discrete().is_some_and(|a| a != Move::Stay.index())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerSetup {
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    /// Environments stepped per round.
    pub actors: usize,
    /// Steps per actor segment.
    pub rollout_len: usize,
}

impl Default for TrainerSetup {
    fn default() -> Self {
        TrainerSetup {
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
            actors: 8,
            rollout_len: 256,
        }
    }
}

pub struct Trainer {
    learner: Learner,
    actors: Vec<Actor>,
    rollout_len: usize,
    reward: RewardMap,
    emogi: Vec<EmogiStream>,
    frames: u64,
    episodes: Vec<EpisodeSummary>,
    epochs: Vec<EpochSummary>,
}

impl Trainer {
    /// Start from `init` weights when given, otherwise from a fresh network.
    pub fn new(setup: &TrainerSetup, init: Option<&PolicyParams>, seed: SeedTree) -> Result<Self, RlError> {
        if setup.actors == 0 || setup.rollout_len == 0 {
            return Err(RlError::Config("trainer needs at least one actor and rollout_len >= 1".into()));
        }
        let shape = shape_for_env(&setup.env.name)?;
        let policy = match init {
            Some(p) => MlpPolicy::from_params(&shape, p)?,
            None => MlpPolicy::new(shape, &mut seed.child("init").rng()),
        };
        let learner = Learner::new(policy, setup.ppo.clone(), Version(0), seed.child("learner").rng())?;
        let actors = (0..setup.actors)
            .map(|i| make_actor(&setup.env, i as u32, seed.child("actors").index(i as u64)))
            .collect::<Result<_, _>>()?;
        Ok(Trainer {
            learner,
            actors,
            rollout_len: setup.rollout_len,
            reward: RewardMap::first(setup.ppo.reward_scale),
            emogi: Vec::new(),
            frames: 0,
            episodes: Vec::new(),
            epochs: Vec::new(),
        })
    }

    /// Train on the EMOGI objectives scalarized as `α·f1 + (1 − α)·f2`.
    pub fn with_emogi(mut self, cfg: EmogiConfig, alpha: f64) -> Self {
        self.emogi = vec![EmogiStream::new(cfg); self.actors.len()];
        self.reward = RewardMap {
            weights: vec![alpha, 1.0 - alpha],
            scale: self.learner.config().reward_scale,
        };
        self
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        let critic = self.learner.config().loss_weights[1];
        self.learner.set_hyper(lr, critic);
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn frames(&self) -> u64 {
        self.frames
    }

    pub fn episodes(&self) -> &[EpisodeSummary] {
        &self.episodes
    }

    pub fn epochs(&self) -> &[EpochSummary] {
        &self.epochs
    }

    pub fn weights(&self) -> PolicyParams {
        self.learner.policy().to_params()
    }

    /// Mean total reward of the last `n` finished episodes.
    pub fn recent_return(&self, n: usize) -> Option<f64> {
        let tail = &self.episodes[self.episodes.len().saturating_sub(n)..];
        (!tail.is_empty()).then(|| tail.iter().map(|e| e.total_reward).sum::<f64>() / tail.len() as f64)
    }

    fn rewrite_emogi(&mut self, actor: usize, t: &mut Trajectory) {
        let Some(stream) = self.emogi.get_mut(actor) else { return };
        for s in &mut t.steps {
            let game = s.reward.first().copied().unwrap_or(0.0);
            let (r, epoch) = stream.push(moved(&s.action), game);
            s.reward = r.to_vec();
            self.epochs.extend(epoch);
        }
    }

    /// Collect one batch with the current policy and apply one PPO update.
    pub fn step(&mut self) -> Result<usize, RlError> {
        let want = self.learner.config().batch_size;
        let mut trajectories = Vec::new();
        let mut got = 0;
        while got < want {
            for i in 0..self.actors.len() {
                let len = self.rollout_len.min(want - got).max(1);
                let mut t = self.actors[i].rollout(self.learner.policy(), self.learner.version(), len)?;
                self.episodes.extend(self.actors[i].take_finished());
                self.rewrite_emogi(i, &mut t);
                got += t.len();
                trajectories.push(t);
                if got >= want {
                    break;
                }
            }
        }
        let cfg = self.learner.config();
        let batch = TrainBatch::from_trajectories(&trajectories, cfg.gamma, cfg.gae_lambda, &self.reward)?;
        self.learner.update(&batch)?;
        self.frames += got as u64;
        Ok(got)
    }

    /// Train until at least `frames` more frames have been consumed.
    pub fn train(&mut self, frames: u64) -> Result<(), RlError> {
        let target = self.frames + frames;
        while self.frames < target {
            self.step()?;
        }
        Ok(())
    }
}
