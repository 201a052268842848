use lmrk_core::{Action, Rng, Step, Trajectory, Version};
use lmrk_mdp::{ActionSpace, Controller, Role, ScriptedSparring, Session, StepResult};

use crate::dist::{sample_categorical, sample_gaussian};
use crate::error::RlError;
use crate::mlp::{Head, MlpPolicy};

/// Sample an action from the policy head. Continuous samples are returned
/// unclipped together with their log-probability.
pub fn sample_action(policy: &MlpPolicy, obs: &[f64], rng: &mut Rng) -> (Action, f64, f64) {
    let (head, value) = policy.evaluate(obs);
    match policy.shape().head {
        Head::Categorical(_) => {
            let (a, lp) = sample_categorical(&head, rng);
            (Action::Discrete(a), lp, value)
        }
        Head::Gaussian(_) => {
            let (x, lp) = sample_gaussian(&head, policy.log_std.as_slice().expect("contiguous"), rng);
            (Action::Continuous(x), lp, value)
        }
    }
}

fn clip_to(space: &ActionSpace, action: &Action) -> Action {
    match (space, action) {
        (ActionSpace::Continuous { low, high, .. }, Action::Continuous(x)) => {
            Action::Continuous(x.iter().map(|v| v.clamp(*low, *high)).collect())
        }
        _ => action.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    /// Sum of the first reward component.
    pub total_reward: f64,
    pub length: usize,
}

/// One environment instance driven by a policy through its controllers.
/// Rollouts continue the current episode; a new episode starts after `done`.
pub struct Actor {
    pub agent_id: u32,
    session: Session,
    training: Controller,
    sparring: Vec<(Controller, ScriptedSparring)>,
    rng: Rng,
    pending: Option<StepResult>,
    episode_reward: f64,
    episode_len: usize,
    finished: Vec<EpisodeSummary>,
}

impl Actor {
    pub fn new(agent_id: u32, session: Session, controllers: Vec<Controller>, epsilon: f64, mut rng: Rng) -> Self {
        let mut training = None;
        let mut sparring = Vec::new();
        for c in controllers {
            match c.role {
                Role::Training if training.is_none() => training = Some(c),
                _ => {
                    let seed: u64 = rand::Rng::random(&mut rng);
                    sparring.push((c, ScriptedSparring::new(epsilon, lmrk_core::SeedTree::new(seed).rng())));
                }
            }
        }
        Actor {
            agent_id,
            session,
            training: training.expect("environment has a training role"),
            sparring,
            rng,
            pending: None,
            episode_reward: 0.0,
            episode_len: 0,
            finished: Vec::new(),
        }
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    /// Episodes completed since the last call.
    pub fn take_finished(&mut self) -> Vec<EpisodeSummary> {
        std::mem::take(&mut self.finished)
    }

    /// Run up to `horizon` steps (fewer if the episode ends) with a policy snapshot.
    pub fn rollout(&mut self, policy: &MlpPolicy, version: Version, horizon: usize) -> Result<Trajectory, RlError> {
        let space = self.session.spec().roles[self.training.index].action_space.clone();
        let mut steps = Vec::with_capacity(horizon);
        let mut bootstrap = 0.0;
        for _ in 0..horizon {
            let current = match self.pending.take() {
                Some(r) => r,
                None => self.session.observe(&self.training)?,
            };
            let (action, log_prob, value) = sample_action(policy, &current.observation, &mut self.rng);
            self.session.act(&self.training, clip_to(&space, &action))?;
            for (c, script) in &mut self.sparring {
                let obs = self.session.observe(c)?;
                let m = script.decide(&obs.observation);
                self.session.act(c, m.into())?;
            }
            let next = self.session.observe(&self.training)?;
            let reward = next.reward.as_ref().map(|r| r.values().to_vec()).unwrap_or_default();
            self.episode_reward += reward.first().copied().unwrap_or(0.0);
            self.episode_len += 1;
            let done = next.done;
            steps.push(Step {
                state: current.observation,
                action,
                log_prob,
                value,
                reward,
                done,
            });
            if done {
                self.finished.push(EpisodeSummary {
                    total_reward: self.episode_reward,
                    length: self.episode_len,
                });
                self.episode_reward = 0.0;
                self.episode_len = 0;
                self.session.reset();
                break;
            }
            self.pending = Some(next);
        }
        if let Some(p) = &self.pending {
            bootstrap = policy.evaluate(&p.observation).1;
        }
        let mut t = Trajectory::new(self.agent_id, version, steps)?;
        t.bootstrap_value = bootstrap;
        Ok(t)
    }
}

/// Convenience wrapper around [`Actor::rollout`].
pub fn actor_rollout(
    actor: &mut Actor,
    policy: &MlpPolicy,
    version: Version,
    horizon: usize,
) -> Result<Trajectory, RlError> {
    actor.rollout(policy, version, horizon)
}
