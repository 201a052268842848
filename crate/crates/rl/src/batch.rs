use lmrk_core::{Action, Trajectory, Version};
use ndarray::{Array1, Array2};

use crate::error::RlError;
use crate::gae::compute_gae;
use crate::mlp::stack_rows;

#[derive(Debug, Clone, PartialEq)]
pub enum BatchActions {
    Discrete(Vec<usize>),
    /// batch × action dim
    Continuous(Array2<f64>),
}

/// Flattened steps ready for a PPO update. Advantages are normalized to
/// zero mean and unit standard deviation over the whole batch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainBatch {
    pub obs: Array2<f64>,
    pub actions: BatchActions,
    pub old_log_probs: Array1<f64>,
    pub advantages: Array1<f64>,
    pub returns: Array1<f64>,
    pub sample_versions: Vec<Version>,
    /// One entry per source trajectory.
    pub trajectory_versions: Vec<Version>,
}

/// Linear scalarization of reward vectors, then scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMap {
    pub weights: Vec<f64>,
    pub scale: f64,
}

impl RewardMap {
    pub fn first(scale: f64) -> Self {
        RewardMap {
            weights: vec![1.0],
            scale,
        }
    }

    pub fn apply(&self, reward: &[f64]) -> f64 {
        self.scale * reward.iter().zip(&self.weights).map(|(r, w)| r * w).sum::<f64>()
    }
}

/// Shift and scale to mean 0, std 1. Constant inputs become all zeros.
pub fn normalize(xs: &mut Array1<f64>) {
    let n = xs.len();
    if n == 0 {
        return;
    }
    let mean = xs.sum() / n as f64;
    xs.mapv_inplace(|x| x - mean);
    let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std > 1e-12 {
        xs.mapv_inplace(|x| x / std);
        // second pass removes rounding drift so the invariants hold to 1e-12
        let mean = xs.sum() / n as f64;
        xs.mapv_inplace(|x| x - mean);
        let std = (xs.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt();
        xs.mapv_inplace(|x| x / std);
    } else {
        xs.fill(0.0);
    }
}

impl TrainBatch {
    pub fn from_trajectories(
        trajectories: &[Trajectory],
        gamma: f64,
        lambda: f64,
        reward: &RewardMap,
    ) -> Result<Self, RlError> {
        let total: usize = trajectories.iter().map(|t| t.len()).sum();
        if total == 0 {
            return Err(RlError::EmptyBatch);
        }
        let mut states = Vec::with_capacity(total);
        let mut discrete = Vec::new();
        let mut continuous = Vec::new();
        let mut old = Vec::with_capacity(total);
        let mut adv = Vec::with_capacity(total);
        let mut ret = Vec::with_capacity(total);
        let mut versions = Vec::with_capacity(total);
        for t in trajectories {
            let rewards: Vec<f64> = t.steps.iter().map(|s| reward.apply(&s.reward)).collect();
            let values: Vec<f64> = t.steps.iter().map(|s| s.value).collect();
            let dones: Vec<bool> = t.steps.iter().map(|s| s.done).collect();
            let (a, r) = compute_gae(&rewards, &values, t.bootstrap_value, &dones, gamma, lambda)?;
            adv.extend(a);
            ret.extend(r);
            for s in &t.steps {
                states.push(s.state.clone());
                match &s.action {
                    Action::Discrete(i) => discrete.push(*i),
                    Action::Continuous(x) => continuous.push(x.clone()),
                }
                old.push(s.log_prob);
                versions.push(t.policy_version);
            }
        }
        let obs_dim = states[0].len();
        if states.iter().any(|s| s.len() != obs_dim) {
            return Err(RlError::LengthMismatch("observation widths differ".into()));
        }
        let actions = match (discrete.is_empty(), continuous.is_empty()) {
            (false, true) => BatchActions::Discrete(discrete),
            (true, false) => {
                let dim = continuous[0].len();
                if continuous.iter().any(|c| c.len() != dim) {
                    return Err(RlError::LengthMismatch("action widths differ".into()));
                }
                BatchActions::Continuous(stack_rows(&continuous, dim))
            }
            _ => return Err(RlError::LengthMismatch("mixed discrete and continuous actions".into())),
        };
        let mut advantages = Array1::from(adv);
        normalize(&mut advantages);
        Ok(TrainBatch {
            obs: stack_rows(&states, obs_dim),
            actions,
            old_log_probs: Array1::from(old),
            advantages,
            returns: Array1::from(ret),
            sample_versions: versions,
            trajectory_versions: trajectories.iter().map(|t| t.policy_version).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.old_log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows at `idx`. Advantages stay normalized over the full batch and the
    /// trajectory versions are those of the full batch.
    pub fn select(&self, idx: &[usize]) -> TrainBatch {
        let ax = ndarray::Axis(0);
        TrainBatch {
            obs: self.obs.select(ax, idx),
            actions: match &self.actions {
                BatchActions::Discrete(a) => BatchActions::Discrete(idx.iter().map(|&i| a[i]).collect()),
                BatchActions::Continuous(a) => BatchActions::Continuous(a.select(ax, idx)),
            },
            old_log_probs: self.old_log_probs.select(ax, idx),
            advantages: self.advantages.select(ax, idx),
            returns: self.returns.select(ax, idx),
            sample_versions: idx.iter().map(|&i| self.sample_versions[i]).collect(),
            trajectory_versions: self.trajectory_versions.clone(),
        }
    }
}
