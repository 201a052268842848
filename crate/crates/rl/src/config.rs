use serde::{Deserialize, Serialize};

use crate::error::RlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Gradient passes over each batch.
    pub batch_reuse: usize,
    /// (policy, critic, entropy)
    pub loss_weights: [f64; 3],
    /// Split each pass into minibatches of this many steps; 0 means the whole batch.
    pub minibatch_size: usize,
    pub optimizer: OptimizerKind,
    /// Multiplies environment rewards before advantage estimation.
    pub reward_scale: f64,
    /// Rescale the gradient when its global norm exceeds this; 0 disables.
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            learning_rate: 0.01,
            batch_size: 8192,
            batch_reuse: 1,
            loss_weights: [1.0, 0.5, 0.01],
            minibatch_size: 0,
            optimizer: OptimizerKind::Sgd,
            reward_scale: 1.0,
            max_grad_norm: 0.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: String| Err(RlError::Config(m));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad(format!("gae_lambda {} outside [0, 1]", self.gae_lambda));
        }
        if !(self.clip > 0.0) {
            return bad(format!("clip {} must be positive", self.clip));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.batch_reuse == 0 {
            return bad("batch_reuse must be at least 1".into());
        }
        if self.loss_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return bad(format!("loss weights {:?} must be non-negative", self.loss_weights));
        }
        if !(self.reward_scale > 0.0) || !self.reward_scale.is_finite() {
            return bad(format!("reward_scale {} must be positive", self.reward_scale));
        }
        if !(self.max_grad_norm >= 0.0) {
            return bad(format!("max_grad_norm {} must be non-negative", self.max_grad_norm));
        }
        Ok(())
    }

    /// Gradient steps one batch produces.
    pub fn steps_per_batch(&self) -> usize {
        let mb = if self.minibatch_size == 0 {
            1
        } else {
            self.batch_size.div_ceil(self.minibatch_size)
        };
        self.batch_reuse * mb
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PpoConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let mut c = PpoConfig::default();
        c.gamma = 1.0;
        assert!(c.validate().is_err());
        let mut c = PpoConfig::default();
        c.batch_reuse = 0;
        assert!(c.validate().is_err());
        let mut c = PpoConfig::default();
        c.loss_weights[2] = -0.1;
        assert!(c.validate().is_err());
        let mut c = PpoConfig::default();
        c.clip = 0.0;
        assert!(c.validate().is_err());
    }
}
