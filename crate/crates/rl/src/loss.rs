use ndarray::{Array1, Array2};

use crate::batch::{BatchActions, TrainBatch};
use crate::config::PpoConfig;
use crate::dist::{categorical_entropy, gaussian_entropy, log_softmax};
use crate::error::RlError;
use crate::mlp::{Head, MlpPolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub policy: f64,
    pub critic: f64,
    pub entropy: f64,
}

impl LossTerms {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.policy.is_finite() && self.critic.is_finite() && self.entropy.is_finite()
    }

    pub fn check(self, version: u64) -> Result<Self, RlError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(RlError::NonFiniteLoss {
                what: "ppo loss",
                version,
                policy: self.policy,
                critic: self.critic,
                entropy: self.entropy,
            })
        }
    }
}

/// min(ρA, clip(ρ, 1−ε, 1+ε)A)
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip: f64) -> f64 {
    (ratio * advantage).min(ratio.clamp(1.0 - clip, 1.0 + clip) * advantage)
}

/// d/dρ of [`clipped_surrogate`], taking the unclipped branch on ties.
fn surrogate_grad(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    if ratio * advantage <= clipped * advantage {
        advantage
    } else {
        0.0
    }
}

/// Per-step log-probabilities and entropies under the current network, plus
/// the pieces needed to differentiate them.
struct HeadEval {
    log_probs: Array1<f64>,
    entropies: Array1<f64>,
}

fn eval_head(policy: &MlpPolicy, head: &Array2<f64>, actions: &BatchActions) -> HeadEval {
    let n = head.nrows();
    let mut log_probs = Array1::zeros(n);
    let mut entropies = Array1::zeros(n);
    match (policy.shape().head, actions) {
        (Head::Categorical(_), BatchActions::Discrete(a)) => {
            for i in 0..n {
                let lp = log_softmax(head.row(i).as_slice().expect("contiguous row"));
                log_probs[i] = lp[a[i]];
                entropies[i] = categorical_entropy(&lp);
            }
        }
        (Head::Gaussian(_), BatchActions::Continuous(x)) => {
            let ls = policy.log_std.as_slice().expect("contiguous");
            let h = gaussian_entropy(ls);
            for i in 0..n {
                let mean = head.row(i);
                let xr = x.row(i);
                log_probs[i] = crate::dist::gaussian_log_prob(
                    mean.as_slice().expect("contiguous"),
                    ls,
                    xr.as_slice().expect("contiguous"),
                );
                entropies[i] = h;
            }
        }
        _ => panic!("action kind does not match the policy head"),
    }
    HeadEval { log_probs, entropies }
}

fn terms(batch: &TrainBatch, cfg: &PpoConfig, ev: &HeadEval, values: &Array1<f64>) -> LossTerms {
    let n = batch.len() as f64;
    let mut pol = 0.0;
    for i in 0..batch.len() {
        let ratio = (ev.log_probs[i] - batch.old_log_probs[i]).exp();
        pol += clipped_surrogate(ratio, batch.advantages[i], cfg.clip);
    }
    let policy = -pol / n;
    let critic = values
        .iter()
        .zip(batch.returns.iter())
        .map(|(v, r)| (v - r) * (v - r))
        .sum::<f64>()
        / n;
    let entropy = -ev.entropies.sum() / n;
    let [wp, wc, we] = cfg.loss_weights;
    LossTerms {
        total: wp * policy + wc * critic + we * entropy,
        policy,
        critic,
        entropy,
    }
}

/// Probability ratios π_new/π_old per step.
pub fn ratios(batch: &TrainBatch, policy: &MlpPolicy) -> Array1<f64> {
    let fwd = policy.forward(batch.obs.view());
    let ev = eval_head(policy, &fwd.head, &batch.actions);
    (&ev.log_probs - &batch.old_log_probs).mapv(f64::exp)
}

/// Clipped-surrogate PPO loss with critic and entropy terms; no KL penalty.
pub fn ppo_loss(batch: &TrainBatch, policy: &MlpPolicy, cfg: &PpoConfig) -> Result<LossTerms, RlError> {
    let fwd = policy.forward(batch.obs.view());
    let ev = eval_head(policy, &fwd.head, &batch.actions);
    terms(batch, cfg, &ev, &fwd.values).check(0)
}

/// Loss and its analytic gradient with respect to every network parameter.
pub fn ppo_loss_and_grad(
    batch: &TrainBatch,
    policy: &MlpPolicy,
    cfg: &PpoConfig,
) -> (LossTerms, MlpPolicy) {
    let fwd = policy.forward(batch.obs.view());
    let ev = eval_head(policy, &fwd.head, &batch.actions);
    let loss = terms(batch, cfg, &ev, &fwd.values);
    let n = batch.len() as f64;
    let [wp, wc, we] = cfg.loss_weights;

    // d total / d log π_i
    let d_logp: Vec<f64> = (0..batch.len())
        .map(|i| {
            let ratio = (ev.log_probs[i] - batch.old_log_probs[i]).exp();
            -wp / n * surrogate_grad(ratio, batch.advantages[i], cfg.clip) * ratio
        })
        .collect();

    let width = policy.shape().head.width();
    let mut d_head = Array2::zeros((batch.len(), width));
    let mut d_log_std = Array1::zeros(policy.log_std.len());
    match &batch.actions {
        BatchActions::Discrete(a) => {
            for i in 0..batch.len() {
                let lp = log_softmax(fwd.head.row(i).as_slice().expect("contiguous row"));
                let h = categorical_entropy(&lp);
                for j in 0..width {
                    let p = lp[j].exp();
                    let onehot = if a[i] == j { 1.0 } else { 0.0 };
                    // entropy term is −mean(H), dH/dz_j = −p_j (log p_j + H)
                    let d_ent = -p * (lp[j] + h);
                    d_head[[i, j]] = d_logp[i] * (onehot - p) - we / n * d_ent;
                }
            }
        }
        BatchActions::Continuous(x) => {
            for j in 0..width {
                let ls = policy.log_std[j];
                let var = (2.0 * ls).exp();
                let mut g_ls = 0.0;
                for i in 0..batch.len() {
                    let diff = x[[i, j]] - fwd.head[[i, j]];
                    d_head[[i, j]] = d_logp[i] * diff / var;
                    g_ls += d_logp[i] * (diff * diff / var - 1.0);
                }
                // entropy grows by 1 per unit of log-std on every step
                d_log_std[j] = g_ls - we;
            }
        }
    }
    let d_values = (&fwd.values - &batch.returns) * (2.0 * wc / n);
    let grad = policy.backward(&fwd, &d_head, &d_values, &d_log_std);
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_arithmetic() {
        assert!((clipped_surrogate(1.5, 1.0, 0.2) - 1.2).abs() < 1e-12);
        assert!((clipped_surrogate(0.5, -1.0, 0.2) + 0.8).abs() < 1e-12);
        assert_eq!(clipped_surrogate(1.1, 2.0, 0.2), 2.2);
    }
}
