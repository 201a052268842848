use lmrk_core::{Candidate, CandidateId, Coding, ObjectiveVector, PolicyParams, Rng, SeedTree, Sense};
use lmrk_mdp::ponglite::WINNING_SCORE;
use lmrk_rl::RlError;
use serde::{Deserialize, Serialize};

use crate::emogi::{emogi_reward, normalized_score, EmogiConfig};
use crate::error::EvalError;
use crate::spec::{CodingSpec, EvalStats, Evaluation, Evaluator, EvaluatorSpec, HyperRange};
use crate::trainer::{shape_for_env, Trainer, TrainerSetup};

/// Number of final episodes (or EMOGI epochs) averaged into the fitness.
pub const FITNESS_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RlEvaluatorConfig {
    pub trainer: TrainerSetup,
    /// Frames of PPO per evaluation.
    pub budget_frames: u64,
    /// Hyperparameters carried in the coding. `lr` sets the learning rate,
    /// `alpha` the EMOGI scalarization weight.
    pub hyper: Vec<HyperRange>,
    /// Train on EMOGI objectives and return `(f1, f2)`.
    pub emogi: Option<EmogiConfig>,
}

impl Default for RlEvaluatorConfig {
    fn default() -> Self {
        RlEvaluatorConfig {
            trainer: TrainerSetup::default(),
            budget_frames: 65_536,
            hyper: vec![HyperRange::new("lr", 1e-4, 0.1, true)],
            emogi: None,
        }
    }
}

/// Runs a bounded PPO budget per evaluation and reports fitness.
#[derive(Debug, Clone)]
pub struct RlTrainingEvaluator {
    cfg: RlEvaluatorConfig,
    num_values: usize,
}

fn failed(id: CandidateId, e: impl ToString) -> EvalError {
    EvalError::EvaluationFailed {
        id,
        reason: e.to_string(),
    }
}

impl RlTrainingEvaluator {
    pub fn new(cfg: RlEvaluatorConfig) -> Result<Self, EvalError> {
        let shape = shape_for_env(&cfg.trainer.env.name).map_err(|e| EvalError::Config(e.to_string()))?;
        cfg.trainer.ppo.validate().map_err(|e| EvalError::Config(e.to_string()))?;
        for h in &cfg.hyper {
            h.validate()?;
            if !matches!(h.name.as_str(), "lr" | "alpha") {
                return Err(EvalError::Config(format!("unknown hyperparameter {:?} (lr, alpha)", h.name)));
            }
        }
        if let Some(e) = &cfg.emogi {
            e.validate()?;
            if cfg.trainer.env.name != "ponglite" {
                return Err(EvalError::Config("emogi objectives need the ponglite environment".into()));
            }
        }
        let probe = lmrk_rl::MlpPolicy::new(shape, &mut SeedTree::new(0).rng());
        Ok(RlTrainingEvaluator {
            num_values: probe.to_params().num_values(),
            cfg,
        })
    }

    pub fn config(&self) -> &RlEvaluatorConfig {
        &self.cfg
    }

    fn senses(&self) -> Vec<Sense> {
        match self.cfg.emogi {
            Some(_) => vec![Sense::Maximize; 2],
            None => vec![Sense::Maximize],
        }
    }

    /// Train from the candidate's weights (or fresh ones) for the budget.
    pub fn train(&self, candidate: &Candidate, seed: u64) -> Result<Trainer, EvalError> {
        let id = candidate.id;
        if self.cfg.budget_frames == 0 || self.cfg.budget_frames < self.cfg.trainer.ppo.batch_size as u64 {
            return Err(failed(id, format!("budget of {} frames is below one batch", self.cfg.budget_frames)));
        }
        let init: Option<&PolicyParams> = match &candidate.coding {
            Coding::NetWeights(p) => Some(p),
            Coding::HyperParams(_) => {
                self.describe().check(&candidate.coding)?;
                candidate.weights.as_ref()
            }
            other => return Err(EvalError::CodingMismatch(format!("rl evaluator cannot train a {}", other.kind()))),
        };
        let tree = SeedTree::new(seed);
        let mut trainer = Trainer::new(&self.cfg.trainer, init, tree).map_err(|e| failed(id, e))?;
        if let Some(lr) = candidate.coding.hyper("lr") {
            trainer.set_learning_rate(lr);
        }
        if let Some(e) = self.cfg.emogi {
            trainer = trainer.with_emogi(e, candidate.coding.hyper("alpha").unwrap_or(0.5));
        }
        trainer.train(self.cfg.budget_frames).map_err(|e: RlError| failed(id, e))?;
        Ok(trainer)
    }

    /// Objectives and statistics of a trained candidate.
    pub fn assess(&self, id: CandidateId, trainer: &Trainer) -> Result<Evaluation, EvalError> {
        let eps = trainer.episodes();
        let tail = &eps[eps.len().saturating_sub(FITNESS_WINDOW)..];
        if tail.is_empty() {
            return Err(failed(id, "no episode finished within the budget"));
        }
        let mean_return = tail.iter().map(|e| e.total_reward).sum::<f64>() / tail.len() as f64;
        let mut stats = EvalStats {
            frames: trainer.frames(),
            mean_return: Some(mean_return),
            ..EvalStats::default()
        };
        let objectives = match &self.cfg.emogi {
            None => ObjectiveVector::maximize(vec![mean_return]).map_err(|e| failed(id, e))?,
            Some(cfg) => {
                let max = WINNING_SCORE as f64;
                let scores: Vec<f64> = tail
                    .iter()
                    .map(|e| normalized_score(e.total_reward.max(0.0), (-e.total_reward).max(0.0), max))
                    .collect::<Result<_, _>>()?;
                stats.normalized_score = Some(scores.iter().sum::<f64>() / scores.len() as f64);
                let epochs = trainer.epochs();
                let last = &epochs[epochs.len().saturating_sub(FITNESS_WINDOW)..];
                if last.is_empty() {
                    return Err(failed(id, "no EMOGI epoch completed within the budget"));
                }
                let k = last.len() as f64;
                let mut f = [0.0; 2];
                for e in last {
                    let r = emogi_reward(e, cfg);
                    f[0] += r.values()[0] / k;
                    f[1] += r.values()[1] / k;
                }
                stats.move_fraction = Some(last.iter().map(|e| e.move_fraction()).sum::<f64>() / k);
                ObjectiveVector::maximize(f.to_vec()).map_err(|e| failed(id, e))?
            }
        };
        Ok(Evaluation {
            objectives,
            weights: Some(trainer.weights()),
            stats,
        })
    }
}

impl Evaluator for RlTrainingEvaluator {
    fn describe(&self) -> EvaluatorSpec {
        let coding = if self.cfg.hyper.is_empty() {
            CodingSpec::NetWeights {
                num_values: self.num_values,
            }
        } else {
            CodingSpec::HyperParams(self.cfg.hyper.clone())
        };
        EvaluatorSpec::new(coding, self.senses())
    }

    fn initialize(&self, id: CandidateId, rng: &mut Rng) -> Candidate {
        if self.cfg.hyper.is_empty() {
            let shape = shape_for_env(&self.cfg.trainer.env.name).expect("checked in new");
            let policy = lmrk_rl::MlpPolicy::new(shape, rng);
            return Candidate::new(id, Coding::NetWeights(policy.to_params()));
        }
        Candidate::new(id, Coding::HyperParams(self.cfg.hyper.iter().map(|h| h.sample(rng)).collect()))
    }

    fn evaluate(&self, candidate: &Candidate, seed: u64) -> Result<Evaluation, EvalError> {
        let trainer = self.train(candidate, seed)?;
        self.assess(candidate.id, &trainer)
    }
}
