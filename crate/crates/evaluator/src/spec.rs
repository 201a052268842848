use lmrk_core::{Candidate, CandidateId, Coding, HyperParam, ObjectiveVector, PolicyParams, Rng, Sense};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// A searchable hyperparameter: its name, interval and whether initial
/// values are drawn log-uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperRange {
    pub name: String,
    pub low: f64,
    pub high: f64,
    #[serde(default)]
    pub log: bool,
}

impl HyperRange {
    pub fn new(name: &str, low: f64, high: f64, log: bool) -> Self {
        HyperRange {
            name: name.to_string(),
            low,
            high,
            log,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let ok = self.low.is_finite() && self.high.is_finite() && self.low <= self.high && (!self.log || self.low > 0.0);
        if ok {
            Ok(())
        } else {
            Err(EvalError::Config(format!("bad range for {}: [{}, {}]", self.name, self.low, self.high)))
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> HyperParam {
        let u: f64 = rng.random();
        let value = if self.log {
            (self.low.ln() + u * (self.high.ln() - self.low.ln())).exp()
        } else {
            self.low + u * (self.high - self.low)
        };
        HyperParam {
            name: self.name.clone(),
            value: value.clamp(self.low, self.high),
            low: self.low,
            high: self.high,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CodingSpec {
    RealVector { lower: Vec<f64>, upper: Vec<f64> },
    HyperParams(Vec<HyperRange>),
    /// Flat parameter count of the network.
    NetWeights { num_values: usize },
}

/// What `describe()` returns: the coding of a candidate and the objectives.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatorSpec {
    pub coding: CodingSpec,
    pub senses: Vec<Sense>,
}

impl EvaluatorSpec {
    pub fn new(coding: CodingSpec, senses: Vec<Sense>) -> Self {
        assert!(!senses.is_empty(), "an evaluator has at least one objective");
        EvaluatorSpec { coding, senses }
    }

    pub fn objective_count(&self) -> usize {
        self.senses.len()
    }

    pub fn check(&self, coding: &Coding) -> Result<(), EvalError> {
        let mismatch = |what: String| Err(EvalError::CodingMismatch(what));
        match (&self.coding, coding) {
            (CodingSpec::RealVector { lower, upper }, Coding::RealVector { values, lower: l, upper: u }) => {
                if values.len() != lower.len() || l != lower || u != upper {
                    return mismatch(format!("expected a real vector of dimension {} with the declared bounds", lower.len()));
                }
                Ok(())
            }
            (CodingSpec::HyperParams(ranges), Coding::HyperParams(hps)) => {
                let names: Vec<&str> = hps.iter().map(|h| h.name.as_str()).collect();
                let want: Vec<&str> = ranges.iter().map(|r| r.name.as_str()).collect();
                if names != want {
                    return mismatch(format!("expected hyperparameters {want:?}, got {names:?}"));
                }
                for h in hps {
                    h.check().map_err(|e| EvalError::CodingMismatch(e.to_string()))?;
                }
                Ok(())
            }
            (CodingSpec::NetWeights { num_values }, Coding::NetWeights(p)) => {
                if p.num_values() != *num_values {
                    return mismatch(format!("expected {num_values} weights, got {}", p.num_values()));
                }
                Ok(())
            }
            (_, other) => mismatch(format!("coding kind {} does not match the evaluator", other.kind())),
        }
    }
}

/// Side measurements reported with an RL evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub frames: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_return: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub normalized_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub move_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objectives: ObjectiveVector,
    /// Trained weights, for evaluators that train.
    pub weights: Option<PolicyParams>,
    pub stats: EvalStats,
}

impl Evaluation {
    pub fn plain(objectives: ObjectiveVector) -> Self {
        Evaluation {
            objectives,
            weights: None,
            stats: EvalStats::default(),
        }
    }
}

/// The contract EC algorithms see. `seed` only matters to stochastic
/// evaluators; the same candidate and seed always give the same result.
pub trait Evaluator: Send + Sync {
    fn describe(&self) -> EvaluatorSpec;
    fn initialize(&self, id: CandidateId, rng: &mut Rng) -> Candidate;
    fn evaluate(&self, candidate: &Candidate, seed: u64) -> Result<Evaluation, EvalError>;
}
