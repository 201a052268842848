use serde::{Deserialize, Serialize};

use crate::error::CoreError;
use crate::params::PolicyParams;

pub type CandidateId = u64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParam {
    pub name: String,
    pub value: f64,
    pub low: f64,
    pub high: f64,
}

impl HyperParam {
    pub fn new(name: impl Into<String>, value: f64, low: f64, high: f64) -> Result<Self, CoreError> {
        let hp = HyperParam {
            name: name.into(),
            value,
            low,
            high,
        };
        hp.check()?;
        Ok(hp)
    }

    pub fn check(&self) -> Result<(), CoreError> {
        if !(self.low <= self.value && self.value <= self.high) {
            return Err(CoreError::HyperParamRange {
                name: self.name.clone(),
                value: self.value,
                low: self.low,
                high: self.high,
            });
        }
        Ok(())
    }
}

/// How a candidate's decision variables are encoded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coding {
    RealVector {
        values: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    HyperParams(Vec<HyperParam>),
    NetWeights(PolicyParams),
}

impl Coding {
    pub fn real(values: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, CoreError> {
        if values.len() != lower.len() || values.len() != upper.len() {
            return Err(CoreError::Bounds(format!(
                "{} values, {} lower, {} upper bounds",
                values.len(),
                lower.len(),
                upper.len()
            )));
        }
        for (i, ((v, lo), hi)) in values.iter().zip(&lower).zip(&upper).enumerate() {
            if !(lo <= v && v <= hi) {
                return Err(CoreError::Bounds(format!(
                    "x[{i}] = {v} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(Coding::RealVector {
            values,
            lower,
            upper,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Coding::RealVector { .. } => "real_vector",
            Coding::HyperParams(_) => "hyper_params",
            Coding::NetWeights(_) => "net_weights",
        }
    }

    pub fn hyper(&self, name: &str) -> Option<f64> {
        match self {
            Coding::HyperParams(hps) => hps.iter().find(|h| h.name == name).map(|h| h.value),
            _ => None,
        }
    }
}

/// An individual of an evolutionary population.
///
/// `weights` optionally carries trained policy parameters alongside a
/// hyperparameter coding, so offspring can inherit what their parents learned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: CandidateId,
    pub coding: Coding,
    pub objectives: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weights: Option<PolicyParams>,
}

impl Candidate {
    pub fn new(id: CandidateId, coding: Coding) -> Self {
        Candidate {
            id,
            coding,
            objectives: Vec::new(),
            weights: None,
        }
    }

    pub fn is_evaluated(&self) -> bool {
        !self.objectives.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_coding_bounds() {
        assert!(Coding::real(vec![0.5], vec![0.0], vec![1.0]).is_ok());
        assert!(Coding::real(vec![1.5], vec![0.0], vec![1.0]).is_err());
        assert!(Coding::real(vec![0.5], vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn hyper_lookup() {
        let c = Coding::HyperParams(vec![HyperParam::new("lr", 0.01, 0.0, 0.1).unwrap()]);
        assert_eq!(c.hyper("lr"), Some(0.01));
        assert_eq!(c.hyper("clip"), None);
        assert!(HyperParam::new("lr", 0.2, 0.0, 0.1).is_err());
    }
}
