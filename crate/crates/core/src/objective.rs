use serde::{Deserialize, Serialize};

use crate::error::CoreError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A vector of objective values with a per-component optimization sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    values: Vec<f64>,
    senses: Vec<Sense>,
}

impl ObjectiveVector {
    pub fn new(values: Vec<f64>, senses: Vec<Sense>) -> Result<Self, CoreError> {
        if values.len() != senses.len() {
            return Err(CoreError::SenseMismatch {
                values: values.len(),
                senses: senses.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CoreError::NonFiniteObjective(i));
        }
        Ok(ObjectiveVector { values, senses })
    }

    pub fn minimize(values: Vec<f64>) -> Result<Self, CoreError> {
        let senses = vec![Sense::Minimize; values.len()];
        Self::new(values, senses)
    }

    pub fn maximize(values: Vec<f64>) -> Result<Self, CoreError> {
        let senses = vec![Sense::Maximize; values.len()];
        Self::new(values, senses)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn senses(&self) -> &[Sense] {
        &self.senses
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values with maximized components negated, so smaller is always better.
    pub fn as_minimization(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.senses)
            .map(|(v, s)| match s {
                Sense::Minimize => *v,
                Sense::Maximize => -v,
            })
            .collect()
    }
}
