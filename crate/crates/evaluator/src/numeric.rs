use std::f64::consts::FRAC_PI_2;

use lmrk_core::{Candidate, CandidateId, Coding, ObjectiveVector, Rng, Sense};
use rand::Rng as _;

use crate::error::EvalError;
use crate::spec::{CodingSpec, Evaluation, Evaluator, EvaluatorSpec};

fn check_unit(x: &[f64]) -> Result<(), EvalError> {
    match x.iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(index) => Err(EvalError::OutOfBounds { index, value: x[index] }),
        None => Ok(()),
    }
}

pub fn zdt1(x: &[f64]) -> Result<(f64, f64), EvalError> {
    if x.len() < 2 {
        return Err(EvalError::Domain(format!("zdt1 needs n >= 2, got {}", x.len())));
    }
    check_unit(x)?;
    let f1 = x[0];
    let g = 1.0 + 9.0 * x[1..].iter().sum::<f64>() / (x.len() - 1) as f64;
    Ok((f1, g * (1.0 - (f1 / g).sqrt())))
}

pub fn dtlz2(x: &[f64], m: usize) -> Result<Vec<f64>, EvalError> {
    if m < 2 || x.len() < m {
        return Err(EvalError::Domain(format!("dtlz2 needs 2 <= m <= n, got m={m}, n={}", x.len())));
    }
    check_unit(x)?;
    let g: f64 = x[m - 1..].iter().map(|v| (v - 0.5).powi(2)).sum();
    let angles: Vec<f64> = x[..m - 1].iter().map(|v| v * FRAC_PI_2).collect();
    Ok((0..m)
        .map(|j| {
            // f_{j+1}: cosines of the first m-1-j angles, then one sine
            let k = m - 1 - j;
            let mut f = (1.0 + g) * angles[..k].iter().map(|a| a.cos()).product::<f64>();
            if j > 0 {
                f *= angles[k].sin();
            }
            f
        })
        .collect())
}

fn unit_box(n: usize) -> CodingSpec {
    CodingSpec::RealVector {
        lower: vec![0.0; n],
        upper: vec![1.0; n],
    }
}

fn random_point(id: CandidateId, n: usize, rng: &mut Rng) -> Candidate {
    let values = (0..n).map(|_| rng.random::<f64>()).collect();
    Candidate::new(
        id,
        Coding::RealVector {
            values,
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        },
    )
}

fn point<'a>(spec: &EvaluatorSpec, c: &'a Candidate) -> Result<&'a [f64], EvalError> {
    spec.check(&c.coding)?;
    match &c.coding {
        Coding::RealVector { values, .. } => Ok(values),
        _ => unreachable!("checked above"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zdt1 {
    pub n: usize,
}

impl Default for Zdt1 {
    fn default() -> Self {
        Zdt1 { n: 30 }
    }
}

impl Evaluator for Zdt1 {
    fn describe(&self) -> EvaluatorSpec {
        EvaluatorSpec::new(unit_box(self.n), vec![Sense::Minimize; 2])
    }

    fn initialize(&self, id: CandidateId, rng: &mut Rng) -> Candidate {
        random_point(id, self.n, rng)
    }

    fn evaluate(&self, candidate: &Candidate, _seed: u64) -> Result<Evaluation, EvalError> {
        let (f1, f2) = zdt1(point(&self.describe(), candidate)?)?;
        Ok(Evaluation::plain(ObjectiveVector::minimize(vec![f1, f2]).expect("finite")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dtlz2 {
    pub n: usize,
    pub m: usize,
}

impl Default for Dtlz2 {
    fn default() -> Self {
        Dtlz2 { n: 12, m: 3 }
    }
}

impl Evaluator for Dtlz2 {
    fn describe(&self) -> EvaluatorSpec {
        EvaluatorSpec::new(unit_box(self.n), vec![Sense::Minimize; self.m])
    }

    fn initialize(&self, id: CandidateId, rng: &mut Rng) -> Candidate {
        random_point(id, self.n, rng)
    }

    fn evaluate(&self, candidate: &Candidate, _seed: u64) -> Result<Evaluation, EvalError> {
        let f = dtlz2(point(&self.describe(), candidate)?, self.m)?;
        Ok(Evaluation::plain(ObjectiveVector::minimize(f).expect("finite")))
    }
}
