use lmrk_core::{Candidate, Coding, PolicyParams, Rng};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::EcError;

/// Operator parameters for the real-coded GA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub eta_c: f64,
    pub p_c: f64,
    pub eta_m: f64,
    /// Per-variable mutation probability; `None` means 1/dim.
    pub p_m: Option<f64>,
    /// Gaussian step for ES variation.
    pub sigma: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            eta_c: 15.0,
            p_c: 0.9,
            eta_m: 20.0,
            p_m: None,
            sigma: 0.1,
        }
    }
}

const EPS: f64 = 1e-14;

/// Bounded simulated binary crossover. Each variable crosses with
/// probability 1/2 once the pair is selected for crossover (probability `p_c`).
pub fn sbx_crossover(
    p1: &[f64],
    p2: &[f64],
    lower: &[f64],
    upper: &[f64],
    eta: f64,
    p_c: f64,
    rng: &mut Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if rng.random::<f64>() >= p_c {
        return (c1, c2);
    }
    for i in 0..p1.len() {
        if rng.random::<f64>() > 0.5 || (p1[i] - p2[i]).abs() <= EPS {
            continue;
        }
        let (y1, y2) = if p1[i] < p2[i] { (p1[i], p2[i]) } else { (p2[i], p1[i]) };
        let (lo, hi) = (lower[i], upper[i]);
        let u: f64 = rng.random();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        let beta_lo = 1.0 + 2.0 * (y1 - lo) / (y2 - y1);
        let a = 0.5 * ((y1 + y2) - spread(beta_lo) * (y2 - y1));
        let beta_hi = 1.0 + 2.0 * (hi - y2) / (y2 - y1);
        let b = 0.5 * ((y1 + y2) + spread(beta_hi) * (y2 - y1));
        let (a, b) = (a.clamp(lo, hi), b.clamp(lo, hi));
        if rng.random::<f64>() <= 0.5 {
            c1[i] = b;
            c2[i] = a;
        } else {
            c1[i] = a;
            c2[i] = b;
        }
    }
    (c1, c2)
}

/// Perturbation δ_q of bounded polynomial mutation for a draw `u`, given the
/// normalized distances to the bounds.
pub fn poly_delta(u: f64, delta1: f64, delta2: f64, eta: f64) -> f64 {
    let pow = 1.0 / (eta + 1.0);
    if u <= 0.5 {
        let xy = 1.0 - delta1;
        let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
        val.powf(pow) - 1.0
    } else {
        let xy = 1.0 - delta2;
        let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
        1.0 - val.powf(pow)
    }
}

/// Bounded polynomial mutation; each variable mutates with probability `p_m`.
pub fn polynomial_mutation(x: &[f64], lower: &[f64], upper: &[f64], eta: f64, p_m: f64, rng: &mut Rng) -> Vec<f64> {
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            if rng.random::<f64>() >= p_m {
                return v;
            }
            let (lo, hi) = (lower[i], upper[i]);
            let range = hi - lo;
            if range <= 0.0 {
                return v;
            }
            let d = poly_delta(rng.random(), (v - lo) / range, (hi - v) / range, eta);
            (v + d * range).clamp(lo, hi)
        })
        .collect()
}

fn real_parts(c: &Coding) -> Result<(&[f64], &[f64], &[f64]), EcError> {
    match c {
        Coding::RealVector { values, lower, upper } => Ok((values, lower, upper)),
        other => Err(EcError::CodingMismatch(format!("expected real_vector, got {}", other.kind()))),
    }
}

/// SBX on two real-vector codings with shared bounds.
pub fn sbx_crossover_coding(a: &Coding, b: &Coding, cfg: &GaConfig, rng: &mut Rng) -> Result<(Coding, Coding), EcError> {
    let (x1, lo, hi) = real_parts(a)?;
    let (x2, lo2, hi2) = real_parts(b)?;
    if lo != lo2 || hi != hi2 || x1.len() != x2.len() {
        return Err(EcError::CodingMismatch("parents have different bounds".into()));
    }
    let (c1, c2) = sbx_crossover(x1, x2, lo, hi, cfg.eta_c, cfg.p_c, rng);
    let wrap = |v: Vec<f64>| Coding::RealVector {
        values: v,
        lower: lo.to_vec(),
        upper: hi.to_vec(),
    };
    Ok((wrap(c1), wrap(c2)))
}

pub fn polynomial_mutation_coding(c: &Coding, cfg: &GaConfig, rng: &mut Rng) -> Result<Coding, EcError> {
    let (x, lo, hi) = real_parts(c)?;
    let p_m = cfg.p_m.unwrap_or(1.0 / x.len().max(1) as f64);
    Ok(Coding::RealVector {
        values: polynomial_mutation(x, lo, hi, cfg.eta_m, p_m, rng),
        lower: lo.to_vec(),
        upper: hi.to_vec(),
    })
}

/// Add N(0, σ²) noise to every decision variable; real vectors are clipped
/// to their bounds.
pub fn es_variation(parent: &Candidate, sigma: f64, rng: &mut Rng) -> Result<Coding, EcError> {
    if sigma == 0.0 {
        return match &parent.coding {
            Coding::HyperParams(_) => Err(EcError::CodingMismatch("es needs real_vector or net_weights".into())),
            c => Ok(c.clone()),
        };
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| EcError::CodingMismatch(e.to_string()))?;
    match &parent.coding {
        Coding::RealVector { values, lower, upper } => Ok(Coding::RealVector {
            values: values
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (lo, hi))| (v + normal.sample(rng)).clamp(*lo, *hi))
                .collect(),
            lower: lower.clone(),
            upper: upper.clone(),
        }),
        Coding::NetWeights(p) => {
            let flat: Vec<f32> = p.flat().iter().map(|v| (*v as f64 + normal.sample(rng)) as f32).collect();
            let q: PolicyParams = p.with_flat(&flat).map_err(|e| EcError::CodingMismatch(e.to_string()))?;
            Ok(Coding::NetWeights(q))
        }
        Coding::HyperParams(_) => Err(EcError::CodingMismatch("es needs real_vector or net_weights".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lmrk_core::SeedTree;

    #[test]
    fn symmetric_draw_leaves_variable() {
        assert_eq!(poly_delta(0.5, 0.3, 0.7, 20.0), 0.0);
    }

    #[test]
    fn no_crossover_copies_parents() {
        let mut rng = SeedTree::new(1).rng();
        let (a, b) = sbx_crossover(&[0.1, 0.2], &[0.8, 0.9], &[0.0; 2], &[1.0; 2], 15.0, 0.0, &mut rng);
        assert_eq!((a, b), (vec![0.1, 0.2], vec![0.8, 0.9]));
    }

    #[test]
    fn identical_parents() {
        let mut rng = SeedTree::new(2).rng();
        for _ in 0..100 {
            let (a, b) = sbx_crossover(&[0.4, 0.6], &[0.4, 0.6], &[0.0; 2], &[1.0; 2], 15.0, 1.0, &mut rng);
            assert_eq!(a, vec![0.4, 0.6]);
            assert_eq!(b, vec![0.4, 0.6]);
        }
    }

    #[test]
    fn zero_mutation_rate_is_identity() {
        let mut rng = SeedTree::new(3).rng();
        let x = vec![0.1, 0.5, 0.9];
        assert_eq!(polynomial_mutation(&x, &[0.0; 3], &[1.0; 3], 20.0, 0.0, &mut rng), x);
    }
}
