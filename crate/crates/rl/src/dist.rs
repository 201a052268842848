//! Action distributions behind the policy head.

use std::f64::consts::PI;

use lmrk_core::Rng;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.iter().map(|z| z - lse).collect()
}

pub fn categorical_entropy(log_p: &[f64]) -> f64 {
    -log_p.iter().map(|l| l.exp() * l).sum::<f64>()
}

pub fn sample_categorical(logits: &[f64], rng: &mut Rng) -> (usize, f64) {
    let log_p = log_softmax(logits);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, l) in log_p.iter().enumerate() {
        acc += l.exp();
        if u < acc {
            return (i, *l);
        }
    }
    let last = log_p.len() - 1;
    (last, log_p[last])
}

pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], x: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(x)
        .map(|((m, ls), x)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
        })
        .sum()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 * (2.0 * PI * std::f64::consts::E).ln()).sum()
}

pub fn sample_gaussian(mean: &[f64], log_std: &[f64], rng: &mut Rng) -> (Vec<f64>, f64) {
    let x: Vec<f64> = mean
        .iter()
        .zip(log_std)
        .map(|(m, ls)| {
            let e: f64 = StandardNormal.sample(rng);
            m + ls.exp() * e
        })
        .collect();
    let lp = gaussian_log_prob(mean, log_std, &x);
    (x, lp)
}
