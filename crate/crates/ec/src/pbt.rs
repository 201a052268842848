use lmrk_core::{Candidate, HyperParam, Rng};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PbtConfig {
    /// Fraction of the population in each of the top and bottom groups.
    pub quantile: f64,
    pub factors: [f64; 2],
    /// Episodes averaged into a member's fitness.
    pub fitness_window: usize,
}

impl Default for PbtConfig {
    fn default() -> Self {
        PbtConfig {
            quantile: 0.2,
            factors: [0.8, 1.2],
            fitness_window: 10,
        }
    }
}

/// A PBT worker: hyperparameter coding, trained weights and current fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct PbtMember {
    pub candidate: Candidate,
    pub fitness: f64,
}

fn group_size(n: usize, quantile: f64) -> usize {
    ((n as f64 * quantile).floor() as usize).max(1)
}

/// Members ordered best first (higher fitness, then lower id).
fn ranking(population: &[PbtMember]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| {
        population[b]
            .fitness
            .total_cmp(&population[a].fitness)
            .then(population[a].candidate.id.cmp(&population[b].candidate.id))
    });
    order
}

/// If `member` ranks in the bottom quantile, pick a uniformly drawn member
/// of the top quantile to copy weights and hyperparameters from.
pub fn pbt_exploit(population: &[PbtMember], member: usize, quantile: f64, rng: &mut Rng) -> Option<usize> {
    let n = population.len();
    if n < 2 {
        return None;
    }
    let k = group_size(n, quantile).min(n / 2);
    let order = ranking(population);
    let pos = order.iter().position(|&i| i == member)?;
    if pos < n - k {
        return None;
    }
    Some(order[rng.random_range(0..k)])
}

/// Copy the source member's weights and hyperparameters into `member`.
pub fn apply_exploit(population: &mut [PbtMember], member: usize, source: usize) {
    let src = population[source].candidate.clone();
    let dst = &mut population[member].candidate;
    dst.coding = src.coding;
    dst.weights = src.weights;
}

/// Multiply each hyperparameter by one of the two factors (fair coin), then
/// clamp into its interval.
pub fn pbt_explore(hp: &[HyperParam], factors: [f64; 2], rng: &mut Rng) -> Vec<HyperParam> {
    hp.iter()
        .map(|h| {
            let f = if rng.random::<bool>() { factors[1] } else { factors[0] };
            HyperParam {
                value: (h.value * f).clamp(h.low, h.high),
                ..h.clone()
            }
        })
        .collect()
}
