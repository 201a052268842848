use std::cmp::Ordering;

use lmrk_core::{Candidate, CandidateId, Rng};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dominance::{crowding_distance, fast_nondominated_sort};
use crate::error::EcError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub members: Vec<Candidate>,
    pub generation: u64,
}

/// Front rank and crowding distance of one member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked {
    pub id: CandidateId,
    pub rank: usize,
    pub crowding: f64,
}

impl Ranked {
    /// Lower rank, then larger crowding distance, then lower id.
    pub fn better(&self, other: &Ranked) -> Ordering {
        self.rank
            .cmp(&other.rank)
            .then(other.crowding.total_cmp(&self.crowding))
            .then(self.id.cmp(&other.id))
    }
}

fn objectives(members: &[Candidate]) -> Result<Vec<Vec<f64>>, EcError> {
    members
        .iter()
        .map(|c| {
            if c.is_evaluated() {
                Ok(c.objectives.clone())
            } else {
                Err(EcError::Unevaluated(c.id))
            }
        })
        .collect()
}

/// Front rank and crowding distance (within its front) of every member.
pub fn rank_population(members: &[Candidate]) -> Result<Vec<Ranked>, EcError> {
    let objs = objectives(members)?;
    let part = fast_nondominated_sort(&objs);
    let mut out: Vec<Ranked> = members
        .iter()
        .map(|c| Ranked {
            id: c.id,
            rank: 0,
            crowding: 0.0,
        })
        .collect();
    for (k, front) in part.fronts.iter().enumerate() {
        let pts: Vec<Vec<f64>> = front.iter().map(|&i| objs[i].clone()).collect();
        for (&i, d) in front.iter().zip(crowding_distance(&pts)) {
            out[i].rank = k;
            out[i].crowding = d;
        }
    }
    Ok(out)
}

/// Keep `n` members: whole fronts in order, then the boundary front by
/// descending crowding distance with ties going to the lower id.
pub fn nsga2_survival(merged: Vec<Candidate>, n: usize) -> Result<Vec<Candidate>, EcError> {
    if merged.len() < n {
        return Err(EcError::TooFewMembers {
            have: merged.len(),
            want: n,
        });
    }
    let objs = objectives(&merged)?;
    let part = fast_nondominated_sort(&objs);
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in &part.fronts {
        if keep.len() + front.len() <= n {
            keep.extend(front);
            continue;
        }
        let pts: Vec<Vec<f64>> = front.iter().map(|&i| objs[i].clone()).collect();
        let d = crowding_distance(&pts);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            d[b].total_cmp(&d[a])
                .then(merged[front[a]].id.cmp(&merged[front[b]].id))
        });
        let room = n - keep.len();
        keep.extend(order.into_iter().take(room).map(|j| front[j]));
        break;
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<Candidate>> = merged.into_iter().map(Some).collect();
    Ok(keep.into_iter().map(|i| slots[i].take().expect("unique index")).collect())
}

fn tournament(ranked: &[Ranked], pool: &[usize], rng: &mut Rng) -> usize {
    if pool.len() == 1 {
        return pool[0];
    }
    let a = rng.random_range(0..pool.len());
    let mut b = rng.random_range(0..pool.len() - 1);
    if b >= a {
        b += 1;
    }
    let (a, b) = (pool[a], pool[b]);
    if ranked[a].better(&ranked[b]) == Ordering::Greater {
        b
    } else {
        a
    }
}

/// N/2 parent pairs (index pairs into `ranked`), each parent chosen by a
/// binary tournament. The second parent is drawn from the other members.
pub fn binary_tournament_mating(ranked: &[Ranked], rng: &mut Rng) -> Vec<(usize, usize)> {
    let n = ranked.len();
    if n < 2 {
        return Vec::new();
    }
    let all: Vec<usize> = (0..n).collect();
    (0..n / 2)
        .map(|_| {
            let p1 = tournament(ranked, &all, rng);
            let rest: Vec<usize> = all.iter().copied().filter(|&i| i != p1).collect();
            let p2 = tournament(ranked, &rest, rng);
            (p1, p2)
        })
        .collect()
}
