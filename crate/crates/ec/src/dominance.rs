use lmrk_core::ObjectiveVector;

use crate::error::EcError;

/// Pareto dominance between raw minimization vectors of equal length.
pub fn dominates_min(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// True iff `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool, EcError> {
    if a.len() != b.len() {
        return Err(EcError::LengthMismatch(a.len(), b.len()));
    }
    if a.senses() != b.senses() {
        return Err(EcError::SenseMismatch);
    }
    Ok(dominates_min(&a.as_minimization(), &b.as_minimization()))
}

/// Fronts of member indices, best first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontPartition {
    pub fronts: Vec<Vec<usize>>,
}

impl FrontPartition {
    /// Front index of every member.
    pub fn ranks(&self) -> Vec<usize> {
        let n = self.fronts.iter().map(Vec::len).sum();
        let mut r = vec![0; n];
        for (k, f) in self.fronts.iter().enumerate() {
            for &i in f {
                r[i] = k;
            }
        }
        r
    }
}

/// Deb's fast non-dominated sort. Each front lists indices in ascending order.
pub fn fast_nondominated_sort(objectives: &[Vec<f64>]) -> FrontPartition {
    let n = objectives.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut dom_count = vec![0usize; n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates_min(&objectives[i], &objectives[j]) {
                dominated_by_me[i].push(j);
                dom_count[j] += 1;
            } else if dominates_min(&objectives[j], &objectives[i]) {
                dominated_by_me[j].push(i);
                dom_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dom_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by_me[i] {
                dom_count[j] -= 1;
                if dom_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    FrontPartition { fronts }
}

/// Crowding distance of each member of one front.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n == 0 {
        return dist;
    }
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].len();
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]).then(a.cmp(&b)));
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let i = order[w];
            dist[i] += (front[order[w + 1]][k] - front[order[w - 1]][k]) / range;
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominance_examples() {
        let v = |a: f64, b: f64| ObjectiveVector::minimize(vec![a, b]).unwrap();
        assert!(dominates(&v(0.0, 0.0), &v(1.0, 1.0)).unwrap());
        assert!(!dominates(&v(0.0, 1.0), &v(1.0, 0.0)).unwrap());
        assert!(!dominates(&v(1.0, 0.0), &v(0.0, 1.0)).unwrap());
        assert!(!dominates(&v(1.0, 1.0), &v(1.0, 1.0)).unwrap());
        let short = ObjectiveVector::minimize(vec![0.0]).unwrap();
        assert!(dominates(&short, &v(1.0, 1.0)).is_err());
        let max = ObjectiveVector::maximize(vec![2.0, 2.0]).unwrap();
        assert!(dominates(&max, &ObjectiveVector::maximize(vec![1.0, 2.0]).unwrap()).unwrap());
        assert_eq!(dominates(&max, &v(0.0, 0.0)), Err(EcError::SenseMismatch));
    }

    #[test]
    fn sort_examples() {
        let p = fast_nondominated_sort(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(p.fronts, vec![vec![0], vec![1]]);
        let p = fast_nondominated_sort(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(p.fronts, vec![vec![0, 1], vec![2]]);
        assert_eq!(p.ranks(), vec![0, 0, 1]);
    }

    #[test]
    fn crowding_examples() {
        assert!(crowding_distance(&[vec![0.0, 1.0], vec![1.0, 0.0]])
            .iter()
            .all(|d| d.is_infinite()));
        let d = crowding_distance(&[vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]);
        assert_eq!(d[1], 2.0);
        assert!(d[0].is_infinite() && d[2].is_infinite());
        let same = crowding_distance(&vec![vec![1.0, 1.0]; 4]);
        assert_eq!(same.iter().filter(|d| **d == 0.0).count(), 2);
    }
}
