use lmrk_core::{Candidate, Coding, HyperParam, PolicyParams, Layer, SeedTree};
use lmrk_ec::*;
use proptest::prelude::*;
use rand::Rng as _;

/// Peel off the set of members no remaining member dominates.
fn brute_force(objs: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..objs.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dominates_min(&objs[j], &objs[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..=4).prop_flat_map(|m| {
        // coarse values make ties and duplicates common
        prop::collection::vec(prop::collection::vec((0u8..6).prop_map(f64::from), m), 1..=64)
    })
}

fn cands(objs: &[Vec<f64>]) -> Vec<Candidate> {
    objs.iter()
        .enumerate()
        .map(|(i, o)| {
            let mut c = Candidate::new(i as u64, Coding::HyperParams(vec![]));
            c.objectives = o.clone();
            c
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sort_matches_oracle(objs in points()) {
        let part = fast_nondominated_sort(&objs);
        prop_assert_eq!(&part.fronts, &brute_force(&objs));
        // partition invariants
        let ranks = part.ranks();
        for (k, front) in part.fronts.iter().enumerate() {
            for &a in front {
                for &b in front {
                    prop_assert!(!dominates_min(&objs[a], &objs[b]));
                }
                if k > 0 {
                    prop_assert!(objs.iter().enumerate().any(|(j, o)| ranks[j] < k && dominates_min(o, &objs[a])));
                }
            }
        }
    }

    #[test]
    fn survival_is_elitist(objs in points(), frac in 0.1f64..1.0) {
        let m = objs[0].len();
        let n = ((objs.len() as f64 * frac).ceil() as usize).max(2 * m).min(objs.len());
        let survivors = nsga2_survival(cands(&objs), n).unwrap();
        prop_assert_eq!(survivors.len(), n);
        for k in 0..m {
            let best = objs.iter().map(|o| o[k]).fold(f64::INFINITY, f64::min);
            prop_assert!(survivors.iter().any(|c| c.objectives[k] == best));
        }
        // deterministic
        prop_assert_eq!(survivors, nsga2_survival(cands(&objs), n).unwrap());
    }

    #[test]
    fn explore_stays_in_interval(steps in 1usize..200, seed in any::<u64>()) {
        let mut rng = SeedTree::new(seed).rng();
        let mut hp = vec![
            HyperParam::new("lr", 0.01, 1e-6, 0.1).unwrap(),
            HyperParam::new("critic_weight", 0.5, 1e-6, 1.0).unwrap(),
        ];
        for _ in 0..steps {
            hp = pbt_explore(&hp, [0.8, 1.2], &mut rng);
            for h in &hp {
                prop_assert!(h.check().is_ok());
                prop_assert!(h.value > 0.0);
            }
        }
    }
}

#[test]
fn sixty_four_three_objective_points() {
    let mut rng = SeedTree::new(64).rng();
    let objs: Vec<Vec<f64>> = (0..64).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
    assert_eq!(fast_nondominated_sort(&objs).fronts, brute_force(&objs));
}

#[test]
fn crossover_and_mutation_respect_bounds() {
    let mut rng = SeedTree::new(7).rng();
    let lo = vec![-1.0, 0.0, 2.0];
    let hi = vec![1.0, 0.5, 10.0];
    for _ in 0..10_000 {
        let a: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| rng.random_range(*l..=*h)).collect();
        let b: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| rng.random_range(*l..=*h)).collect();
        let (c1, c2) = sbx_crossover(&a, &b, &lo, &hi, 15.0, 0.9, &mut rng);
        let m = polynomial_mutation(&a, &lo, &hi, 20.0, 1.0, &mut rng);
        for x in [&c1, &c2, &m] {
            for i in 0..3 {
                assert!(lo[i] <= x[i] && x[i] <= hi[i], "{x:?}");
            }
        }
    }
}

#[test]
fn es_variance_matches_sigma() {
    let mut rng = SeedTree::new(8).rng();
    let sigma = 0.3;
    let n = 100_000;
    let parent = Candidate::new(0, Coding::real(vec![0.0], vec![-1e9], vec![1e9]).unwrap());
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..n {
        let Coding::RealVector { values, .. } = es_variation(&parent, sigma, &mut rng).unwrap() else {
            unreachable!()
        };
        sum += values[0];
        sq += values[0] * values[0];
    }
    let mean = sum / n as f64;
    let var = sq / n as f64 - mean * mean;
    assert!((var / (sigma * sigma) - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn es_zero_sigma_and_bounds() {
    let mut rng = SeedTree::new(9).rng();
    let p = Candidate::new(0, Coding::real(vec![0.5, 0.9], vec![0.0; 2], vec![1.0; 2]).unwrap());
    assert_eq!(es_variation(&p, 0.0, &mut rng).unwrap(), p.coding);
    for _ in 0..5_000 {
        let Coding::RealVector { values, .. } = es_variation(&p, 2.0, &mut rng).unwrap() else {
            unreachable!()
        };
        assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
    }
    let w = PolicyParams::new(vec![Layer::zeros(2, 2)]).unwrap();
    let net = Candidate::new(1, Coding::NetWeights(w.clone()));
    assert_eq!(es_variation(&net, 0.0, &mut rng).unwrap(), Coding::NetWeights(w.clone()));
    let Coding::NetWeights(q) = es_variation(&net, 0.1, &mut rng).unwrap() else {
        unreachable!()
    };
    assert_eq!(q.num_values(), w.num_values());
    assert_ne!(q, w);
}

#[test]
fn operators_replay_with_equal_seeds() {
    let run = |seed: u64| {
        let mut rng = SeedTree::new(seed).rng();
        let cfg = GaConfig::default();
        let a = Coding::real(vec![0.1; 5], vec![0.0; 5], vec![1.0; 5]).unwrap();
        let b = Coding::real(vec![0.7; 5], vec![0.0; 5], vec![1.0; 5]).unwrap();
        let (c1, c2) = sbx_crossover_coding(&a, &b, &cfg, &mut rng).unwrap();
        let m = polynomial_mutation_coding(&c1, &cfg, &mut rng).unwrap();
        let ranked: Vec<Ranked> = (0..6)
            .map(|i| Ranked { id: i, rank: (i % 3) as usize, crowding: i as f64 })
            .collect();
        (c1, c2, m, binary_tournament_mating(&ranked, &mut rng))
    };
    assert_eq!(run(3), run(3));
    let (_, _, _, pairs) = run(3);
    assert_eq!(pairs.len(), 3);
    assert!(pairs.iter().all(|(a, b)| a != b));
}

#[test]
fn coding_mismatch_is_reported() {
    let mut rng = SeedTree::new(1).rng();
    let a = Coding::real(vec![0.1], vec![0.0], vec![1.0]).unwrap();
    let h = Coding::HyperParams(vec![]);
    assert!(matches!(
        sbx_crossover_coding(&a, &h, &GaConfig::default(), &mut rng),
        Err(EcError::CodingMismatch(_))
    ));
    let b = Coding::real(vec![0.1], vec![0.0], vec![2.0]).unwrap();
    assert!(sbx_crossover_coding(&a, &b, &GaConfig::default(), &mut rng).is_err());
}
