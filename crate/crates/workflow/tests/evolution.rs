use lmrk_core::{Candidate, Coding, HyperParam, SeedTree};
use lmrk_workflow::*;

fn zdt1(pop: usize, gens: usize, contexts: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.run.mode = Mode::Nsga2;
    cfg.ec.population = pop;
    cfg.ec.generations = gens;
    cfg.ec.contexts = contexts;
    cfg
}

#[test]
fn one_generation_counts() {
    let out = run_evolution(&zdt1(4, 1, 2)).unwrap();
    assert_eq!(out.offspring_evaluated, 4);
    assert_eq!(out.selections, 1);
    assert_eq!(out.population.len(), 4);
    assert!(out.penalized.is_empty());
    assert!(out.population.iter().all(|c| c.objectives.len() == 2));
}

#[test]
fn result_independent_of_context_count() {
    let a = run_evolution(&zdt1(10, 5, 1)).unwrap();
    let b = run_evolution(&zdt1(10, 5, 3)).unwrap();
    assert_eq!(a.population, b.population);
}

#[test]
fn metrics_one_row_per_generation() {
    let out = run_evolution(&zdt1(8, 6, 2)).unwrap();
    let csv = out.metrics.to_csv().unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 7);
    assert!(out.metrics.rows.windows(2).all(|w| w[0].time <= w[1].time));
    let last = out.metrics.rows.last().unwrap();
    assert_eq!(last.generation, Some(6));
    // two objectives, semicolon-joined
    assert_eq!(lines[7].split(',').nth(6).unwrap().split(';').count(), 2);
}

#[test]
fn snapshot_lists_every_member() {
    let out = run_evolution(&zdt1(6, 2, 2)).unwrap();
    let snap = out.snapshot();
    let members = snap["members"].as_array().unwrap();
    assert_eq!(members.len(), 6);
    let archived = members.iter().filter(|m| m["in_archive"] == true).count();
    assert_eq!(archived, out.archive().len());
    assert!(members.iter().all(|m| m["rank"].is_u64()));
}

#[test]
fn es_and_dtlz2_run() {
    let mut cfg = zdt1(6, 3, 2);
    cfg.run.mode = Mode::Es;
    assert_eq!(run_evolution(&cfg).unwrap().selections, 3);
    let mut cfg = zdt1(6, 2, 2);
    cfg.evaluator.name = "dtlz2".into();
    let out = run_evolution(&cfg).unwrap();
    assert!(out.population.iter().all(|c| c.objectives.len() == 3));
}

fn member(id: u64, lr: f64, fitness: f64) -> Candidate {
    let mut c = Candidate::new(
        id,
        Coding::HyperParams(vec![HyperParam {
            name: "lr".into(),
            value: lr,
            low: 1e-4,
            high: 0.1,
        }]),
    );
    c.objectives = vec![fitness];
    c
}

#[test]
fn pbt_overwrites_only_bottom_quintile() {
    let mut cfg = RunConfig::default();
    cfg.run.mode = Mode::PbtPpo;
    let pop: Vec<Candidate> = (0..10).map(|i| member(i, 0.01 + i as f64 * 1e-3, i as f64)).collect();
    let mut rng = SeedTree::new(3).rng();
    let next = pbt_step(pop.clone(), &cfg, &mut rng);
    let lr = |c: &Candidate| match &c.coding {
        Coding::HyperParams(h) => h[0].value,
        _ => unreachable!(),
    };
    for (i, (old, new)) in pop.iter().zip(&next).enumerate() {
        assert_eq!(new.id, old.id);
        if i >= 2 {
            assert_eq!(new.coding, old.coding, "member {i} is not in the bottom quintile");
        } else {
            // copied from a top-two member, then scaled by 0.8 or 1.2
            let r = lr(new);
            let sources = [lr(&pop[8]), lr(&pop[9])];
            assert!(
                sources.iter().any(|s| (r - 0.8 * s).abs() < 1e-12 || (r - 1.2 * s).abs() < 1e-12),
                "member {i}: lr {r}"
            );
        }
    }
}

#[test]
fn pbt_run_with_tiny_budget() {
    let mut cfg = RunConfig::default();
    cfg.run.mode = Mode::PbtPpo;
    cfg.evaluator.name = "rl".into();
    cfg.ec.population = 4;
    cfg.ec.generations = 2;
    cfg.ec.contexts = 2;
    cfg.rl.batch_size = 256;
    cfg.run.actors = 2;
    cfg.run.rollout_len = 64;
    cfg.evaluator.budget_frames = 1024;
    cfg.rl.reward_scale = 0.01;
    cfg.rl.max_grad_norm = 0.5;
    let out = run_evolution(&cfg).unwrap();
    assert_eq!(out.population.len(), 4);
    assert!(out.population.iter().all(|c| c.weights.is_some()));
    assert!(out.penalized.is_empty(), "{:?}", out.penalized);
    assert!(out.metrics.total_frames >= 4 * 2 * 1024, "{}", out.metrics.total_frames);
    let a = run_evolution(&cfg).unwrap();
    assert_eq!(a.metrics.to_csv().unwrap(), out.metrics.to_csv().unwrap());
}
