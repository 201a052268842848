use lmrk_core::{Action, SeedTree, Step, Trajectory, Version};
use lmrk_rl::{ppo_loss, ppo_loss_and_grad, ratios, Head, MlpPolicy, NetShape, PpoConfig, RewardMap, TrainBatch};
use rand::Rng as _;

fn random_batch(policy: &MlpPolicy, steps: usize, rng: &mut lmrk_core::Rng) -> TrainBatch {
    let shape = policy.shape().clone();
    let mut out = Vec::new();
    for i in 0..steps {
        let state: Vec<f64> = (0..shape.obs_dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let action = match shape.head {
            Head::Categorical(k) => Action::Discrete(rng.random_range(0..k)),
            Head::Gaussian(k) => Action::Continuous((0..k).map(|_| rng.random_range(-2.0..2.0)).collect()),
        };
        out.push(Step {
            state,
            action,
            // old log-probs spread the ratios over both sides of the clip band
            log_prob: rng.random_range(-3.0..0.0),
            value: rng.random_range(-1.0..1.0),
            reward: vec![rng.random_range(-1.0..1.0)],
            done: i + 1 == steps,
        });
    }
    let t = Trajectory::new(0, Version(0), out).unwrap();
    TrainBatch::from_trajectories(&[t], 0.9, 0.95, &RewardMap::first(1.0)).unwrap()
}

/// Everything that decides which smooth piece of the loss we are on.
fn pattern(policy: &MlpPolicy, batch: &TrainBatch, clip: f64) -> Vec<bool> {
    let mut p = policy.forward(batch.obs.view()).activation_pattern();
    for r in ratios(batch, policy) {
        p.push(r < 1.0 - clip);
        p.push(r > 1.0 + clip);
    }
    p
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let tree = SeedTree::new(2024);
    let cfg = PpoConfig::default();
    let h = 1e-4;
    let (mut skipped, mut total) = (0usize, 0usize);
    for case in 0..20u64 {
        let mut rng = tree.index(case).rng();
        let head = if case % 2 == 0 {
            Head::Categorical(rng.random_range(2..=4))
        } else {
            Head::Gaussian(rng.random_range(1..=2))
        };
        let shape = NetShape {
            obs_dim: rng.random_range(1..=5),
            trunk: vec![rng.random_range(2..=16), rng.random_range(2..=16)],
            critic_extra: if case % 3 == 0 { vec![rng.random_range(2..=8)] } else { vec![] },
            head,
        };
        let mut policy = MlpPolicy::new(shape, &mut rng);
        if let Head::Gaussian(_) = head {
            policy.log_std.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        }
        // larger head weights so the policy term is not negligible
        policy.policy_out.w.mapv_inplace(|w| w * 50.0);
        let batch = random_batch(&policy, rng.random_range(2..=32), &mut rng);
        let (_, grad) = ppo_loss_and_grad(&batch, &policy, &cfg);
        let analytic = grad.flat();
        let base = policy.flat();
        let here = pattern(&policy, &batch, cfg.clip);
        let mut probe = policy.clone();
        let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] = base[i] + h;
            probe.set_flat(&p);
            let up = ppo_loss(&batch, &probe, &cfg).unwrap().total;
            let smooth_up = pattern(&probe, &batch, cfg.clip) == here;
            p[i] = base[i] - h;
            probe.set_flat(&p);
            let down = ppo_loss(&batch, &probe, &cfg).unwrap().total;
            let smooth_down = pattern(&probe, &batch, cfg.clip) == here;
            total += 1;
            // a central difference straddling a kink is not a derivative
            if !(smooth_up && smooth_down) {
                skipped += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * h);
            diff += (analytic[i] - numeric).powi(2);
            na += analytic[i].powi(2);
            nn += numeric * numeric;
        }
        let e = diff.sqrt() / (na.sqrt() + nn.sqrt()).max(1e-12);
        assert!(e < 1e-4, "case {case}: relative error {e}");
    }
    assert!(skipped * 20 < total, "{skipped} of {total} coordinates straddle a kink");
}

#[test]
fn loss_is_finite_on_finite_inputs() {
    let mut rng = SeedTree::new(9).rng();
    let policy = MlpPolicy::new(NetShape::pendulum(), &mut rng);
    let batch = random_batch(&policy, 64, &mut rng);
    let l = ppo_loss(&batch, &policy, &PpoConfig::default()).unwrap();
    assert!(l.is_finite());
}
