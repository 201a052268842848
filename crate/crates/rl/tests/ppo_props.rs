use lmrk_core::{Action, SeedTree, Step, Trajectory, Version};
use lmrk_mdp::{spawn, EnvConfig};
use lmrk_rl::*;
use proptest::prelude::*;

fn on_policy_batch(policy: &MlpPolicy, n: usize, seed: u64) -> TrainBatch {
    let (session, cs) = spawn("pendulum", &EnvConfig::default(), seed).unwrap();
    let mut actor = Actor::new(0, session, cs, 0.2, SeedTree::new(seed).child("actor").rng());
    let t = actor.rollout(policy, Version(0), n).unwrap();
    TrainBatch::from_trajectories(&[t], 0.99, 0.95, &RewardMap::first(1.0)).unwrap()
}

proptest! {
    #[test]
    fn advantages_are_normalized(rewards in prop::collection::vec(-10.0f64..10.0, 2..200), values in prop::collection::vec(-5.0f64..5.0, 200)) {
        let n = rewards.len();
        let steps: Vec<Step> = (0..n).map(|i| Step {
            state: vec![0.0],
            action: Action::Discrete(0),
            log_prob: -1.0,
            value: values[i],
            reward: vec![rewards[i]],
            done: i + 1 == n,
        }).collect();
        let t = Trajectory::new(0, Version(1), steps).unwrap();
        let b = TrainBatch::from_trajectories(&[t], 0.99, 0.95, &RewardMap::first(1.0)).unwrap();
        let mean = b.advantages.sum() / n as f64;
        let std = (b.advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        prop_assume!(b.advantages.iter().any(|a| *a != 0.0));
        prop_assert!(mean.abs() < 1e-6);
        prop_assert!((std - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gae_reduces_to_reward_to_go(rewards in prop::collection::vec(-10.0f64..10.0, 1..100), terminal in any::<bool>()) {
        let n = rewards.len();
        let mut dones = vec![false; n];
        dones[n - 1] = terminal;
        let (adv, ret) = compute_gae(&rewards, &vec![0.0; n], 0.0, &dones, 1.0, 1.0).unwrap();
        for t in 0..n {
            let togo: f64 = rewards[t..].iter().sum();
            prop_assert!((adv[t] - togo).abs() < 1e-9);
            prop_assert!((ret[t] - togo).abs() < 1e-9);
        }
    }

    #[test]
    fn clip_inactive_inside_band(ratio in 0.8f64..1.2, adv in -5.0f64..5.0) {
        prop_assert_eq!(clipped_surrogate(ratio, adv, 0.2), ratio * adv);
    }

    #[test]
    fn discounted_return_matches_powers(rewards in prop::collection::vec(-10.0f64..10.0, 0..50), gamma in 0.0f64..1.0) {
        let direct: f64 = rewards.iter().enumerate().map(|(t, r)| gamma.powi(t as i32) * r).sum();
        prop_assert!((discounted_return(&rewards, gamma) - direct).abs() < 1e-9);
    }
}

#[test]
fn identity_ratio_gives_zero_policy_term() {
    let mut rng = SeedTree::new(4).rng();
    let policy = MlpPolicy::new(NetShape::pendulum(), &mut rng);
    let batch = on_policy_batch(&policy, 150, 4);
    assert_eq!(batch.len(), 150);
    let l = ppo_loss(&batch, &policy, &PpoConfig::default()).unwrap();
    assert!(l.policy.abs() < 1e-9, "{}", l.policy);
    assert!(ratios(&batch, &policy).iter().all(|r| (r - 1.0).abs() < 1e-9));
}

#[test]
fn params_round_trip() {
    let mut rng = SeedTree::new(1).rng();
    for shape in [NetShape::pendulum(), NetShape::ponglite()] {
        let p = MlpPolicy::new(shape.clone(), &mut rng);
        let q = MlpPolicy::from_params(&shape, &p.to_params()).unwrap();
        assert_eq!(p.num_params(), q.num_params());
        assert_eq!(q.to_params(), p.to_params());
        let other = NetShape { trunk: vec![8], ..shape };
        assert!(MlpPolicy::from_params(&other, &p.to_params()).is_err());
    }
}

fn learner(reuse: usize, start: u64) -> Learner {
    let mut rng = SeedTree::new(3).rng();
    let policy = MlpPolicy::new(NetShape::pendulum(), &mut rng);
    let cfg = PpoConfig {
        batch_reuse: reuse,
        batch_size: 200,
        learning_rate: 1e-4,
        ..PpoConfig::default()
    };
    Learner::new(policy, cfg, Version(start), rng).unwrap()
}

fn batch_at(l: &Learner, seed: u64) -> TrainBatch {
    let (session, cs) = spawn("pendulum", &EnvConfig::default(), seed).unwrap();
    let mut actor = Actor::new(0, session, cs, 0.2, SeedTree::new(seed).rng());
    let t = actor.rollout(l.policy(), l.version(), 200).unwrap();
    TrainBatch::from_trajectories(&[t], 0.99, 0.95, &RewardMap::first(1.0)).unwrap()
}

#[test]
fn sync_staleness_reuse_one() {
    let mut l = learner(1, 0);
    let b = batch_at(&l, 1);
    let out = l.update(&b).unwrap();
    assert_eq!(lmrk_net::mean_staleness(&out.staleness), 1.0);
    assert_eq!(out.packet.version, Version(1));
}

#[test]
fn sync_staleness_reuse_two() {
    let mut l = learner(2, 7);
    let b = batch_at(&l, 1);
    let out = l.update(&b).unwrap();
    assert_eq!(out.gradient_steps, 2);
    assert_eq!(lmrk_net::mean_staleness(&out.staleness), 1.5);
    assert_eq!(out.packet.version, Version(9));
}

#[test]
fn divergence_is_reported() {
    let mut l = learner(1, 0);
    let mut b = batch_at(&l, 2);
    b.returns[0] = f64::INFINITY;
    assert!(matches!(l.update(&b), Err(RlError::NonFiniteLoss { .. })));
}

#[test]
fn rollout_examples() {
    let mut rng = SeedTree::new(5).rng();
    let policy = MlpPolicy::new(NetShape::ponglite(), &mut rng);
    let run = |horizon: usize| {
        let (session, cs) = spawn("ponglite", &EnvConfig::named("ponglite"), 8).unwrap();
        let mut actor = Actor::new(3, session, cs, 0.2, SeedTree::new(8).child("a").rng());
        actor.rollout(&policy, Version(5), horizon).unwrap()
    };
    let one = run(1);
    assert_eq!(one.len(), 1);
    assert_eq!(one.policy_version, Version(5));
    assert_eq!(one.agent_id, 3);
    assert_eq!(run(300), run(300));
}

#[test]
fn rollout_stops_at_episode_end() {
    let mut rng = SeedTree::new(5).rng();
    let policy = MlpPolicy::new(NetShape::pendulum(), &mut rng);
    let (session, cs) = spawn("pendulum", &EnvConfig::default(), 1).unwrap();
    let mut actor = Actor::new(0, session, cs, 0.2, SeedTree::new(1).rng());
    let a = actor.rollout(&policy, Version(0), 150).unwrap();
    let b = actor.rollout(&policy, Version(0), 150).unwrap();
    assert_eq!((a.len(), b.len()), (150, 50));
    assert!(b.is_terminal() && !a.is_terminal());
    assert_ne!(a.bootstrap_value, 0.0);
    let eps = actor.take_finished();
    assert_eq!(eps.len(), 1);
    assert_eq!(eps[0].length, 200);
    let r: f64 = a.steps.iter().chain(&b.steps).map(|s| s.reward[0]).sum();
    assert!((eps[0].total_reward - r).abs() < 1e-9);
}
