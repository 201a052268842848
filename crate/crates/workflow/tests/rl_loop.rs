use lmrk_net::Layout;
use lmrk_workflow::*;

fn small(actors: usize, schedule: Schedule, layout: Layout) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.run.actors = actors;
    cfg.run.schedule = schedule;
    cfg.run.rollout_len = 32;
    cfg.rl.batch_size = 512;
    cfg.run.frames = 10 * 512;
    cfg.broadcast.layout = layout;
    cfg.rl.reward_scale = 0.01;
    cfg.rl.max_grad_norm = 0.5;
    cfg
}

#[test]
fn sync_staleness_is_exactly_one() {
    let out = run_rl(&small(8, Schedule::Sync, Layout::Flat)).unwrap();
    let m = &out.metrics;
    assert!((m.staleness_mean().unwrap() - 1.0).abs() < 1e-9);
    for r in &m.rows {
        if let Some(s) = r.staleness_mean {
            assert!((s - 1.0).abs() < 1e-9, "window staleness {s}");
        }
    }
}

#[test]
fn sync_staleness_with_reuse_two() {
    let mut cfg = small(8, Schedule::Sync, Layout::Tree);
    cfg.rl.batch_reuse = 2;
    let out = run_rl(&cfg).unwrap();
    assert!((out.metrics.staleness_mean().unwrap() - 1.5).abs() < 1e-9);
}

#[test]
fn budget_arithmetic_and_frame_accounting() {
    for reuse in [1, 3] {
        let mut cfg = small(4, Schedule::Async, Layout::Tree);
        cfg.rl.batch_reuse = reuse;
        let out = run_rl(&cfg).unwrap();
        assert_eq!(out.metrics.gradient_steps, 10 * reuse as u64);
        assert_eq!(out.metrics.total_frames, 10 * 512);
        assert_eq!(out.packet.version.0, 10 * reuse as u64);
        let last = out.metrics.rows.last().unwrap();
        assert_eq!(last.frames, 10 * 512);
        assert!(out.metrics.rows.windows(2).all(|w| w[0].frames <= w[1].frames && w[0].time < w[1].time));
    }
}

#[test]
fn staleness_grows_with_actor_count() {
    let mean = |a: usize| {
        let mut cfg = small(a, Schedule::Async, Layout::Flat);
        cfg.run.frames = 8 * 512;
        run_rl(&cfg).unwrap().metrics.staleness_mean().unwrap()
    };
    let (s4, s32) = (mean(4), mean(32));
    assert!(s32 > s4, "staleness 4 actors {s4}, 32 actors {s32}");
}

#[test]
fn simulated_runs_are_reproducible() {
    let cfg = small(6, Schedule::Async, Layout::Tree);
    let a = run_rl(&cfg).unwrap().metrics.to_csv().unwrap();
    let b = run_rl(&cfg).unwrap().metrics.to_csv().unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("wall_time_s,frames,fps,staleness_mean,score_mean,generation,obj_min,obj_mean,obj_max\n"));
}

#[test]
fn socket_transport_completes() {
    let mut cfg = small(3, Schedule::Async, Layout::Tree);
    cfg.transport.kind = TransportKind::Socket;
    cfg.run.frames = 3 * 512;
    let out = run_rl(&cfg).unwrap();
    assert_eq!(out.metrics.total_frames, 3 * 512);
    assert_eq!(out.metrics.gradient_steps, 3);
    assert!(out.metrics.staleness_mean().unwrap() >= 1.0);
}

#[test]
fn socket_sync_staleness_is_one() {
    let mut cfg = small(4, Schedule::Sync, Layout::Flat);
    cfg.transport.kind = TransportKind::Socket;
    cfg.run.frames = 2 * 512;
    let out = run_rl(&cfg).unwrap();
    assert!((out.metrics.staleness_mean().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn divergence_aborts_with_partial_metrics() {
    let mut cfg = small(4, Schedule::Async, Layout::Tree);
    cfg.rl.learning_rate = 1e6;
    cfg.rl.max_grad_norm = 0.0;
    cfg.run.frames = 40 * 512;
    let out = run_rl(&cfg).unwrap();
    assert!(out.metrics.aborted.is_some(), "lr 1e6 should blow up");
    assert!(out.metrics.total_frames < 40 * 512);
}
