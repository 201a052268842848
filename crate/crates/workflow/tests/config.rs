use lmrk_workflow::*;

#[test]
fn empty_file_gives_documented_defaults() {
    let cfg = RunConfig::parse("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    assert_eq!(cfg.rl.gamma, 0.99);
    assert_eq!(cfg.rl.clip, 0.2);
    assert_eq!(cfg.rl.learning_rate, 0.01);
    assert_eq!(cfg.rl.batch_size, 8192);
    assert_eq!(cfg.rl.batch_reuse, 1);
    assert_eq!(cfg.rl.loss_weights, [1.0, 0.5, 0.01]);
    assert_eq!(cfg.run.mode, Mode::Ppo);
    assert_eq!(cfg.transport.kind, TransportKind::Simulated);
}

#[test]
fn unknown_keys_are_rejected() {
    for text in ["[rl]\nklcoef = 0.1\n", "[run]\nmodee = \"ppo\"\n", "[nonsense]\n", "[ec.pbt]\nfoo = 1\n"] {
        let e = RunConfig::parse(text).unwrap_err();
        assert!(e.is_config(), "{text}: {e}");
    }
    let e = RunConfig::parse("[rl]\nklcoef = 0.1\n").unwrap_err().to_string();
    assert!(e.contains("klcoef"), "{e}");
}

#[test]
fn semantic_errors_name_the_key() {
    let cases = [
        ("[run]\nactors = 0\n", "run.actors"),
        ("[run]\nrollout_len = 0\n", "run.rollout_len"),
        ("[transport]\nintra_machine_send_cost = 1.0\n", "transport"),
        ("[metrics]\ninterval = 0.0\n", "metrics.interval"),
        ("[run]\nmode = \"nsga2\"\n[ec]\npopulation = 7\n", "ec.population"),
        ("[run]\nmode = \"emogi\"\n", "evaluator.name"),
        ("[run]\nframes = 100\n", "run.frames"),
        ("[rl]\nclip = -1.0\n", "rl"),
    ];
    for (text, key) in cases {
        match RunConfig::parse(text) {
            Err(e @ WorkflowError::Config { .. }) => assert!(e.to_string().contains(key), "{text}: {e}"),
            other => panic!("{text}: expected a config error, got {other:?}"),
        }
    }
}

#[test]
fn effective_config_round_trips() {
    let text = "[run]\nmode = \"nsga2\"\nseed = 9\n[ec]\npopulation = 12\n[evaluator]\nname = \"dtlz2\"\nn = 7\nm = 3\n";
    let cfg = RunConfig::parse(text).unwrap();
    let echoed = cfg.to_toml();
    let again = RunConfig::parse(&echoed).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(echoed, again.to_toml());
}

#[test]
fn seed_override_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "[run]\nseed = 5\n").unwrap();
    // the only test in this binary touching the variable
    std::env::set_var(SEED_ENV, "123");
    let seeded = RunConfig::load(&path);
    std::env::set_var(SEED_ENV, "-4");
    let bad = RunConfig::load(&path);
    std::env::remove_var(SEED_ENV);
    assert_eq!(seeded.unwrap().run.seed, 123);
    assert!(bad.unwrap_err().is_config());
    assert_eq!(RunConfig::load(&path).unwrap().run.seed, 5);
}
