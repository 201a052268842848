//! The generation loop: mating, evaluation in independent contexts, the
//! collector barrier and synchronized selection.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use lmrk_core::{Candidate, CandidateId, Coding, HyperParam, Rng, SeedTree, Sense};
use lmrk_ec::{
    apply_exploit, binary_tournament_mating, es_variation, nsga2_survival, pbt_exploit, pbt_explore,
    polynomial_mutation, rank_population, sbx_crossover, GaConfig, PbtMember,
};
use lmrk_evaluator::{
    Dtlz2, EvalError, EvalStats, Evaluator, HyperRange, RlEvaluatorConfig, RlTrainingEvaluator, TrainerSetup, Zdt1,
};
use rand::Rng as _;
use serde_json::{json, Value};

use crate::collector::Collector;
use crate::config::{Mode, RunConfig};
use crate::error::WorkflowError;
use crate::metrics::{MetricsRow, ObjectiveStats, RunMetrics};

#[derive(Debug, Clone)]
pub struct EvolutionOutcome {
    /// Final population; objectives in the evaluator's natural sense.
    pub population: Vec<Candidate>,
    pub senses: Vec<Sense>,
    pub stats: BTreeMap<CandidateId, EvalStats>,
    pub metrics: RunMetrics,
    pub selections: usize,
    /// Offspring evaluated after the initial population.
    pub offspring_evaluated: usize,
    /// Candidates that failed twice and received worst-case objectives.
    pub penalized: Vec<CandidateId>,
    pub generation: u64,
    pub mode: Mode,
}

impl EvolutionOutcome {
    /// Indices of the first non-dominated front.
    pub fn archive(&self) -> Vec<usize> {
        let min: Vec<Vec<f64>> = self.population.iter().map(|c| to_min(&c.objectives, &self.senses)).collect();
        let mut front = lmrk_ec::fast_nondominated_sort(&min).fronts.into_iter().next().unwrap_or_default();
        front.sort_unstable();
        front
    }

    /// Snapshot written as `population.json`.
    pub fn snapshot(&self) -> Value {
        let ranked = ranked_min(&self.population, &self.senses);
        let archive = self.archive();
        let members: Vec<Value> = self
            .population
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let coding = match &c.coding {
                    Coding::NetWeights(p) => json!({"kind": "net_weights", "num_values": p.num_values()}),
                    other => serde_json::to_value(other).expect("coding serializes"),
                };
                let mut m = json!({
                    "id": c.id,
                    "coding": coding,
                    "objectives": c.objectives,
                    "rank": ranked.get(i).map(|r| r.rank),
                    "crowding": ranked.get(i).map(|r| finite_or_null(r.crowding)),
                    "in_archive": archive.contains(&i),
                });
                if let Some(s) = self.stats.get(&c.id) {
                    m["stats"] = serde_json::to_value(s).expect("stats serialize");
                }
                m
            })
            .collect();
        json!({
            "mode": self.mode,
            "generation": self.generation,
            "senses": self.senses,
            "selections": self.selections,
            "penalized": self.penalized,
            "archive": archive.iter().map(|&i| self.population[i].id).collect::<Vec<_>>(),
            "members": members,
        })
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn to_min(values: &[f64], senses: &[Sense]) -> Vec<f64> {
    values
        .iter()
        .zip(senses)
        .map(|(v, s)| if *s == Sense::Maximize { -v } else { *v })
        .collect()
}

fn ranked_min(pop: &[Candidate], senses: &[Sense]) -> Vec<lmrk_ec::Ranked> {
    let min: Vec<Candidate> = pop
        .iter()
        .map(|c| Candidate {
            objectives: to_min(&c.objectives, senses),
            weights: None,
            ..c.clone()
        })
        .collect();
    rank_population(&min).unwrap_or_default()
}

pub fn build_evaluator(cfg: &RunConfig) -> Result<Arc<dyn Evaluator>, WorkflowError> {
    let e = &cfg.evaluator;
    Ok(match e.name.as_str() {
        "zdt1" => Arc::new(Zdt1 { n: e.n.unwrap_or(30) }),
        "dtlz2" => Arc::new(Dtlz2 {
            n: e.n.unwrap_or(12),
            m: e.m.unwrap_or(3),
        }),
        "rl" => {
            let mut hyper = e.hyper.clone();
            let emogi = (cfg.run.mode == Mode::Emogi).then(|| e.emogi.unwrap_or_default());
            if emogi.is_some() && !hyper.iter().any(|h| h.name == "alpha") {
                hyper.push(HyperRange::new("alpha", 0.0, 1.0, false));
            }
            Arc::new(RlTrainingEvaluator::new(RlEvaluatorConfig {
                trainer: TrainerSetup {
                    env: cfg.env.clone(),
                    ppo: cfg.rl.clone(),
                    actors: cfg.run.actors,
                    rollout_len: cfg.run.rollout_len,
                },
                budget_frames: e.budget_frames,
                hyper,
                emogi,
            })?)
        }
        other => return Err(WorkflowError::config("evaluator.name", format!("unknown evaluator {other:?}"))),
    })
}

/// Work handed to an evaluation context.
#[derive(Debug, Clone)]
enum Job {
    Evaluate(Candidate),
    /// Vary a pair into two children with the given ids, then evaluate both.
    Mate(Box<(Candidate, Candidate)>, [CandidateId; 2]),
}

#[derive(Debug)]
struct Done {
    candidate: Candidate,
    stats: EvalStats,
    penalized: bool,
}

struct Shared {
    evaluator: Arc<dyn Evaluator>,
    mode: Mode,
    ga: GaConfig,
    senses: Vec<Sense>,
}

fn worst(senses: &[Sense]) -> Vec<f64> {
    senses
        .iter()
        .map(|s| if *s == Sense::Minimize { f64::MAX } else { -f64::MAX })
        .collect()
}

/// Evaluate with one retry under a fresh seed; a second failure earns
/// worst-case objectives so the population keeps its size.
fn evaluate(shared: &Shared, mut c: Candidate, seed: SeedTree) -> Result<Done, WorkflowError> {
    let mut last = None;
    for attempt in 0..2u64 {
        match shared.evaluator.evaluate(&c, seed.index(attempt).seed()) {
            Ok(e) => {
                c.objectives = e.objectives.values().to_vec();
                if e.weights.is_some() {
                    c.weights = e.weights;
                }
                return Ok(Done {
                    candidate: c,
                    stats: e.stats,
                    penalized: false,
                });
            }
            Err(err @ EvalError::EvaluationFailed { .. }) => {
                log::warn!("attempt {} for candidate {}: {err}", attempt + 1, c.id);
                last = Some(err);
            }
            Err(err) => return Err(err.into()),
        }
    }
    log::warn!("candidate {} penalized after two failures: {:?}", c.id, last);
    c.objectives = worst(&shared.senses);
    Ok(Done {
        candidate: c,
        stats: EvalStats::default(),
        penalized: true,
    })
}

fn hyper_box(h: &[HyperParam]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (
        h.iter().map(|p| p.value).collect(),
        h.iter().map(|p| p.low).collect(),
        h.iter().map(|p| p.high).collect(),
    )
}

fn real_parts(c: &Coding) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), WorkflowError> {
    match c {
        Coding::RealVector { values, lower, upper } => Ok((values.clone(), lower.clone(), upper.clone())),
        Coding::HyperParams(h) => Ok(hyper_box(h)),
        Coding::NetWeights(_) => Err(WorkflowError::config("run.mode", "crossover needs real or hyperparameter codings")),
    }
}

fn rebuild(template: &Coding, values: Vec<f64>) -> Coding {
    match template {
        Coding::RealVector { lower, upper, .. } => Coding::RealVector {
            values,
            lower: lower.clone(),
            upper: upper.clone(),
        },
        Coding::HyperParams(h) => Coding::HyperParams(
            h.iter()
                .zip(values)
                .map(|(p, v)| HyperParam {
                    value: v.clamp(p.low, p.high),
                    ..p.clone()
                })
                .collect(),
        ),
        Coding::NetWeights(_) => unreachable!("rejected by real_parts"),
    }
}

/// SBX then polynomial mutation on real vectors or hyperparameter vectors.
fn ga_pair(a: &Coding, b: &Coding, ga: &GaConfig, rng: &mut Rng) -> Result<(Coding, Coding), WorkflowError> {
    let (x1, lo, hi) = real_parts(a)?;
    let (x2, lo2, hi2) = real_parts(b)?;
    if lo != lo2 || hi != hi2 {
        return Err(WorkflowError::Runtime("parents have different bounds".into()));
    }
    let (c1, c2) = sbx_crossover(&x1, &x2, &lo, &hi, ga.eta_c, ga.p_c, rng);
    let p_m = ga.p_m.unwrap_or(1.0 / x1.len().max(1) as f64);
    let m1 = polynomial_mutation(&c1, &lo, &hi, ga.eta_m, p_m, rng);
    let m2 = polynomial_mutation(&c2, &lo, &hi, ga.eta_m, p_m, rng);
    Ok((rebuild(a, m1), rebuild(b, m2)))
}

fn run_job(shared: &Shared, job: Job, seed: SeedTree) -> Result<Vec<Done>, WorkflowError> {
    match job {
        Job::Evaluate(c) => Ok(vec![evaluate(shared, c, seed.child("eval"))?]),
        Job::Mate(parents, ids) => {
            let (p1, p2) = *parents;
            let mut rng = seed.child("vary").rng();
            let (c1, c2) = match shared.mode {
                Mode::Es => (
                    es_variation(&p1, shared.ga.sigma, &mut rng)?,
                    es_variation(&p2, shared.ga.sigma, &mut rng)?,
                ),
                _ => ga_pair(&p1.coding, &p2.coding, &shared.ga, &mut rng)?,
            };
            // children start from their parents' trained weights
            let kids = [(ids[0], c1, p1.weights), (ids[1], c2, p2.weights)];
            kids.into_iter()
                .enumerate()
                .map(|(k, (id, coding, weights))| {
                    let child = Candidate {
                        id,
                        coding,
                        objectives: Vec::new(),
                        weights,
                    };
                    evaluate(shared, child, seed.child("eval").index(k as u64))
                })
                .collect()
        }
    }
}

/// Simulated duration of one evaluation.
fn latency(cfg: &RunConfig, stats: &EvalStats, rng: &mut Rng) -> f64 {
    if stats.frames > 0 {
        let per_frame = cfg.run.frame_cost + cfg.run.learner_cost_per_sample * cfg.rl.batch_reuse as f64;
        stats.frames as f64 * per_frame
    } else {
        let [lo, hi] = cfg.ec.eval_latency;
        lo + (hi - lo) * rng.random::<f64>()
    }
}

struct Pool {
    jobs: Option<mpsc::Sender<(usize, Job, SeedTree)>>,
    results: mpsc::Receiver<(usize, Result<Vec<Done>, WorkflowError>)>,
    workers: Vec<thread::JoinHandle<()>>,
}

impl Pool {
    fn new(contexts: usize, shared: Arc<Shared>) -> Self {
        let (jtx, jrx) = mpsc::channel::<(usize, Job, SeedTree)>();
        let (rtx, rrx) = mpsc::channel();
        let jrx = Arc::new(Mutex::new(jrx));
        let workers = (0..contexts)
            .map(|_| {
                let jrx = jrx.clone();
                let rtx = rtx.clone();
                let shared = shared.clone();
                thread::spawn(move || loop {
                    let next = jrx.lock().unwrap().recv();
                    let Ok((slot, job, seed)) = next else { break };
                    if rtx.send((slot, run_job(&shared, job, seed))).is_err() {
                        break;
                    }
                })
            })
            .collect();
        Pool {
            jobs: Some(jtx),
            results: rrx,
            workers,
        }
    }

    /// Dispatch every job and feed finished candidates into the collector in
    /// completion order. Returns per-job results indexed by dispatch slot.
    fn dispatch(
        &self,
        jobs: Vec<(Job, SeedTree)>,
        collector: &Collector,
        generation: u64,
    ) -> Result<Vec<Vec<Done>>, WorkflowError> {
        let n = jobs.len();
        let tx = self.jobs.as_ref().expect("pool open");
        for (slot, (job, seed)) in jobs.into_iter().enumerate() {
            tx.send((slot, job, seed))
                .map_err(|_| WorkflowError::Runtime("evaluation contexts stopped".into()))?;
        }
        let mut out: Vec<Option<Vec<Done>>> = (0..n).map(|_| None).collect();
        for _ in 0..n {
            let (slot, res) = self
                .results
                .recv()
                .map_err(|_| WorkflowError::Runtime("evaluation contexts stopped".into()))?;
            let done = res?;
            for d in &done {
                collector.submit(generation, d.candidate.clone())?;
            }
            out[slot] = Some(done);
        }
        Ok(out.into_iter().map(|d| d.expect("every slot answered")).collect())
    }
}

impl Drop for Pool {
    fn drop(&mut self) {
        self.jobs.take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

struct Run<'a> {
    cfg: &'a RunConfig,
    pool: Pool,
    collector: Collector,
    seed: SeedTree,
    clock: f64,
    metrics: RunMetrics,
    stats: BTreeMap<CandidateId, EvalStats>,
    penalized: Vec<CandidateId>,
}

impl Run<'_> {
    /// Run one generation's jobs, wait at the barrier and account for time.
    fn generation(&mut self, generation: u64, jobs: Vec<(Job, SeedTree)>, expected: usize) -> Result<Vec<Candidate>, WorkflowError> {
        if generation > self.collector.generation() {
            self.collector.open(generation, expected);
        }
        let results = self.pool.dispatch(jobs, &self.collector, generation)?;
        let mut got = self
            .collector
            .await_generation(Duration::from_secs(1))
            .ok_or_else(|| WorkflowError::Runtime("collector incomplete after all jobs answered".into()))?;
        // list scheduling over the contexts in dispatch order
        let mut lat_rng = self.seed.child("latency").index(generation).rng();
        let mut free = vec![self.clock; self.cfg.ec.contexts];
        let mut frames = 0;
        for done in &results {
            let dt: f64 = done.iter().map(|d| latency(self.cfg, &d.stats, &mut lat_rng)).sum();
            let k = (0..free.len()).min_by(|&a, &b| free[a].total_cmp(&free[b])).expect("contexts >= 1");
            free[k] += dt;
            for d in done {
                frames += d.stats.frames;
                self.stats.insert(d.candidate.id, d.stats.clone());
                if d.penalized {
                    self.penalized.push(d.candidate.id);
                }
            }
        }
        let start = self.clock;
        self.clock = free.into_iter().fold(start, f64::max);
        self.metrics.total_frames += frames;
        // selection must not depend on completion order
        got.sort_by_key(|c| c.id);
        Ok(got)
    }

    fn report(&mut self, generation: u64, pop: &[Candidate], frames_before: u64, start: f64) {
        let objs: Vec<&[f64]> = pop.iter().map(|c| c.objectives.as_slice()).collect();
        let dt = self.clock - start;
        let df = self.metrics.total_frames - frames_before;
        let scores: Vec<f64> = pop
            .iter()
            .filter_map(|c| self.stats.get(&c.id))
            .filter_map(|s| s.normalized_score.or(s.mean_return))
            .collect();
        self.metrics.rows.push(MetricsRow {
            time: self.clock,
            frames: self.metrics.total_frames,
            fps: (df > 0 && dt > 0.0).then(|| df as f64 / dt),
            staleness_mean: None,
            score_mean: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
            generation: Some(generation),
            objectives: ObjectiveStats::of(&objs),
        });
    }
}

/// Run the configured EC algorithm for `[ec] generations` selection events.
pub fn run_evolution(cfg: &RunConfig) -> Result<EvolutionOutcome, WorkflowError> {
    cfg.validate()?;
    if !matches!(cfg.run.mode, Mode::Nsga2 | Mode::Es | Mode::Emogi | Mode::PbtPpo) {
        return Err(WorkflowError::config("run.mode", "not an evolutionary mode"));
    }
    let evaluator = build_evaluator(cfg)?;
    let spec = evaluator.describe();
    let shared = Arc::new(Shared {
        evaluator: evaluator.clone(),
        mode: cfg.run.mode,
        ga: cfg.ec.ga.clone(),
        senses: spec.senses.clone(),
    });
    let n = cfg.ec.population;
    let seed = SeedTree::new(cfg.run.seed);
    let mut run = Run {
        cfg,
        pool: Pool::new(cfg.ec.contexts, shared),
        collector: Collector::new(0, n),
        seed,
        clock: 0.0,
        metrics: RunMetrics::default(),
        stats: BTreeMap::new(),
        penalized: Vec::new(),
    };
    let mut init_rng = seed.child("initialize").rng();
    let initial: Vec<Candidate> = (0..n as u64).map(|id| evaluator.initialize(id, &mut init_rng)).collect();
    let mut next_id = n as u64;
    let gens = cfg.ec.generations as u64;
    let mut selections = 0;
    let mut offspring_evaluated = 0;

    let mut pop = if cfg.run.mode == Mode::PbtPpo {
        initial
    } else {
        let jobs = initial
            .into_iter()
            .enumerate()
            .map(|(i, c)| (Job::Evaluate(c), seed.child("gen").index(0).index(i as u64)))
            .collect();
        let pop = run.generation(0, jobs, n)?;
        run.report(0, &pop, 0, 0.0);
        pop
    };

    for g in 1..=gens {
        let frames_before = run.metrics.total_frames;
        let start = run.clock;
        let gseed = seed.child("gen").index(g);
        if cfg.run.mode == Mode::PbtPpo {
            let jobs = pop
                .iter()
                .enumerate()
                .map(|(i, c)| (Job::Evaluate(c.clone()), gseed.index(i as u64)))
                .collect();
            let trained = run.generation(g, jobs, n)?;
            offspring_evaluated += trained.len();
            run.report(g, &trained, frames_before, start);
            pop = if g < gens {
                pbt_step(trained, cfg, &mut gseed.child("pbt").rng())
            } else {
                trained
            };
        } else {
            let min: Vec<Candidate> = pop
                .iter()
                .map(|c| Candidate {
                    objectives: to_min(&c.objectives, &spec.senses),
                    weights: None,
                    ..c.clone()
                })
                .collect();
            let ranked = rank_population(&min)?;
            let pairs = binary_tournament_mating(&ranked, &mut gseed.child("mating").rng());
            let jobs = pairs
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| {
                    let ids = [next_id + 2 * k as u64, next_id + 2 * k as u64 + 1];
                    (Job::Mate(Box::new((pop[a].clone(), pop[b].clone())), ids), gseed.index(k as u64))
                })
                .collect::<Vec<_>>();
            next_id += 2 * pairs.len() as u64;
            let offspring = run.generation(g, jobs, 2 * pairs.len())?;
            offspring_evaluated += offspring.len();
            let mut merged = pop;
            merged.extend(offspring);
            let minimized: Vec<Candidate> = merged
                .iter()
                .map(|c| Candidate {
                    objectives: to_min(&c.objectives, &spec.senses),
                    ..c.clone()
                })
                .collect();
            let survivors = nsga2_survival(minimized, n)?;
            pop = survivors
                .into_iter()
                .map(|c| Candidate {
                    objectives: to_min(&c.objectives, &spec.senses),
                    ..c
                })
                .collect();
            run.report(g, &pop, frames_before, start);
        }
        selections += 1;
    }
    run.metrics.end_time = run.clock;
    run.metrics.final_score = run.metrics.rows.last().and_then(|r| r.score_mean);
    let stats = pop
        .iter()
        .filter_map(|c| run.stats.get(&c.id).map(|s| (c.id, s.clone())))
        .collect();
    Ok(EvolutionOutcome {
        population: pop,
        senses: spec.senses,
        stats,
        metrics: run.metrics,
        selections,
        offspring_evaluated,
        penalized: run.penalized,
        generation: gens,
        mode: cfg.run.mode,
    })
}

/// Exploit then explore: bottom-quantile members copy a top member's weights
/// and hyperparameters, then perturb the hyperparameters. Decisions are made
/// on the ranking before any copy happens.
pub fn pbt_step(trained: Vec<Candidate>, cfg: &RunConfig, rng: &mut Rng) -> Vec<Candidate> {
    let before: Vec<PbtMember> = trained
        .into_iter()
        .map(|c| PbtMember {
            fitness: c.objectives.first().copied().unwrap_or(f64::NEG_INFINITY),
            candidate: c,
        })
        .collect();
    let mut after = before.clone();
    for i in 0..before.len() {
        // top and bottom groups are disjoint, so sources are never overwritten
        if let Some(src) = pbt_exploit(&before, i, cfg.ec.pbt.quantile, rng) {
            apply_exploit(&mut after, i, src);
            if let Coding::HyperParams(h) = &after[i].candidate.coding {
                after[i].candidate.coding = Coding::HyperParams(pbt_explore(h, cfg.ec.pbt.factors, rng));
            }
        }
    }
    after.into_iter().map(|m| m.candidate).collect()
}
