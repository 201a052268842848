use std::path::Path;

use crate::error::WorkflowError;

pub const METRICS_HEADER: [&str; 9] = [
    "wall_time_s",
    "frames",
    "fps",
    "staleness_mean",
    "score_mean",
    "generation",
    "obj_min",
    "obj_mean",
    "obj_max",
];

/// Per-objective statistics over a population.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveStats {
    pub min: Vec<f64>,
    pub mean: Vec<f64>,
    pub max: Vec<f64>,
}

impl ObjectiveStats {
    pub fn of(objectives: &[&[f64]]) -> Option<Self> {
        let k = objectives.first()?.len();
        let n = objectives.len() as f64;
        let mut s = ObjectiveStats {
            min: vec![f64::INFINITY; k],
            mean: vec![0.0; k],
            max: vec![f64::NEG_INFINITY; k],
        };
        for o in objectives {
            for j in 0..k {
                s.min[j] = s.min[j].min(o[j]);
                s.max[j] = s.max[j].max(o[j]);
                s.mean[j] += o[j] / n;
            }
        }
        Some(s)
    }
}

/// One reporting window. `time` is simulated seconds on the simulated
/// transport and wall-clock seconds on sockets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsRow {
    pub time: f64,
    pub frames: u64,
    pub fps: Option<f64>,
    pub staleness_mean: Option<f64>,
    pub score_mean: Option<f64>,
    pub generation: Option<u64>,
    pub objectives: Option<ObjectiveStats>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// several objectives share one column, separated by ';'
fn joined(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

impl MetricsRow {
    fn record(&self) -> [String; 9] {
        let (lo, mean, hi) = match &self.objectives {
            Some(s) => (joined(&s.min), joined(&s.mean), joined(&s.max)),
            None => Default::default(),
        };
        [
            self.time.to_string(),
            self.frames.to_string(),
            opt(self.fps),
            opt(self.staleness_mean),
            opt(self.score_mean),
            self.generation.map(|g| g.to_string()).unwrap_or_default(),
            lo,
            mean,
            hi,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunMetrics {
    pub rows: Vec<MetricsRow>,
    /// Frames consumed by learners (or spent in evaluations).
    pub total_frames: u64,
    pub end_time: f64,
    pub staleness_sum: f64,
    pub staleness_count: u64,
    pub gradient_steps: u64,
    /// Mean total reward of the last ten episodes seen.
    pub final_score: Option<f64>,
    /// Set when the run stopped early; rows up to the failure are kept.
    pub aborted: Option<String>,
}

impl RunMetrics {
    pub fn staleness_mean(&self) -> Option<f64> {
        (self.staleness_count > 0).then(|| self.staleness_sum / self.staleness_count as f64)
    }

    /// Frames per second over the whole run.
    pub fn fps(&self) -> f64 {
        if self.end_time > 0.0 {
            self.total_frames as f64 / self.end_time
        } else {
            0.0
        }
    }

    pub fn to_csv(&self) -> Result<String, WorkflowError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| WorkflowError::Runtime(format!("csv: {e}"));
        w.write_record(METRICS_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.record()).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| WorkflowError::Runtime(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), WorkflowError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

/// Rolling reporter for streaming runs: emits a row at every multiple of the
/// interval, describing the window that just closed.
#[derive(Debug, Clone)]
pub struct Reporter {
    interval: f64,
    next: f64,
    last_time: f64,
    last_frames: u64,
    st_sum: f64,
    st_n: u64,
    scores: Vec<f64>,
}

pub const SCORE_WINDOW: usize = 10;

impl Reporter {
    pub fn new(interval: f64) -> Self {
        Reporter {
            interval,
            next: interval,
            last_time: 0.0,
            last_frames: 0,
            st_sum: 0.0,
            st_n: 0,
            scores: Vec::new(),
        }
    }

    pub fn staleness(&mut self, values: impl IntoIterator<Item = f64>, metrics: &mut RunMetrics) {
        for s in values {
            self.st_sum += s;
            self.st_n += 1;
            metrics.staleness_sum += s;
            metrics.staleness_count += 1;
        }
    }

    pub fn episode(&mut self, total_reward: f64) {
        self.scores.push(total_reward);
        if self.scores.len() > SCORE_WINDOW {
            self.scores.remove(0);
        }
    }

    pub fn score(&self) -> Option<f64> {
        (!self.scores.is_empty()).then(|| self.scores.iter().sum::<f64>() / self.scores.len() as f64)
    }

    fn emit(&mut self, at: f64, metrics: &mut RunMetrics) {
        let dt = at - self.last_time;
        let df = metrics.total_frames - self.last_frames;
        metrics.rows.push(MetricsRow {
            time: at,
            frames: metrics.total_frames,
            fps: (dt > 0.0).then(|| df as f64 / dt),
            staleness_mean: (self.st_n > 0).then(|| self.st_sum / self.st_n as f64),
            score_mean: self.score(),
            generation: None,
            objectives: None,
        });
        self.last_time = at;
        self.last_frames = metrics.total_frames;
        self.st_sum = 0.0;
        self.st_n = 0;
    }

    /// Emit rows for every boundary strictly before `now`.
    pub fn advance(&mut self, now: f64, metrics: &mut RunMetrics) {
        while self.next < now {
            let at = self.next;
            self.emit(at, metrics);
            self.next = at + self.interval;
        }
    }

    /// Close the run at `now` with a final (possibly partial) window.
    pub fn finish(&mut self, now: f64, metrics: &mut RunMetrics) {
        self.advance(now, metrics);
        if now > self.last_time || metrics.rows.is_empty() {
            self.emit(now, metrics);
        }
        metrics.end_time = now;
        metrics.final_score = self.score();
    }
}
