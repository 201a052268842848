//! Command-line front end: `run`, `bench-broadcast` and `validate`.

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use lmrk_net::{CostModel, Layout};
use lmrk_workflow::{bench_broadcast, bench_csv, execute, write_outputs, RunConfig, WorkflowError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ABORT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lmrk", version, about = "Distributed evolutionary RL experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `[metrics] output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the broadcast delay/traffic table as CSV.
    BenchBroadcast {
        #[arg(long, value_delimiter = ',', default_values_t = [9usize, 25, 100, 400])]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', value_parser = parse_layout, default_value = "flat,tree")]
        layouts: Vec<Layout>,
        /// Cost of one inter-machine hop.
        #[arg(long, default_value_t = 1.0)]
        cost: f64,
    },
    /// Parse a config file and print the effective configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_layout(s: &str) -> Result<Layout, String> {
    match s.trim() {
        "flat" => Ok(Layout::Flat),
        "tree" => Ok(Layout::Tree),
        other => Err(format!("unknown layout {other:?} (expected flat or tree)")),
    }
}

fn exit_code(e: &WorkflowError) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_ABORT
    }
}

/// Run a parsed command. Normal output goes to stdout, diagnostics to stderr.
pub fn dispatch(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run { config, output } => run(&config, output),
        Command::BenchBroadcast { n, layouts, cost } => {
            if n.contains(&0) {
                eprintln!("error: invalid value for `--n`: node counts must be at least 1");
                return EXIT_CONFIG;
            }
            let cost = match CostModel::new(cost, cost, 0.0) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: invalid value for `--cost`: {e}");
                    return EXIT_CONFIG;
                }
            };
            bench_broadcast(&n, &layouts, cost).map(|rows| {
                print!("{}", bench_csv(&rows));
                EXIT_OK
            })
        }
        Command::Validate { config } => RunConfig::load(&config).map(|cfg| {
            print!("{}", cfg.to_toml());
            EXIT_OK
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        exit_code(&e)
    })
}

fn run(path: &std::path::Path, output: Option<PathBuf>) -> Result<i32, WorkflowError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(o) = output {
        cfg.metrics.output = o;
    }
    log::info!("running {:?} with seed {}", cfg.run.mode, cfg.run.seed);
    let out = execute(&cfg)?;
    write_outputs(&out, &cfg.metrics.output)?;
    if let Some(reason) = out.aborted() {
        eprintln!("error: run aborted: {reason}");
        return Ok(EXIT_ABORT);
    }
    log::info!("outputs written to {}", cfg.metrics.output.display());
    Ok(EXIT_OK)
}
