//! Command-line driver for the simulator: scenario files, algorithm and
//! parameter sweeps, CSV output and cross-run summaries.

pub mod output;
pub mod scenario;
pub mod summarize;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hetnet_core::engine::{run, EngineError};
use hetnet_core::{Algorithm, RunLog};
use output::{write_aggregate_csv, write_seed_csv, AggregateRow};
use rayon::prelude::*;
use scenario::{parse_sweep, ScenarioError, ScenarioFile};
use std::ffi::OsString;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BAD_SCENARIO: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

/// Environment variable that overrides the scenario's seed list.
pub const SEED_ENV: &str = "HETNET_SEED";

#[derive(Debug, Parser)]
#[command(name = "hetnet", version, about = "Slot-level multi-band HetNet simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario and write per-slot and aggregate CSVs.
    Run(RunArgs),
    /// Compare completed runs: means and 95% intervals per algorithm.
    Summarize {
        /// Run directories (searched recursively for seed-*.csv).
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file (TOML). Defaults to the reference scenario.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Algorithms to run, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub algo: Vec<Algorithm>,
    #[arg(long)]
    pub slots: Option<u64>,
    /// Seeds, comma separated. Beats HETNET_SEED, which beats the scenario.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Parameter sweep `key=v1,v2,...`; repeat for a grid.
    #[arg(long)]
    pub sweep: Vec<String>,
    /// Record 0 instead of measured decision times (byte-stable output).
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{label}: {source}")]
    Engine { label: String, source: EngineError },
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl RunError {
    fn exit_code(&self) -> i32 {
        match self {
            RunError::Scenario(_) => EXIT_BAD_SCENARIO,
            RunError::Engine {
                source: EngineError::Schedule { .. },
                ..
            } => EXIT_INFEASIBLE,
            RunError::Engine {
                source: EngineError::Model(_),
                ..
            } => EXIT_BAD_SCENARIO,
            _ => EXIT_FAILURE,
        }
    }
}

fn env_seeds() -> Result<Option<Vec<u64>>, ScenarioError> {
    let Ok(raw) = std::env::var(SEED_ENV) else {
        return Ok(None);
    };
    raw.split(',')
        .map(|s| s.trim().parse::<u64>())
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
        .map_err(|e| ScenarioError::Invalid(format!("{SEED_ENV}={raw}: {e}")))
}

/// Cartesian product of the sweeps, each point labelled `k=v;k2=v2`.
fn sweep_points(base: &ScenarioFile, sweeps: &[String]) -> Result<Vec<(String, ScenarioFile)>, ScenarioError> {
    let mut points = vec![(String::new(), base.clone())];
    for sweep in sweeps {
        let (key, values) = parse_sweep(sweep)?;
        let mut next = Vec::new();
        for (label, file) in &points {
            for v in &values {
                let tag = format!("{key}={v}");
                let label = if label.is_empty() {
                    tag
                } else {
                    format!("{label};{tag}")
                };
                next.push((label, file.with(&key, v)?));
            }
        }
        points = next;
    }
    Ok(points)
}

fn point_dir(label: &str) -> String {
    if label.is_empty() {
        "base".into()
    } else {
        label.replace([';', '/', '\\', ' '], "_")
    }
}

fn execute(args: &RunArgs) -> Result<(), RunError> {
    let mut base = match &args.scenario {
        Some(p) => ScenarioFile::load(p)?,
        None => ScenarioFile::default(),
    };
    if let Some(s) = args.slots {
        base.slots = s;
    }
    if !args.seeds.is_empty() {
        base.seeds = args.seeds.clone();
    } else if let Some(s) = env_seeds()? {
        base.seeds = s;
    }
    if base.seeds.is_empty() {
        base.seeds = vec![1];
    }
    let algos = if args.algo.is_empty() {
        vec![base.algorithm]
    } else {
        args.algo.clone()
    };

    let points = sweep_points(&base, &args.sweep)?;
    let mut jobs = Vec::new();
    for (label, file) in &points {
        for &algo in &algos {
            let mut f = file.clone();
            f.algorithm = algo;
            let scenario = f.to_scenario(!args.no_timing)?;
            jobs.push((label.clone(), f, scenario));
        }
    }
    let logs: Vec<RunLog> = jobs
        .par_iter()
        .map(|(label, f, s)| {
            run(s).map_err(|source| RunError::Engine {
                label: format!("{} {}", f.algorithm, point_dir(label)),
                source,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut rows = Vec::new();
    for ((label, file, _), log) in jobs.iter().zip(&logs) {
        let hash = file.hash();
        let dir = args.out.join(point_dir(label)).join(log.algorithm.name());
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let resolved = toml::to_string(file).context("serializing scenario")?;
        std::fs::write(dir.join("scenario.toml"), resolved).context("writing scenario.toml")?;
        for r in &log.runs {
            let comments = [
                ("scenario_hash", hash.clone()),
                ("algorithm", log.algorithm.to_string()),
                ("seed", r.seed.to_string()),
                ("sweep", label.clone()),
            ];
            let path = dir.join(format!("seed-{}.csv", r.seed));
            write_seed_csv(&path, &comments, r).with_context(|| format!("writing {}", path.display()))?;
        }
        rows.push(AggregateRow {
            sweep: label.clone(),
            hash,
            algorithm: log.algorithm,
            seeds: file.seeds.clone(),
            aggregate: log.aggregate(),
        });
    }
    std::fs::create_dir_all(&args.out).context("creating output directory")?;
    let agg = args.out.join("aggregate.csv");
    write_aggregate_csv(&agg, &[("slots", base.slots.to_string())], &rows)
        .with_context(|| format!("writing {}", agg.display()))?;
    Ok(())
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_BAD_SCENARIO } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run(args) => match execute(&args) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Summarize { dirs, out } => {
            let result = summarize::summarize(&dirs).map_err(anyhow::Error::from).and_then(|s| {
                match out {
                    Some(p) => summarize::write_summary(std::fs::File::create(&p)?, &s)?,
                    None => summarize::write_summary(std::io::stdout().lock(), &s)?,
                }
                Ok(())
            });
            match result {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    EXIT_FAILURE
                }
            }
        }
    }
}
