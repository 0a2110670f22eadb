//! Batch experiment runner: reads an experiment document, applies
//! command-line overrides, runs the command and writes CSV tables plus a
//! `summary.json`.

pub mod commands;
pub mod spec;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::Parser;

pub use commands::{execute, Outcome, TrialRow};
pub use spec::{Command, ExperimentSpec, InitSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SPEC_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

const AFTER_HELP: &str = "\
Output tables (RFC 4180, header row, first line a '#' metadata comment):
  run         trials.csv      trial,seed,converged,steps,m0,M0,final_potential
              trace.csv       trial,step,potential (with --trace)
  sweep       sweep.csv       value,trials,converged,mean_steps,median_steps,std_error_steps,theorem_bound
  drift-check drift.csv       config,unstable,exact,drift,std_error,bound,within_bound
  oracle      oracle.csv      state,config,potential,expected_steps
  lowerbound  lowerbound.csv  trial,seed,converged,steps,cycle_broken_at,survived
              survival.csv    step,fraction
  gen-graph   graph.edgelist  one 'u v' pair per line

Exit status: 0 success, 1 invalid spec or input, 2 check failed.
Every flag can also be set through LAZYDYN_<FLAG>, e.g. LAZYDYN_SEED.";

#[derive(Debug, Parser)]
#[command(name = "lazydyn", version, about = "Independent better-response dynamics experiments", after_help = AFTER_HELP)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Experiment document (JSON).
    #[arg(long, env = "LAZYDYN_SPEC")]
    pub spec: PathBuf,
    /// Master seed; per-trial seeds derive from it.
    #[arg(long, env = "LAZYDYN_SEED")]
    pub seed: Option<u64>,
    /// Output directory; the summary goes to stdout either way.
    #[arg(long, env = "LAZYDYN_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "LAZYDYN_TRIALS")]
    pub trials: Option<u64>,
    #[arg(long, env = "LAZYDYN_MAX_STEPS")]
    pub max_steps: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, env = "LAZYDYN_WORKERS")]
    pub workers: Option<usize>,
    /// Record the potential after every step.
    #[arg(long, env = "LAZYDYN_TRACE")]
    pub trace: bool,
}

impl Cli {
    /// The spec with every given flag applied on top.
    pub fn resolve_spec(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::load(&self.spec)?;
        if let Some(c) = spec.command.filter(|&c| c != self.command) {
            log::warn!("spec names command {c:?}; running {:?}", self.command);
        }
        spec.command = Some(self.command);
        if let Some(seed) = self.seed {
            spec.master_seed = Some(seed);
        }
        if let Some(trials) = self.trials {
            spec.trials = trials;
        }
        if let Some(max_steps) = self.max_steps {
            spec.max_steps = max_steps;
        }
        if let Some(out) = &self.out {
            spec.outputs.dir = Some(out.clone());
        }
        spec.outputs.trace |= self.trace;
        Ok(spec)
    }
}

/// Validates and runs `command`, returning the process exit status.
pub fn run_command(
    command: Command,
    spec: &ExperimentSpec,
    workers: Option<usize>,
) -> Result<(Outcome, i32)> {
    spec.validate(command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let outcome = pool.install(|| execute(command, spec))?;
    if let Some(dir) = &spec.outputs.dir {
        write_outputs(dir, command, spec, &outcome)?;
    }
    let code = if outcome.failure.is_some() {
        EXIT_CHECK_FAILED
    } else {
        EXIT_OK
    };
    Ok((outcome, code))
}

/// `#` comment line placed before every table; the only place a timestamp
/// appears.
pub fn metadata_line(command: Command, spec: &ExperimentSpec) -> String {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!(
        "# lazydyn {} command={} master_seed={} generated_unix={now}\n",
        env!("CARGO_PKG_VERSION"),
        serde_json::to_value(command)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default(),
        spec.master_seed.map_or("none".into(), |s| s.to_string()),
    )
}

pub fn write_outputs(
    dir: &Path,
    command: Command,
    spec: &ExperimentSpec,
    outcome: &Outcome,
) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let header = metadata_line(command, spec);
    for (name, body) in &outcome.tables {
        let path = dir.join(name);
        let mut file =
            std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        file.write_all(header.as_bytes())?;
        file.write_all(body.as_bytes())?;
    }
    let summary = serde_json::to_string_pretty(&outcome.summary)?;
    std::fs::write(dir.join("summary.json"), summary + "\n")?;
    Ok(())
}

/// Table body with the metadata comment stripped.
pub fn table_body(contents: &str) -> &str {
    match contents.strip_prefix('#') {
        Some(rest) => rest.split_once('\n').map_or("", |(_, body)| body),
        None => contents,
    }
}

pub fn main_with(cli: Cli) -> i32 {
    let result = cli
        .resolve_spec()
        .and_then(|spec| run_command(cli.command, &spec, cli.workers));
    match result {
        Ok((outcome, code)) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&outcome.summary).unwrap_or_default()
            );
            if let Some(msg) = &outcome.failure {
                eprintln!("check failed: {msg}");
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_SPEC_ERROR
        }
    }
}
