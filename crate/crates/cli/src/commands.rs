//! One function per subcommand. Each returns the files to write and a
//! summary document; nothing here touches the filesystem.

use anyhow::{bail, Context, Result};
use lazydyn::analysis::{
    exact_drift, exact_hitting_time, frontier_check_with, lower_bound_experiment, mc_drift,
    theorem_bound, AnalysisError, StateSpace,
};
use lazydyn::dynamics::Simulation;
use lazydyn::game::GraphSource;
use lazydyn::report::csv_string;
use lazydyn::rng::{rng_from_seed, trial_seed};
use lazydyn::{stats, tightness_network, Configuration, GameInstance, StandardFamily};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::spec::{Command, ExperimentSpec};

/// Enumerating every configuration is limited to this many states.
const DRIFT_STATE_CAP: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub summary: Value,
    /// `(file name, CSV body)`; bodies carry no metadata.
    pub tables: Vec<(String, String)>,
    /// Set when a check ran to completion and failed.
    pub failure: Option<String>,
}

impl Outcome {
    fn new(summary: Value) -> Self {
        Self {
            summary,
            tables: Vec::new(),
            failure: None,
        }
    }

    fn table<S: Serialize>(mut self, name: &str, rows: &[S]) -> Result<Self> {
        self.tables.push((name.to_string(), csv_string(rows)?));
        Ok(self)
    }
}

pub fn execute(command: Command, spec: &ExperimentSpec) -> Result<Outcome> {
    match command {
        Command::Run => run(spec),
        Command::Sweep => sweep(spec),
        Command::DriftCheck => drift_check(spec),
        Command::Oracle => oracle(spec),
        Command::Lowerbound => lowerbound(spec),
        Command::FrontierCheck => frontier(spec),
        Command::GenGraph => gen_graph(spec),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub trial: u64,
    pub seed: u64,
    pub converged: bool,
    pub steps: u64,
    pub m0: Option<usize>,
    #[serde(rename = "M0")]
    pub big_m0: i64,
    pub final_potential: i64,
}

#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    trial: u64,
    step: u64,
    potential: i64,
}

fn run_trials(spec: &ExperimentSpec) -> Result<(Vec<TrialRow>, Vec<TraceRow>, Value)> {
    let instance = spec.build_instance()?;
    let schedule = spec.schedule()?;
    let master = spec.master_seed()?;
    let sim = Simulation::new(&instance, schedule, spec.rule)?;
    let trace = spec.outputs.trace;

    let mut warnings = Vec::new();
    if !spec.per_trial_init() {
        let init = spec.initial_config(&instance, &mut rng_from_seed(master))?;
        warnings = schedule.window_warnings(&instance, &init);
        for w in &warnings {
            log::warn!("{w}");
        }
    }

    let results: Result<Vec<(TrialRow, Option<Vec<i64>>)>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(master, trial);
            let mut rng = rng_from_seed(seed);
            let init = spec.initial_config(&instance, &mut rng)?;
            let m0 = instance
                .is_coordination()
                .then(|| instance.conflicting_edges(&init));
            let result = sim.run_observed(init, &mut rng, spec.max_steps, trace, |_, _, _| {})?;
            let row = TrialRow {
                trial,
                seed,
                converged: result.converged,
                steps: result.steps,
                m0,
                big_m0: result.initial_potential,
                final_potential: result.final_potential,
            };
            Ok((row, result.potential_trace))
        })
        .collect();
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (row, trace) in results? {
        for (step, potential) in trace.into_iter().flatten().enumerate() {
            traces.push(TraceRow {
                trial: row.trial,
                step: step as u64,
                potential,
            });
        }
        rows.push(row);
    }

    let steps: Vec<f64> = rows.iter().map(|r| r.steps as f64).collect();
    let converged = rows.iter().filter(|r| r.converged).count();
    let mean_m0 = instance.is_coordination().then(|| {
        stats::mean(
            &rows
                .iter()
                .map(|r| r.m0.unwrap_or(0) as f64)
                .collect::<Vec<_>>(),
        )
    });
    let mean_big_m0 = stats::mean(&rows.iter().map(|r| r.big_m0 as f64).collect::<Vec<_>>());
    let summary = json!({
        "trials": rows.len(),
        "converged": converged,
        "convergence_rate": converged as f64 / rows.len() as f64,
        "mean_steps": stats::mean(&steps),
        "median_steps": stats::median(&steps),
        "std_error_steps": stats::std_error(&steps),
        "mean_m0": mean_m0,
        "mean_M0": mean_big_m0,
        "theorem_bound": bound_summary(&instance, spec, mean_m0.unwrap_or(mean_big_m0))?,
        "window_warnings": warnings,
    });
    Ok((rows, traces, summary))
}

fn bound_summary(instance: &GameInstance, spec: &ExperimentSpec, m0: f64) -> Result<Value> {
    let schedule = spec.schedule()?;
    let (Some(theorem), Some(window)) = (schedule.theorem(instance), schedule.window()) else {
        return Ok(json!({"available": false, "reason": "schedule has no probability window"}));
    };
    Ok(
        match theorem_bound(theorem, instance, m0, window.p, window.q) {
            Ok(b) => {
                json!({"available": true, "theorem": b.theorem, "value": b.value, "delta": b.delta,
                        "stated_value": b.stated_value, "p": window.p, "q": window.q})
            }
            Err(e) => json!({"available": false, "reason": e.to_string()}),
        },
    )
}

fn run(spec: &ExperimentSpec) -> Result<Outcome> {
    let (rows, traces, mut summary) = run_trials(spec)?;
    summary["command"] = json!("run");
    summary["master_seed"] = json!(spec.master_seed()?);
    let mut out = Outcome::new(summary).table("trials.csv", &rows)?;
    if spec.outputs.trace {
        out = out.table("trace.csv", &traces)?;
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct SweepRow {
    value: f64,
    trials: u64,
    converged: u64,
    mean_steps: f64,
    median_steps: f64,
    std_error_steps: Option<f64>,
    theorem_bound: Option<f64>,
}

fn sweep(spec: &ExperimentSpec) -> Result<Outcome> {
    let sweep = spec.sweep.as_ref().context("sweep is required")?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &value in &sweep.values {
        let point = spec.with_sweep_value(&sweep.parameter, value)?;
        let (_, _, summary) = run_trials(&point)?;
        rows.push(SweepRow {
            value,
            trials: summary["trials"].as_u64().unwrap_or(0),
            converged: summary["converged"].as_u64().unwrap_or(0),
            mean_steps: summary["mean_steps"].as_f64().unwrap_or(f64::NAN),
            median_steps: summary["median_steps"].as_f64().unwrap_or(f64::NAN),
            std_error_steps: summary["std_error_steps"].as_f64(),
            theorem_bound: summary["theorem_bound"]["value"].as_f64(),
        });
        points.push(json!({"value": value, "summary": summary}));
    }
    let summary = json!({"command": "sweep", "parameter": sweep.parameter, "points": points});
    Outcome::new(summary).table("sweep.csv", &rows)
}

#[derive(Debug, Serialize)]
struct DriftRow {
    config: String,
    unstable: usize,
    exact: bool,
    drift: f64,
    std_error: Option<f64>,
    bound: Option<f64>,
    within_bound: Option<bool>,
}

fn drift_check(spec: &ExperimentSpec) -> Result<Outcome> {
    let instance = spec.build_instance()?;
    let schedule = spec.schedule()?;
    let master = spec.master_seed()?;
    let configs: Vec<Configuration> =
        match StateSpace::new(instance.strategy_counts(), DRIFT_STATE_CAP) {
            Ok(space) => (0..space.size()).map(|i| space.decode(i)).collect(),
            Err(_) => vec![spec.initial_config(&instance, &mut rng_from_seed(master))?],
        };
    let rows: Result<Vec<DriftRow>> = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let report = match exact_drift(&instance, c, &schedule, spec.rule) {
                Err(AnalysisError::TooManyUnstable { .. }) => {
                    let mut rng = rng_from_seed(trial_seed(master, i as u64));
                    mc_drift(
                        &instance,
                        c,
                        &schedule,
                        spec.rule,
                        spec.drift_samples,
                        &mut rng,
                    )?
                }
                other => other?,
            };
            let slack = if report.exact {
                1e-12
            } else {
                3.0 * report.std_error.unwrap_or(0.0)
            };
            Ok(DriftRow {
                config: c.to_string(),
                unstable: report.unstable_count,
                exact: report.exact,
                drift: report.drift,
                std_error: report.std_error,
                bound: report.bound.map(|b| b.bound),
                within_bound: report.within_bound(slack),
            })
        })
        .collect();
    let rows = rows?;
    let violations: Vec<&str> = rows
        .iter()
        .filter(|r| r.within_bound == Some(false))
        .map(|r| r.config.as_str())
        .collect();
    let moving: Vec<&DriftRow> = rows.iter().filter(|r| r.unstable > 0).collect();
    let summary = json!({
        "command": "drift-check",
        "configs": rows.len(),
        "non_equilibrium": moving.len(),
        "bounded": moving.iter().filter(|r| r.bound.is_some()).count(),
        "violations": violations.len(),
        "delta_min": moving.iter().map(|r| -r.drift).reduce(f64::min),
        "theorem": schedule.theorem(&instance),
        "window": schedule.window(),
    });
    let failure = (!violations.is_empty()).then(|| {
        format!(
            "drift bound violated in {} configurations, first {}",
            violations.len(),
            violations[0]
        )
    });
    let mut out = Outcome::new(summary).table("drift.csv", &rows)?;
    out.failure = failure;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct OracleRow {
    state: usize,
    config: String,
    potential: i64,
    expected_steps: f64,
}

fn oracle(spec: &ExperimentSpec) -> Result<Outcome> {
    let instance = spec.build_instance()?;
    let schedule = spec.schedule()?;
    let init = spec.initial_config(&instance, &mut rng_from_seed(spec.master_seed()?))?;
    let times = exact_hitting_time(&instance, &schedule, spec.rule, Some(&init))?;
    let rows: Vec<OracleRow> = times
        .expected_steps
        .iter()
        .enumerate()
        .map(|(state, &e)| {
            let c = times.space.decode(state);
            OracleRow {
                state,
                potential: instance.total_potential(&c),
                config: c.to_string(),
                expected_steps: e,
            }
        })
        .collect();

    // δ_min over non-equilibrium configurations, when enumeration allows it
    let mut delta_min: Option<f64> = None;
    for state in 0..times.space.size() {
        let c = times.space.decode(state);
        match exact_drift(&instance, &c, &schedule, spec.rule) {
            Ok(r) if !r.equilibrium => {
                delta_min = Some(delta_min.map_or(-r.drift, |d: f64| d.min(-r.drift)))
            }
            Ok(_) => {}
            Err(AnalysisError::TooManyUnstable { .. }) => {
                delta_min = None;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let expected = times.from_init.expect("init given");
    let big_m0 = instance.total_potential(&init) as f64;
    let potential_bound = delta_min.filter(|&d| d > 0.0).map(|d| big_m0 / d);
    let failure = potential_bound
        .filter(|&b| expected > b * (1.0 + 1e-9))
        .map(|b| format!("E[T] = {expected} exceeds M0/delta_min = {b}"));
    let m0 = instance
        .is_coordination()
        .then(|| instance.conflicting_edges(&init) as f64);
    let summary = json!({
        "command": "oracle",
        "init": init.to_string(),
        "expected_steps": expected,
        "state_count": times.space.size(),
        "equilibria": times.equilibria.len(),
        "M0": big_m0,
        "delta_min": delta_min,
        "potential_bound": potential_bound,
        "theorem_bound": bound_summary(&instance, spec, m0.unwrap_or(big_m0))?,
    });
    let mut out = Outcome::new(summary).table("oracle.csv", &rows)?;
    out.failure = failure;
    Ok(out)
}

#[derive(Debug, Serialize)]
struct LowerBoundRow {
    trial: u64,
    seed: u64,
    converged: bool,
    steps: u64,
    cycle_broken_at: Option<u64>,
    survived: u64,
}

#[derive(Debug, Serialize)]
struct SurvivalRow {
    step: u64,
    fraction: f64,
}

fn lowerbound(spec: &ExperimentSpec) -> Result<Outcome> {
    let lb = spec
        .lower_bound
        .as_ref()
        .context("lower_bound is required")?;
    let report =
        lower_bound_experiment(lb.n, lb.p, spec.max_steps, spec.trials, spec.master_seed()?)?;
    let rows: Vec<LowerBoundRow> = report
        .trials
        .iter()
        .map(|t| LowerBoundRow {
            trial: t.trial,
            seed: t.seed,
            converged: t.converged,
            steps: t.steps,
            cycle_broken_at: t.cycle_broken_at,
            survived: t.survived(),
        })
        .collect();
    let curve: Vec<SurvivalRow> = report
        .survival_curve
        .iter()
        .map(|&(step, fraction)| SurvivalRow { step, fraction })
        .collect();
    let summary = json!({
        "command": "lowerbound",
        "params": report.params,
        "max_steps": report.max_steps,
        "trials": rows.len(),
        "converged_fraction": report.converged_fraction,
        "cycle_always_fraction": report.cycle_always_fraction,
        "mean_survival": report.mean_survival,
        "analytic_fail_bound_per_step": report.params.fail_bound,
    });
    Outcome::new(summary)
        .table("lowerbound.csv", &rows)?
        .table("survival.csv", &curve)
}

fn frontier(spec: &ExperimentSpec) -> Result<Outcome> {
    let doc = spec.instance_file()?;
    let GraphSource::Family(StandardFamily::Tightness { r }) = doc.graph else {
        bail!("frontier-check needs a tightness graph");
    };
    let net = tightness_network(r)?;
    let seed = trial_seed(spec.master_seed()?, 0);
    let result = frontier_check_with(&net.graph, &net.initial, &net.part_labels, 5, seed);
    Ok(match result {
        Ok(report) => Outcome::new(
            json!({"command": "frontier-check", "r": r, "passed": true, "report": report}),
        ),
        Err(AnalysisError::Frontier(msg)) => {
            let mut out = Outcome::new(
                json!({"command": "frontier-check", "r": r, "passed": false, "reason": msg}),
            );
            out.failure = Some(msg);
            out
        }
        Err(e) => return Err(e.into()),
    })
}

fn gen_graph(spec: &ExperimentSpec) -> Result<Outcome> {
    let graph = spec
        .instance_file()?
        .graph
        .build(spec.base_dir.as_deref())?;
    let mut out = Outcome::new(json!({
        "command": "gen-graph",
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "max_degree": graph.max_degree(),
    }));
    out.tables
        .push(("graph.edgelist".into(), graph.to_edge_list()));
    Ok(out)
}
