//! Experiment documents.
//!
//! ```json
//! {
//!   "instance": {"graph": {"family": "complete_bipartite", "n_left": 2, "n_right": 2},
//!                "builder": "symmetric_coordination"},
//!   "schedule": {"kind": "max_degree", "alpha": 0.5},
//!   "init": {"kind": "random"},
//!   "trials": 100,
//!   "max_steps": 100000,
//!   "master_seed": 7
//! }
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use lazydyn::analysis::{balanced_bipartite_config, Orientation};
use lazydyn::dynamics::{ActivationSchedule, ResponseRule, ScheduleKind, DEFAULT_MAX_STEPS};
use lazydyn::game::{GraphSource, InstanceFile};
use lazydyn::rng::SimRng;
use lazydyn::{tightness_network, Configuration, GameInstance, StandardFamily};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Run,
    Sweep,
    DriftCheck,
    Oracle,
    Lowerbound,
    FrontierCheck,
    GenGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitSpec {
    /// Every node plays `strategy`.
    Monochromatic {
        #[serde(default)]
        strategy: usize,
    },
    /// Majority split of `K_{n,n}` for the constant schedule's `p`.
    BalancedBipartite {
        #[serde(default)]
        orientation: Orientation,
    },
    /// Black clique, white paths on the tightness network.
    TightnessDefault,
    Explicit {
        config: Configuration,
    },
    /// JSON array of strategies.
    File {
        path: PathBuf,
    },
    /// Uniform strategies; a fresh draw per trial unless `seed` is set.
    Random {
        #[serde(default)]
        seed: Option<u64>,
    },
}

impl Default for InitSpec {
    fn default() -> Self {
        Self::Random { seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// The schedule's `α` (or `p` for the constant schedule).
    Alpha,
    /// The size parameter of the graph family.
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSpec {
    pub n: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub instance: Option<InstanceFile>,
    /// Path to an instance document, relative to the spec.
    #[serde(default)]
    pub instance_file: Option<PathBuf>,
    #[serde(default)]
    pub schedule: Option<ActivationSchedule>,
    #[serde(default)]
    pub rule: ResponseRule,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub lower_bound: Option<LowerBoundSpec>,
    /// Monte Carlo samples per configuration when too many nodes are
    /// unstable for enumeration.
    #[serde(default = "default_samples")]
    pub drift_samples: usize,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn default_trials() -> u64 {
    1
}

fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}

fn default_samples() -> usize {
    10_000
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut spec: Self =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        spec.base_dir = path.parent().map(Path::to_path_buf);
        Ok(spec)
    }

    pub fn master_seed(&self) -> Result<u64> {
        self.master_seed.context("master_seed is required")
    }

    pub fn schedule(&self) -> Result<ActivationSchedule> {
        self.schedule.context("schedule is required")
    }

    pub fn instance_file(&self) -> Result<InstanceFile> {
        match (&self.instance, &self.instance_file) {
            (Some(doc), None) => Ok(doc.clone()),
            (None, Some(path)) => {
                let path = self.resolve(path);
                Ok(InstanceFile::load(&path)?)
            }
            (Some(_), Some(_)) => bail!("give either instance or instance_file, not both"),
            (None, None) => bail!("instance is required"),
        }
    }

    pub fn build_instance(&self) -> Result<GameInstance> {
        Ok(self.instance_file()?.build(self.base_dir.as_deref())?)
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// Checks everything a command needs before anything runs.
    pub fn validate(&self, command: Command) -> Result<()> {
        self.master_seed()?;
        if command == Command::Lowerbound {
            let lb = self
                .lower_bound
                .as_ref()
                .context("lower_bound {n, p} is required")?;
            ensure!(
                lb.n >= 1 && lb.p > 0.0 && lb.p <= 1.0,
                "lower_bound needs n >= 1 and 0 < p <= 1"
            );
            ensure!(self.trials >= 1, "trials must be at least 1");
            return Ok(());
        }
        let instance = self.build_instance()?;
        if command == Command::GenGraph || command == Command::FrontierCheck {
            return Ok(());
        }
        let schedule = self.schedule()?;
        schedule.validate_for(&instance)?;
        match command {
            Command::Run | Command::Sweep => {
                ensure!(self.trials >= 1, "trials must be at least 1");
                ensure!(self.max_steps >= 1, "max_steps must be at least 1");
            }
            Command::DriftCheck => {
                ensure!(self.drift_samples >= 2, "drift_samples must be at least 2")
            }
            _ => {}
        }
        if command == Command::Sweep {
            let sweep = self
                .sweep
                .as_ref()
                .context("sweep {parameter, values} is required")?;
            ensure!(!sweep.values.is_empty(), "sweep needs at least one value");
            for &v in &sweep.values {
                self.with_sweep_value(&sweep.parameter, v)?;
            }
        } else if command != Command::DriftCheck {
            self.initial_config(&instance, &mut lazydyn::rng::rng_from_seed(0))?;
        }
        Ok(())
    }

    /// Copy of the spec with one sweep parameter substituted.
    pub fn with_sweep_value(&self, parameter: &SweepParameter, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match parameter {
            SweepParameter::Alpha => {
                let mut schedule = self.schedule()?;
                match &mut schedule.kind {
                    ScheduleKind::Constant { p } => *p = value,
                    ScheduleKind::MaxDegree { alpha }
                    | ScheduleKind::LocalDegree { alpha }
                    | ScheduleKind::Adaptive { alpha }
                    | ScheduleKind::PotentialWeighted { alpha } => *alpha = value,
                    ScheduleKind::NeighborhoodMax { alpha_high, .. } => *alpha_high = value,
                }
                out.schedule = Some(schedule);
            }
            SweepParameter::N => {
                ensure!(
                    value >= 1.0 && value.fract() == 0.0,
                    "sweep size {value} is not a positive integer"
                );
                let n = value as usize;
                let mut doc = self.instance_file()?;
                let GraphSource::Family(family) = &mut doc.graph else {
                    bail!("size sweeps need a generator family graph");
                };
                match family {
                    StandardFamily::Path { n: m }
                    | StandardFamily::Cycle { n: m }
                    | StandardFamily::Clique { n: m }
                    | StandardFamily::Star { n: m }
                    | StandardFamily::ErdosRenyi { n: m, .. } => *m = n,
                    StandardFamily::Grid { width, height } => (*width, *height) = (n, n),
                    StandardFamily::CompleteBipartite { n_left, n_right } => {
                        (*n_left, *n_right) = (n, n)
                    }
                    StandardFamily::Tightness { r } => *r = n,
                }
                out.instance = Some(doc);
                out.instance_file = None;
            }
        }
        Ok(out)
    }

    /// Whether every trial draws its own initial configuration.
    pub fn per_trial_init(&self) -> bool {
        matches!(self.init, InitSpec::Random { seed: None })
    }

    /// The starting configuration; per-trial random starts draw from `rng`.
    pub fn initial_config(
        &self,
        instance: &GameInstance,
        rng: &mut SimRng,
    ) -> Result<Configuration> {
        let n = instance.node_count();
        let random = |rng: &mut SimRng| {
            Configuration::new(
                (0..n)
                    .map(|u| rng.random_range(0..instance.strategy_count(u)))
                    .collect(),
            )
        };
        let config = match &self.init {
            InitSpec::Monochromatic { strategy } => Configuration::new(
                (0..n)
                    .map(|u| (*strategy).min(instance.strategy_count(u) - 1))
                    .collect(),
            ),
            InitSpec::BalancedBipartite { orientation } => {
                let doc = self.instance_file()?;
                let GraphSource::Family(StandardFamily::CompleteBipartite { n_left, n_right }) =
                    doc.graph
                else {
                    bail!("balanced_bipartite needs a complete_bipartite graph");
                };
                ensure!(n_left == n_right, "balanced_bipartite needs equal sides");
                let p = match self.schedule()?.kind {
                    ScheduleKind::Constant { p } => p,
                    _ => bail!("balanced_bipartite is defined for the constant schedule"),
                };
                balanced_bipartite_config(n_left, p, *orientation)?
            }
            InitSpec::TightnessDefault => {
                let doc = self.instance_file()?;
                let GraphSource::Family(StandardFamily::Tightness { r }) = doc.graph else {
                    bail!("tightness_default needs a tightness graph");
                };
                Configuration::new(tightness_network(r)?.initial)
            }
            InitSpec::Explicit { config } => config.clone(),
            InitSpec::File { path } => {
                let path = self.resolve(path);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing {}", path.display()))?
            }
            InitSpec::Random { seed: Some(seed) } => {
                random(&mut lazydyn::rng::rng_from_seed(*seed))
            }
            InitSpec::Random { seed: None } => random(rng),
        };
        instance.validate_config(&config)?;
        Ok(config)
    }
}
