//! The cycling construction on complete bipartite graphs: with a constant
//! activation probability `p` and a fraction `α = 1/(2-p)` of each side
//! holding the side's majority color, the two sides keep swapping colors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::dynamics::{ActivationSchedule, ResponseRule, Simulation};
use crate::game::{Configuration, GameInstance};
use crate::graph::Graph;
use crate::rng::{rng_from_seed, trial_seed};
use crate::stats;

const CYCLE_TOLERANCE: f64 = 1e-12;
const CURVE_POINTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleParams {
    pub n: usize,
    pub p: f64,
    pub alpha: f64,
    pub eps: f64,
    pub delta_ch: f64,
    pub mu: f64,
    /// Per-step bound `4 exp(-δ²μ/3)` on leaving the cycle.
    pub fail_bound: f64,
}

impl CycleParams {
    /// `[(1-ε)α, (1+ε)α]`.
    pub fn interval(&self) -> (f64, f64) {
        ((1.0 - self.eps) * self.alpha, (1.0 + self.eps) * self.alpha)
    }

    /// `δ²μ`, which the analysis shows to exceed `p³n/24`.
    pub fn exponent(&self) -> f64 {
        self.delta_ch * self.delta_ch * self.mu
    }
}

pub fn cycle_params(n: usize, p: f64) -> Result<CycleParams, AnalysisError> {
    if !(p > 0.0 && p <= 1.0) || n == 0 {
        return Err(AnalysisError::InvalidParameter(format!(
            "need 0 < p <= 1 and n >= 1, got p={p}, n={n}"
        )));
    }
    let alpha = 1.0 / (2.0 - p);
    let beta = 1.0 - alpha * (1.0 - p);
    assert!(
        (beta - alpha).abs() <= 1e-15,
        "α must be a fixed point of the majority map"
    );
    let eps = p / 3.0;
    let delta_ch = eps / (1.0 + eps);
    let mu = p * (1.0 + eps) * alpha * n as f64;
    Ok(CycleParams {
        n,
        p,
        alpha,
        eps,
        delta_ch,
        mu,
        fail_bound: 4.0 * (-delta_ch * delta_ch * mu / 3.0).exp(),
    })
}

/// Which color the left side's majority holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Left majority white (1), right majority black (0).
    #[default]
    LeftWhite,
    LeftBlack,
}

fn assign(n: usize, k: usize, orientation: Orientation) -> Configuration {
    let (major_l, major_r) = match orientation {
        Orientation::LeftWhite => (1, 0),
        Orientation::LeftBlack => (0, 1),
    };
    let side = |major: usize| (0..n).map(move |i| if i < k { major } else { 1 - major });
    Configuration::new(side(major_l).chain(side(major_r)).collect())
}

/// `round(αn)` nodes of each side hold the side's majority color; left
/// nodes are `0..n`, right nodes `n..2n`.
pub fn balanced_bipartite_config(
    n: usize,
    p: f64,
    orientation: Orientation,
) -> Result<Configuration, AnalysisError> {
    let params = cycle_params(n, p)?;
    let k = (params.alpha * n as f64).round() as usize;
    if 2 * k <= n || (k == n && params.alpha < 1.0) {
        return Err(AnalysisError::InvalidParameter(format!(
            "rounding α·n = {} to {k} of {n} does not give a proper majority",
            params.alpha * n as f64
        )));
    }
    Ok(assign(n, k, orientation))
}

/// Whether some color `c` has a left fraction and `1-c` a right fraction
/// both inside `[(1-ε)α, (1+ε)α]`.
pub fn cycle_holds(
    config: &Configuration,
    n_left: usize,
    n_right: usize,
    params: &CycleParams,
) -> bool {
    let s = config.as_slice();
    let white_l = s[..n_left].iter().filter(|&&x| x == 1).count();
    let white_r = s[n_left..n_left + n_right]
        .iter()
        .filter(|&&x| x == 1)
        .count();
    let (lo, hi) = params.interval();
    let inside = |count: usize, total: usize| {
        let f = count as f64 / total as f64;
        f >= lo - CYCLE_TOLERANCE && f <= hi + CYCLE_TOLERANCE
    };
    (inside(white_l, n_left) && inside(n_right - white_r, n_right))
        || (inside(n_left - white_l, n_left) && inside(white_r, n_right))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundTrial {
    pub trial: u64,
    pub seed: u64,
    pub converged: bool,
    pub steps: u64,
    /// First step after which the cycle condition failed (0: at the start).
    pub cycle_broken_at: Option<u64>,
}

impl LowerBoundTrial {
    /// Steps through which the cycle condition held.
    pub fn survived(&self) -> u64 {
        self.cycle_broken_at
            .map_or(self.steps, |t| t.saturating_sub(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub params: CycleParams,
    pub max_steps: u64,
    pub trials: Vec<LowerBoundTrial>,
    /// `(t, fraction of trials whose cycle held through step t)`.
    pub survival_curve: Vec<(u64, f64)>,
    pub mean_survival: f64,
    pub converged_fraction: f64,
    /// Fraction of trials where the cycle held at every observed step.
    pub cycle_always_fraction: f64,
}

/// Runs `Constant(p)` best-response dynamics on `K_{n,n}` from the balanced
/// configuration. Sizes too small for a proper rounding start from the
/// nearest strict majority instead.
pub fn lower_bound_experiment(
    n: usize,
    p: f64,
    max_steps: u64,
    trials: u64,
    master_seed: u64,
) -> Result<LowerBoundReport, AnalysisError> {
    let params = cycle_params(n, p)?;
    let init = balanced_bipartite_config(n, p, Orientation::LeftWhite).unwrap_or_else(|_| {
        let k = ((params.alpha * n as f64).round() as usize).clamp(n / 2 + 1, n);
        assign(n, k, Orientation::LeftWhite)
    });
    let graph = Graph::complete_bipartite(n, n).map_err(crate::game::GameError::from)?;
    let instance = GameInstance::symmetric_coordination(graph);
    let sim = Simulation::new(
        &instance,
        ActivationSchedule::constant(p),
        ResponseRule::Best,
    )?;

    let results: Result<Vec<LowerBoundTrial>, AnalysisError> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(master_seed, trial);
            let mut rng = rng_from_seed(seed);
            let mut broken = (!cycle_holds(&init, n, n, &params)).then_some(0);
            let run =
                sim.run_observed(init.clone(), &mut rng, max_steps, false, |t, state, _| {
                    if broken.is_none() && !cycle_holds(state.config(), n, n, &params) {
                        broken = Some(t);
                    }
                })?;
            Ok(LowerBoundTrial {
                trial,
                seed,
                converged: run.converged,
                steps: run.steps,
                cycle_broken_at: broken,
            })
        })
        .collect();
    let trials_out = results?;

    let survived: Vec<f64> = trials_out.iter().map(|t| t.survived() as f64).collect();
    let count = trials_out.len().max(1) as f64;
    let stride = (max_steps / CURVE_POINTS).max(1);
    let survival_curve = (0..=max_steps)
        .step_by(stride as usize)
        .chain((!max_steps.is_multiple_of(stride)).then_some(max_steps))
        .map(|t| {
            let alive = trials_out.iter().filter(|x| x.survived() >= t).count();
            (t, alive as f64 / count)
        })
        .collect();
    Ok(LowerBoundReport {
        params,
        max_steps,
        mean_survival: stats::mean(&survived),
        converged_fraction: trials_out.iter().filter(|t| t.converged).count() as f64 / count,
        cycle_always_fraction: trials_out
            .iter()
            .filter(|t| t.cycle_broken_at.is_none())
            .count() as f64
            / count,
        survival_curve,
        trials: trials_out,
    })
}
