//! Expected one-step change of the potential.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::dynamics::{ActivationSchedule, ResponseRule, Simulation, Theorem, Window};
use crate::game::{Configuration, EdgeGame, GameError, GameInstance};
use crate::rng::rng_from_seed;
use crate::stats;

pub const EXACT_DRIFT_CAP: usize = 20;

/// The δ-improvement a schedule's theorem promises in one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftBound {
    pub theorem: Theorem,
    pub window: Window,
    /// Per-step improvement constant δ of the theorem.
    pub delta: f64,
    /// Upper bound on the drift in this configuration (negative).
    pub bound: f64,
}

/// Edge classes around the unstable nodes of a coordination instance:
/// `s1`/`c1` have exactly one unstable endpoint, `s2`/`c2` two; `c*` are
/// conflicting, `s*` agreeing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeClasses {
    pub s1: usize,
    pub s2: usize,
    pub c1: usize,
    pub c2: usize,
    /// Conflicting edges with no unstable endpoint.
    pub stable_conflicts: usize,
}

impl EdgeClasses {
    pub fn of(instance: &GameInstance, config: &Configuration) -> Self {
        let n = instance.node_count();
        let mut unstable = vec![false; n];
        for u in instance.unstable_set(config) {
            unstable[u] = true;
        }
        let mut out = Self {
            s1: 0,
            s2: 0,
            c1: 0,
            c2: 0,
            stable_conflicts: 0,
        };
        for (u, v) in instance.graph().edges() {
            let conflict = config.get(u) != config.get(v);
            match (unstable[u] as u8 + unstable[v] as u8, conflict) {
                (0, true) => out.stable_conflicts += 1,
                (0, false) => {}
                (1, true) => out.c1 += 1,
                (1, false) => out.s1 += 1,
                (_, true) => out.c2 += 1,
                (_, false) => out.s2 += 1,
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// True when computed by enumeration rather than sampling.
    pub exact: bool,
    pub drift: f64,
    pub std_error: Option<f64>,
    pub samples: usize,
    pub unstable_count: usize,
    pub equilibrium: bool,
    /// Absent at equilibria and for schedules without a theorem window.
    pub bound: Option<DriftBound>,
    pub edge_classes: Option<EdgeClasses>,
}

impl DriftReport {
    /// Whether the drift respects the theorem bound, up to `tol`.
    pub fn within_bound(&self, tol: f64) -> Option<bool> {
        self.bound.map(|b| self.drift <= b.bound + tol)
    }
}

/// Theorem bound on the drift: `-p(1-q)|U|/Δ`, `-p(1-2q)`,
/// `-p(1-2q)|U|/Δ` or `-p(1-q)|U|/Δ_P`.
pub fn theorem_drift_bound(
    schedule: &ActivationSchedule,
    instance: &GameInstance,
    unstable_count: usize,
) -> Option<DriftBound> {
    let theorem = schedule.theorem(instance)?;
    let window = schedule.window()?;
    if unstable_count == 0 {
        return None;
    }
    let Window { p, q } = window;
    let max_degree = instance.graph().max_degree() as f64;
    let u = unstable_count as f64;
    let (delta, bound) = match theorem {
        Theorem::MaxDegree => (p * (1.0 - q) / max_degree, -p * (1.0 - q) * u / max_degree),
        Theorem::Adaptive => (p * (1.0 - 2.0 * q), -p * (1.0 - 2.0 * q)),
        Theorem::LocalDegree => (
            p * (1.0 - 2.0 * q) / max_degree,
            -p * (1.0 - 2.0 * q) * u / max_degree,
        ),
        Theorem::General => {
            let dp = instance.delta_p() as f64;
            (p * (1.0 - q) / dp, -p * (1.0 - q) * u / dp)
        }
    };
    Some(DriftBound {
        theorem,
        window,
        delta,
        bound,
    })
}

fn deterministic_responses(
    instance: &GameInstance,
    config: &Configuration,
    rule: ResponseRule,
    unstable: &[usize],
) -> Result<Vec<usize>, AnalysisError> {
    if !rule.is_deterministic() {
        return Err(AnalysisError::NonDeterministicRule);
    }
    let mut rng = rng_from_seed(0);
    Ok(unstable
        .iter()
        .map(|&u| rule.respond(instance, config, u, &mut rng))
        .collect())
}

fn report(
    instance: &GameInstance,
    config: &Configuration,
    schedule: &ActivationSchedule,
    unstable_count: usize,
) -> DriftReport {
    DriftReport {
        exact: true,
        drift: 0.0,
        std_error: None,
        samples: 0,
        unstable_count,
        equilibrium: unstable_count == 0,
        bound: theorem_drift_bound(schedule, instance, unstable_count),
        edge_classes: instance
            .is_coordination()
            .then(|| EdgeClasses::of(instance, config)),
    }
}

pub fn exact_drift(
    instance: &GameInstance,
    config: &Configuration,
    schedule: &ActivationSchedule,
    rule: ResponseRule,
) -> Result<DriftReport, AnalysisError> {
    exact_drift_capped(instance, config, schedule, rule, EXACT_DRIFT_CAP)
}

/// Enumerates every activation subset of the unstable nodes, weighting it
/// by `Π p_u Π (1 - p_v)`, and sums the exact potential changes.
pub fn exact_drift_capped(
    instance: &GameInstance,
    config: &Configuration,
    schedule: &ActivationSchedule,
    rule: ResponseRule,
    cap: usize,
) -> Result<DriftReport, AnalysisError> {
    instance.validate_config(config)?;
    let unstable = instance.unstable_set(config);
    if unstable.len() > cap {
        return Err(AnalysisError::TooManyUnstable {
            count: unstable.len(),
            cap,
        });
    }
    let probs = schedule.probabilities(instance, config)?;
    let responses = deterministic_responses(instance, config, rule, &unstable)?;
    let p: Vec<f64> = unstable.iter().map(|&u| probs[u]).collect();

    let base = instance.total_potential(config);
    let mut next = config.clone();
    let mut drift = 0.0;
    for mask in 0u64..(1u64 << unstable.len()) {
        let mut weight = 1.0;
        for (i, &u) in unstable.iter().enumerate() {
            if mask >> i & 1 == 1 {
                weight *= p[i];
                next.set(u, responses[i]);
            } else {
                weight *= 1.0 - p[i];
                next.set(u, config.get(u));
            }
        }
        if weight != 0.0 {
            drift += weight * (instance.total_potential(&next) - base) as f64;
        }
    }

    let mut out = report(instance, config, schedule, unstable.len());
    out.drift = drift;
    Ok(out)
}

/// Drift by linearity over edges: `Σ_u p_u a_u + Σ_{uv ⊆ U} p_u p_v b_uv`
/// where `a_u` is the potential change of `u` moving alone and `b_uv` the
/// interaction term of two moving endpoints.
pub fn drift_closed_form(
    instance: &GameInstance,
    config: &Configuration,
    schedule: &ActivationSchedule,
    rule: ResponseRule,
) -> Result<f64, AnalysisError> {
    instance.validate_config(config)?;
    let unstable = instance.unstable_set(config);
    let probs = schedule.probabilities(instance, config)?;
    let responses = deterministic_responses(instance, config, rule, &unstable)?;
    let mut response = config.as_slice().to_vec();
    let mut moving = vec![false; instance.node_count()];
    for (&u, &r) in unstable.iter().zip(&responses) {
        response[u] = r;
        moving[u] = true;
    }

    let mut drift = 0.0;
    for &u in &unstable {
        let gain = instance.payoff_gain(config, u, response[u]);
        drift -= probs[u] * gain as f64;
    }
    for (u, v) in instance.graph().edges() {
        if moving[u] && moving[v] {
            let pot = |a, b| instance.edge_potential(u, a, v, b).expect("edge");
            let (cu, cv, ru, rv) = (config.get(u), config.get(v), response[u], response[v]);
            let b = pot(ru, rv) + pot(cu, cv) - pot(ru, cv) - pot(cu, rv);
            drift += probs[u] * probs[v] * b as f64;
        }
    }
    Ok(drift)
}

/// Monte Carlo estimate of the drift from `samples` independent steps.
pub fn mc_drift<R: Rng + ?Sized>(
    instance: &GameInstance,
    config: &Configuration,
    schedule: &ActivationSchedule,
    rule: ResponseRule,
    samples: usize,
    rng: &mut R,
) -> Result<DriftReport, AnalysisError> {
    if samples == 0 {
        return Err(AnalysisError::InvalidParameter(
            "samples must be at least 1".into(),
        ));
    }
    let sim = Simulation::new(instance, *schedule, rule)?;
    let start = sim.start(config.clone())?;
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            let mut state = start.clone();
            sim.step(&mut state, rng).potential_delta as f64
        })
        .collect();

    let mut out = report(instance, config, schedule, start.unstable().len());
    out.exact = false;
    out.drift = stats::mean(&values);
    out.std_error = stats::std_error(&values);
    out.samples = samples;
    Ok(out)
}

/// `P(c_u,c_v) + P(c'_u,c'_v) - P(c'_u,c_v) - P(c_u,c'_v)` on one table,
/// rows indexed by the `u` strategy.
pub fn edge_interaction(table: &EdgeGame, cu: usize, cv: usize, ru: usize, rv: usize) -> i64 {
    table.get(cu, cv) + table.get(ru, rv) - table.get(ru, cv) - table.get(cu, rv)
}

/// Evaluates `μ^u + μ^v + ν` for an edge of two unstable nodes moving to
/// their best responses, checks it against the closed form and against
/// `2Δ_{P_uv}`, and returns it.
pub fn general_drift_identity_check(
    instance: &GameInstance,
    config: &Configuration,
    u: usize,
    v: usize,
) -> Result<i64, AnalysisError> {
    instance.validate_config(config)?;
    let table = instance.edge_game(u, v).ok_or(GameError::NotAnEdge(u, v))?;
    for w in [u, v] {
        if !instance.is_unstable(config, w) {
            return Err(AnalysisError::NotUnstable(w));
        }
    }
    let (cu, cv) = (config.get(u), config.get(v));
    let (ru, rv) = (
        instance.best_response(config, u),
        instance.best_response(config, v),
    );
    let pot = |a, b| instance.edge_potential(u, a, v, b).expect("edge");

    let mu_u = -(pot(ru, cv) - pot(cu, cv));
    let mu_v = -(pot(cu, rv) - pot(cu, cv));
    let nu = pot(ru, rv) - pot(cu, cv);
    let lhs = mu_u + mu_v + nu;
    let rhs = if u < v {
        edge_interaction(table, cu, cv, ru, rv)
    } else {
        edge_interaction(table, cv, cu, rv, ru)
    };
    if lhs != rhs {
        return Err(AnalysisError::IdentityViolated { lhs, rhs });
    }
    let bound = 2 * table.max_value();
    if lhs > bound {
        return Err(AnalysisError::ExceedsBound { value: lhs, bound });
    }
    Ok(lhs)
}
