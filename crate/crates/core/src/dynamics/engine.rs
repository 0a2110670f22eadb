//! The simultaneous update step and run-until-convergence loop.
//!
//! A [`DynamicsState`] keeps, for every node and strategy, the local cost
//! `Σ_v P_uv(s, c_v)` so that instability and responses are read off in
//! `O(k)` per node. A step only touches the neighborhoods of nodes that
//! actually switched.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::response::ResponseRule;
use super::schedule::{check_range, ActivationSchedule, ScheduleError, ScheduleKind};
use crate::game::{Configuration, GameError, GameInstance};
use crate::rng::rng_from_seed;

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// What happened during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Unstable nodes against the pre-step configuration, ascending.
    pub unstable: Vec<usize>,
    /// Realized `p_u` aligned with `unstable`.
    pub probabilities: Vec<f64>,
    /// Nodes that became active and switched, ascending.
    pub activated: Vec<usize>,
    /// `P^{t+1} - P^t`.
    pub potential_delta: i64,
    /// Payoff gain of the mover when exactly one node switched.
    pub single_move_gain: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub converged: bool,
    pub steps: u64,
    pub initial_potential: i64,
    /// Conflicting edges at the start; coordination instances only.
    pub initial_conflicts: Option<usize>,
    pub final_potential: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential_trace: Option<Vec<i64>>,
    pub seed: Option<u64>,
    pub final_config: Configuration,
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct DynamicsState {
    config: Configuration,
    costs: Vec<i64>,
    offsets: Vec<usize>,
    potential: i64,
    unstable: Vec<usize>,
    unstable_flag: Vec<bool>,
}

impl DynamicsState {
    fn new(instance: &GameInstance, config: Configuration) -> Self {
        let n = instance.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut costs = Vec::new();
        for u in 0..n {
            offsets.push(costs.len());
            costs.extend(instance.local_costs(&config, u));
        }
        offsets.push(costs.len());
        let mut state = Self {
            potential: instance.total_potential(&config),
            config,
            costs,
            offsets,
            unstable: Vec::new(),
            unstable_flag: vec![false; n],
        };
        state.refresh_unstable();
        state
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn potential(&self) -> i64 {
        self.potential
    }

    /// Unstable nodes of the current configuration, ascending.
    pub fn unstable(&self) -> &[usize] {
        &self.unstable
    }

    pub fn is_equilibrium(&self) -> bool {
        self.unstable.is_empty()
    }

    fn costs_of(&self, u: usize) -> &[i64] {
        &self.costs[self.offsets[u]..self.offsets[u + 1]]
    }

    fn refresh_unstable(&mut self) {
        self.unstable.clear();
        for u in 0..self.unstable_flag.len() {
            let costs = &self.costs[self.offsets[u]..self.offsets[u + 1]];
            let here = costs[self.config.get(u)];
            let flag = costs.iter().any(|&c| c < here);
            self.unstable_flag[u] = flag;
            if flag {
                self.unstable.push(u);
            }
        }
    }

    fn recompute_potential(&mut self) {
        let twice: i64 = (0..self.unstable_flag.len())
            .map(|u| self.costs[self.offsets[u] + self.config.get(u)])
            .sum();
        self.potential = twice / 2;
    }
}

/// Dynamics of one instance under one schedule and response rule.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    instance: &'a GameInstance,
    schedule: ActivationSchedule,
    rule: ResponseRule,
    static_probs: Option<Vec<f64>>,
}

impl<'a> Simulation<'a> {
    pub fn new(
        instance: &'a GameInstance,
        schedule: ActivationSchedule,
        rule: ResponseRule,
    ) -> Result<Self, ScheduleError> {
        schedule.validate_for(instance)?;
        let static_probs = match schedule.kind {
            ScheduleKind::Adaptive { alpha } => {
                check_range(&[alpha], |_| false)?;
                None
            }
            _ => {
                let probs: Vec<f64> = (0..instance.node_count())
                    .map(|u| schedule.static_probability(instance, u).expect("static"))
                    .collect();
                // Range is enforced only where a node can ever be unstable.
                let movable: Vec<f64> = probs
                    .iter()
                    .zip(instance.strategy_counts())
                    .zip(instance.graph().degrees())
                    .map(|((&p, &k), &d)| if k > 1 && d > 0 { p } else { 1.0 })
                    .collect();
                check_range(&movable, |_| false)?;
                Some(probs)
            }
        };
        Ok(Self {
            instance,
            schedule,
            rule,
            static_probs,
        })
    }

    pub fn instance(&self) -> &GameInstance {
        self.instance
    }

    pub fn schedule(&self) -> &ActivationSchedule {
        &self.schedule
    }

    pub fn rule(&self) -> ResponseRule {
        self.rule
    }

    pub fn start(&self, init: Configuration) -> Result<DynamicsState, GameError> {
        self.instance.validate_config(&init)?;
        Ok(DynamicsState::new(self.instance, init))
    }

    /// One synchronous step: unstable nodes activate independently in
    /// ascending id order, then every active node moves to its response
    /// against the pre-step configuration.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut DynamicsState, rng: &mut R) -> StepReport {
        let unstable = state.unstable.clone();
        let probabilities: Vec<f64> = match (&self.static_probs, self.schedule.kind) {
            (Some(p), _) => unstable.iter().map(|&u| p[u]).collect(),
            (None, ScheduleKind::Adaptive { alpha }) => unstable
                .iter()
                .map(|&u| {
                    ActivationSchedule::adaptive_probability(
                        alpha,
                        self.instance,
                        &state.config,
                        &state.unstable_flag,
                        u,
                    )
                })
                .collect(),
            (None, _) => unreachable!("non-adaptive schedules are precomputed"),
        };

        let active: Vec<usize> = unstable
            .iter()
            .zip(&probabilities)
            .filter(|&(_, &p)| rng.random::<f64>() < p)
            .map(|(&u, _)| u)
            .collect();

        let mut moves = Vec::with_capacity(active.len());
        for &u in &active {
            let old = state.config.get(u);
            let new = self.rule.choose(old, state.costs_of(u), rng);
            if new != old {
                moves.push((u, old, new));
            }
        }
        let single_move_gain = match moves.as_slice() {
            [(u, old, new)] => Some(state.costs_of(*u)[*old] - state.costs_of(*u)[*new]),
            _ => None,
        };

        let before = state.potential;
        for &(u, _, new) in &moves {
            state.config.set(u, new);
        }
        self.propagate(state, &moves);
        state.recompute_potential();
        state.refresh_unstable();

        StepReport {
            unstable,
            probabilities,
            activated: moves.iter().map(|&(u, _, _)| u).collect(),
            potential_delta: state.potential - before,
            single_move_gain,
        }
    }

    /// Updates neighbor costs for every `(node, old, new)` switch.
    fn propagate(&self, state: &mut DynamicsState, moves: &[(usize, usize, usize)]) {
        let graph = self.instance.graph();
        let mut delta: Vec<i64> = Vec::new();
        for &(u, old, new) in moves {
            let mut memo_key: Option<(u32, bool)> = None;
            let tables = self.instance.incident_tables(u);
            for (&v, &t) in graph.neighbors(u).iter().zip(tables) {
                let key = (t, v < u);
                if memo_key != Some(key) {
                    let k = self.instance.strategy_count(v);
                    delta.clear();
                    delta.extend((0..k).map(|s| {
                        self.instance.oriented(t, v, s, u, new)
                            - self.instance.oriented(t, v, s, u, old)
                    }));
                    memo_key = Some(key);
                }
                let off = state.offsets[v];
                for (c, d) in state.costs[off..off + delta.len()].iter_mut().zip(&delta) {
                    *c += d;
                }
            }
        }
    }

    /// Runs from `init` with a fresh generator seeded by `seed`.
    pub fn run(
        &self,
        init: Configuration,
        seed: u64,
        max_steps: u64,
        trace: bool,
    ) -> Result<RunResult, GameError> {
        let mut rng = rng_from_seed(seed);
        let mut result = self.run_observed(init, &mut rng, max_steps, trace, |_, _, _| {})?;
        result.seed = Some(seed);
        Ok(result)
    }

    /// Runs until no node is unstable or `max_steps` steps were executed,
    /// calling `observe(t, state, report)` after step `t` (1-based).
    pub fn run_observed<R, F>(
        &self,
        init: Configuration,
        rng: &mut R,
        max_steps: u64,
        trace: bool,
        mut observe: F,
    ) -> Result<RunResult, GameError>
    where
        R: Rng + ?Sized,
        F: FnMut(u64, &DynamicsState, &StepReport),
    {
        let initial_conflicts = self
            .instance
            .is_coordination()
            .then(|| self.instance.conflicting_edges(&init));
        let mut state = self.start(init)?;
        let initial_potential = state.potential;
        let mut potential_trace = trace.then(|| vec![initial_potential]);
        let mut steps = 0;
        while steps < max_steps && !state.is_equilibrium() {
            let report = self.step(&mut state, rng);
            steps += 1;
            if let Some(trace) = potential_trace.as_mut() {
                if let Some(gain) = report.single_move_gain {
                    assert_eq!(
                        report.potential_delta, -gain,
                        "single mover must lower the potential by its gain"
                    );
                }
                trace.push(state.potential);
            }
            observe(steps, &state, &report);
        }
        Ok(RunResult {
            converged: state.is_equilibrium(),
            steps,
            initial_potential,
            initial_conflicts,
            final_potential: state.potential,
            potential_trace,
            seed: None,
            final_config: state.config,
        })
    }
}

/// One step from `config`, returning the successor and the step report.
pub fn step<R: Rng + ?Sized>(
    instance: &GameInstance,
    config: &Configuration,
    schedule: &ActivationSchedule,
    rule: ResponseRule,
    rng: &mut R,
) -> Result<(Configuration, StepReport), StepError> {
    let sim = Simulation::new(instance, *schedule, rule)?;
    let mut state = sim.start(config.clone())?;
    let report = sim.step(&mut state, rng);
    Ok((state.config, report))
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StepError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Belief;
    use crate::graph::Graph;
    use crate::rng::rng_from_seed;

    const B: usize = 0;
    const W: usize = 1;

    fn k2() -> GameInstance {
        GameInstance::symmetric_coordination(Graph::path(2).unwrap())
    }

    fn always() -> crate::rng::SimRng {
        rng_from_seed(0)
    }

    #[test]
    fn simultaneous_swap() {
        let (next, report) = step(
            &k2(),
            &vec![B, W].into(),
            &ActivationSchedule::constant(1.0),
            ResponseRule::Best,
            &mut always(),
        )
        .unwrap();
        assert_eq!(next.as_slice(), &[W, B]);
        assert_eq!(report.activated, vec![0, 1]);
        assert_eq!(report.potential_delta, 0);
    }

    #[test]
    fn single_mover_lowers_potential() {
        let inst = k2();
        let sim =
            Simulation::new(&inst, ActivationSchedule::constant(0.5), ResponseRule::Best).unwrap();
        let mut rng = rng_from_seed(11);
        let mut seen_single = false;
        for _ in 0..50 {
            let mut state = sim.start(vec![B, W].into()).unwrap();
            let report = sim.step(&mut state, &mut rng);
            if report.activated.len() == 1 {
                seen_single = true;
                assert_eq!(report.potential_delta, -1);
                assert_eq!(report.single_move_gain, Some(1));
                let c = state.config().as_slice();
                assert_eq!(c[0], c[1]);
            }
        }
        assert!(seen_single);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let (next, report) = step(
            &k2(),
            &vec![W, W].into(),
            &ActivationSchedule::constant(1.0),
            ResponseRule::Best,
            &mut always(),
        )
        .unwrap();
        assert_eq!(next.as_slice(), &[W, W]);
        assert!(report.activated.is_empty() && report.unstable.is_empty());
        assert_eq!(report.potential_delta, 0);
    }

    #[test]
    fn run_at_equilibrium() {
        let inst = k2();
        let sim =
            Simulation::new(&inst, ActivationSchedule::constant(0.5), ResponseRule::Best).unwrap();
        let r = sim.run(vec![B, B].into(), 1, 100, true).unwrap();
        assert!(r.converged);
        assert_eq!(r.steps, 0);
        assert_eq!(r.potential_trace, Some(vec![0]));
        assert_eq!(r.initial_conflicts, Some(0));
    }

    #[test]
    fn always_active_never_converges() {
        let inst = k2();
        let sim =
            Simulation::new(&inst, ActivationSchedule::constant(1.0), ResponseRule::Best).unwrap();
        let r = sim.run(vec![B, W].into(), 5, 100, false).unwrap();
        assert!(!r.converged);
        assert_eq!(r.steps, 100);
        assert_eq!(r.final_potential, 1);
    }

    #[test]
    fn half_probability_mean_near_two() {
        let inst = k2();
        let sim =
            Simulation::new(&inst, ActivationSchedule::constant(0.5), ResponseRule::Best).unwrap();
        let trials = 4000;
        let total: u64 = (0..trials)
            .map(|i| {
                let r = sim.run(vec![B, W].into(), i, 1000, false).unwrap();
                assert!(r.converged);
                r.steps
            })
            .sum();
        let mean = total as f64 / trials as f64;
        // T is geometric with success 1/2: sd = sqrt(2), se = sqrt(2/4000)
        assert!(
            (mean - 2.0).abs() < 4.0 * (2.0f64 / trials as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn incremental_state_matches_recomputation() {
        let g = Graph::erdos_renyi(25, 0.2, 3).unwrap();
        let beliefs: Vec<Belief> = (0..25)
            .map(|i| {
                if i % 3 == 0 {
                    Belief::Quarter
                } else {
                    Belief::ThreeQuarters
                }
            })
            .collect();
        let opinion = GameInstance::opinion_game(&g, &beliefs).unwrap();
        let minority = GameInstance::minority(g.clone());
        for inst in [&opinion, &minority] {
            let sim = Simulation::new(inst, ActivationSchedule::constant(0.3), ResponseRule::Best)
                .unwrap();
            let mut rng = rng_from_seed(8);
            let init: Vec<usize> = (0..inst.node_count())
                .map(|u| {
                    if inst.strategy_count(u) > 1 {
                        rng.random_range(0..2)
                    } else {
                        0
                    }
                })
                .collect();
            let mut state = sim.start(init.into()).unwrap();
            for _ in 0..40 {
                let before = state.config().clone();
                let report = sim.step(&mut state, &mut rng);
                assert_eq!(report.unstable, inst.unstable_set(&before));
                assert_eq!(state.potential(), inst.total_potential(state.config()));
                assert_eq!(
                    state.unstable(),
                    inst.unstable_set(state.config()).as_slice()
                );
                assert_eq!(
                    report.potential_delta,
                    inst.total_potential(state.config()) - inst.total_potential(&before)
                );
                for u in 0..inst.node_count() {
                    if !report.activated.contains(&u) {
                        assert_eq!(before.get(u), state.config().get(u));
                    } else {
                        assert_eq!(state.config().get(u), inst.best_response(&before, u));
                    }
                }
            }
        }
    }

    #[test]
    fn runs_replay_bit_exactly() {
        let inst = GameInstance::symmetric_coordination(Graph::grid(6, 6).unwrap());
        let sim =
            Simulation::new(&inst, ActivationSchedule::adaptive(0.3), ResponseRule::Best).unwrap();
        let init: Configuration = (0..36).map(|u| (u * 7 % 5) % 2).collect::<Vec<_>>().into();
        let a = sim.run(init.clone(), 99, 10_000, true).unwrap();
        let b = sim.run(init, 99, 10_000, true).unwrap();
        assert_eq!(a, b);
        assert!(a.converged);
        assert!(inst.is_equilibrium(&a.final_config));
    }

    #[test]
    fn invalid_schedule_or_config() {
        let inst = k2();
        assert!(
            Simulation::new(&inst, ActivationSchedule::constant(1.5), ResponseRule::Best).is_err()
        );
        assert!(
            Simulation::new(&inst, ActivationSchedule::adaptive(0.0), ResponseRule::Best).is_err()
        );
        let sim =
            Simulation::new(&inst, ActivationSchedule::constant(0.5), ResponseRule::Best).unwrap();
        assert!(sim.run(vec![0, 2].into(), 0, 10, false).is_err());
    }
}
