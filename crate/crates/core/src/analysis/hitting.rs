//! Exact expected convergence times by solving the Markov chain over all
//! configurations.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::AnalysisError;
use crate::dynamics::{ActivationSchedule, ResponseRule};
use crate::game::{Configuration, GameInstance};
use crate::rng::rng_from_seed;

pub const STATE_CAP: usize = 1 << 20;
const DIRECT_LIMIT: usize = 2000;
const TOLERANCE: f64 = 1e-10;
const MAX_SWEEPS: usize = 1_000_000;

/// Mixed-radix indexing of configurations: node `u` has weight
/// `Π_{w<u} k_w`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StateSpace {
    radices: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl StateSpace {
    pub fn new(strategy_counts: &[usize], cap: usize) -> Result<Self, AnalysisError> {
        let mut strides = Vec::with_capacity(strategy_counts.len());
        let mut size: u128 = 1;
        for &k in strategy_counts {
            strides.push(size as usize);
            size *= k as u128;
            if size > cap as u128 {
                let states = strategy_counts.iter().map(|&k| k as u128).product();
                return Err(AnalysisError::StateSpaceTooLarge { states, cap });
            }
        }
        Ok(Self {
            radices: strategy_counts.to_vec(),
            strides,
            size: size as usize,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn index(&self, config: &Configuration) -> usize {
        config
            .as_slice()
            .iter()
            .zip(&self.strides)
            .map(|(&s, &w)| s * w)
            .sum()
    }

    pub fn decode(&self, mut index: usize) -> Configuration {
        Configuration::new(
            self.radices
                .iter()
                .map(|&k| {
                    let s = index % k;
                    index /= k;
                    s
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingTimes {
    pub space: StateSpace,
    /// `E[T]` from every configuration; infinite where convergence is not
    /// almost sure.
    pub expected_steps: Vec<f64>,
    pub equilibria: Vec<usize>,
    /// `E[T]` from the requested initial configuration.
    pub from_init: Option<f64>,
}

impl HittingTimes {
    pub fn expected_from(&self, config: &Configuration) -> f64 {
        self.expected_steps[self.space.index(config)]
    }
}

/// Builds the exact kernel (each unstable node activates independently and
/// moves to its deterministic response) and solves
/// `E[T_c] = 1 + Σ Pr(c → c') E[T_c']` with `E = 0` on equilibria.
pub fn exact_hitting_time(
    instance: &GameInstance,
    schedule: &ActivationSchedule,
    rule: ResponseRule,
    init: Option<&Configuration>,
) -> Result<HittingTimes, AnalysisError> {
    if !rule.is_deterministic() {
        return Err(AnalysisError::NonDeterministicRule);
    }
    schedule.validate_for(instance)?;
    if let Some(c) = init {
        instance.validate_config(c)?;
    }
    let space = StateSpace::new(instance.strategy_counts(), STATE_CAP)?;
    let Chain {
        stay,
        rows,
        equilibria,
    } = build_chain(instance, schedule, rule, &space)?;
    let n_states = space.size();

    let mut expected = vec![0.0; n_states];
    let finite = finite_states(&rows, &equilibria, n_states);
    for (idx, &ok) in finite.iter().enumerate() {
        if !ok {
            expected[idx] = f64::INFINITY;
        }
    }
    let mut absorbing = vec![false; n_states];
    for &e in &equilibria {
        absorbing[e] = true;
    }
    let transient: Vec<usize> = (0..n_states)
        .filter(|&i| finite[i] && !absorbing[i])
        .collect();
    if transient.len() <= DIRECT_LIMIT {
        solve_direct(&transient, &rows, &stay, &mut expected);
    } else {
        solve_iterative(&transient, &rows, &stay, &mut expected);
    }

    let from_init = init.map(|c| expected[space.index(c)]);
    Ok(HittingTimes {
        space,
        expected_steps: expected,
        equilibria,
        from_init,
    })
}

struct Chain {
    stay: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    equilibria: Vec<usize>,
}

/// Sparse kernel: self-loop probability plus off-diagonal transitions.
fn build_chain(
    instance: &GameInstance,
    schedule: &ActivationSchedule,
    rule: ResponseRule,
    space: &StateSpace,
) -> Result<Chain, AnalysisError> {
    let n_states = space.size();
    let mut rng = rng_from_seed(0);

    let mut stay = vec![1.0; n_states];
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_states];
    let mut equilibria = Vec::new();
    for idx in 0..n_states {
        let config = space.decode(idx);
        let unstable = instance.unstable_set(&config);
        if unstable.is_empty() {
            equilibria.push(idx);
            continue;
        }
        if unstable.len() > 30 {
            return Err(AnalysisError::TooManyUnstable {
                count: unstable.len(),
                cap: 30,
            });
        }
        let probs = schedule.probabilities(instance, &config)?;
        let jumps: Vec<isize> = unstable
            .iter()
            .map(|&u| {
                let r = rule.respond(instance, &config, u, &mut rng);
                (r as isize - config.get(u) as isize) * space.strides[u] as isize
            })
            .collect();
        let p: Vec<f64> = unstable.iter().map(|&u| probs[u]).collect();

        let mut out: Vec<(usize, f64)> = Vec::new();
        for mask in 0u64..(1u64 << unstable.len()) {
            let mut weight = 1.0;
            let mut target = idx as isize;
            for (i, (&pi, &jump)) in p.iter().zip(&jumps).enumerate() {
                if mask >> i & 1 == 1 {
                    weight *= pi;
                    target += jump;
                } else {
                    weight *= 1.0 - pi;
                }
            }
            if weight > 0.0 {
                out.push((target as usize, weight));
            }
        }
        out.sort_unstable_by_key(|&(t, _)| t);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
        for (t, w) in out {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += w,
                _ => merged.push((t, w)),
            }
        }
        stay[idx] = merged
            .iter()
            .find(|&&(t, _)| t == idx)
            .map_or(0.0, |&(_, w)| w);
        merged.retain(|&(t, _)| t != idx);
        rows[idx] = merged;
    }

    Ok(Chain {
        stay,
        rows,
        equilibria,
    })
}

/// States from which equilibria are reached almost surely: those that can
/// reach an equilibrium and cannot reach any state that cannot.
fn finite_states(rows: &[Vec<(usize, f64)>], equilibria: &[usize], n: usize) -> Vec<bool> {
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (s, row) in rows.iter().enumerate() {
        for &(t, _) in row {
            reverse[t].push(s);
        }
    }
    let backward = |seeds: Vec<usize>| {
        let mut seen = vec![false; n];
        let mut stack = seeds;
        for &s in &stack {
            seen[s] = true;
        }
        while let Some(t) = stack.pop() {
            for &s in &reverse[t] {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        seen
    };
    let reaches_eq = backward(equilibria.to_vec());
    let trapped: Vec<usize> = (0..n).filter(|&i| !reaches_eq[i]).collect();
    let reaches_trap = backward(trapped);
    reaches_trap.into_iter().map(|t| !t).collect()
}

fn solve_direct(
    transient: &[usize],
    rows: &[Vec<(usize, f64)>],
    stay: &[f64],
    expected: &mut [f64],
) {
    let m = transient.len();
    if m == 0 {
        return;
    }
    let mut pos = std::collections::HashMap::with_capacity(m);
    for (i, &s) in transient.iter().enumerate() {
        pos.insert(s, i);
    }
    let mut a = DMatrix::<f64>::zeros(m, m);
    let b = DVector::<f64>::from_element(m, 1.0);
    for (i, &s) in transient.iter().enumerate() {
        a[(i, i)] = 1.0 - stay[s];
        for &(t, w) in &rows[s] {
            if let Some(&j) = pos.get(&t) {
                a[(i, j)] -= w;
            }
        }
    }
    let x = a.lu().solve(&b).expect("transient system is non-singular");
    for (i, &s) in transient.iter().enumerate() {
        expected[s] = x[i];
    }
}

fn solve_iterative(
    transient: &[usize],
    rows: &[Vec<(usize, f64)>],
    stay: &[f64],
    expected: &mut [f64],
) {
    for _ in 0..MAX_SWEEPS {
        let mut worst: f64 = 0.0;
        for &s in transient {
            let mut acc = 1.0;
            for &(t, w) in &rows[s] {
                acc += w * expected[t];
            }
            let new = acc / (1.0 - stay[s]);
            let change = (new - expected[s]).abs() / new.abs().max(1.0);
            worst = worst.max(change);
            expected[s] = new;
        }
        if worst < TOLERANCE {
            return;
        }
    }
}
