//! Activation schedules: how likely each node is to become active.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Configuration, GameInstance};

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("activation probability {value} of node {node} is outside (0, 1]")]
    ProbabilityOutOfRange { node: usize, value: f64 },
    #[error("the adaptive schedule needs a two-strategy coordination instance")]
    AdaptiveNeedsCoordination,
}

/// Probability rule per node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `p_u = p` for every node.
    Constant { p: f64 },
    /// `p_u = α / Δ`.
    MaxDegree { alpha: f64 },
    /// `p_u = α_high / Δ_u`, clamped into `[α_low / Δ, α_high / Δ_u]`.
    NeighborhoodMax { alpha_low: f64, alpha_high: f64 },
    /// `p_u = α / δ_u`.
    LocalDegree { alpha: f64 },
    /// `p_u = α / (d_u + 1)` with `d_u` the number of unstable neighbors
    /// holding the other color.
    Adaptive { alpha: f64 },
    /// `p_u = α / Δ_P`.
    PotentialWeighted { alpha: f64 },
}

/// The `(p, q)` constants of a probability window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub p: f64,
    pub q: f64,
}

/// Convergence results whose probability windows a schedule can satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Coordination games, `p_u ∈ [p/Δ, q/Δ_u]`, `p, q ∈ (0, 1)`.
    MaxDegree,
    /// Coordination games, `p_u ∈ [p/(d_u+1), q/(d_u+1)]`, `p, q ∈ (0, 1/2)`.
    Adaptive,
    /// Coordination games, `p_u ∈ [p/δ_u, q/δ_u]`, `p, q ∈ (0, 1/2)`.
    LocalDegree,
    /// Any local interaction potential game, `p_u ∈ [p/Δ_P, q/Δ_P]`,
    /// `p, q ∈ (0, 1/2)`.
    General,
}

impl Theorem {
    /// Admissible upper end for `p` and `q`.
    pub fn parameter_ceiling(self) -> f64 {
        match self {
            Self::MaxDegree => 1.0,
            _ => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationSchedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    /// Explicit window; derived from the schedule's constants when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

impl From<ScheduleKind> for ActivationSchedule {
    fn from(kind: ScheduleKind) -> Self {
        Self { kind, window: None }
    }
}

impl ActivationSchedule {
    pub fn constant(p: f64) -> Self {
        ScheduleKind::Constant { p }.into()
    }

    pub fn max_degree(alpha: f64) -> Self {
        ScheduleKind::MaxDegree { alpha }.into()
    }

    pub fn neighborhood_max(alpha_low: f64, alpha_high: f64) -> Self {
        ScheduleKind::NeighborhoodMax {
            alpha_low,
            alpha_high,
        }
        .into()
    }

    pub fn local_degree(alpha: f64) -> Self {
        ScheduleKind::LocalDegree { alpha }.into()
    }

    pub fn adaptive(alpha: f64) -> Self {
        ScheduleKind::Adaptive { alpha }.into()
    }

    pub fn potential_weighted(alpha: f64) -> Self {
        ScheduleKind::PotentialWeighted { alpha }.into()
    }

    pub fn with_window(mut self, p: f64, q: f64) -> Self {
        self.window = Some(Window { p, q });
        self
    }

    /// Explicit window, or the one implied by the schedule constants.
    /// Constant schedules have no implied window.
    pub fn window(&self) -> Option<Window> {
        self.window.or(match self.kind {
            ScheduleKind::Constant { .. } => None,
            ScheduleKind::NeighborhoodMax {
                alpha_low,
                alpha_high,
            } => Some(Window {
                p: alpha_low,
                q: alpha_high,
            }),
            ScheduleKind::MaxDegree { alpha }
            | ScheduleKind::LocalDegree { alpha }
            | ScheduleKind::Adaptive { alpha }
            | ScheduleKind::PotentialWeighted { alpha } => Some(Window { p: alpha, q: alpha }),
        })
    }

    pub fn is_state_dependent(&self) -> bool {
        matches!(self.kind, ScheduleKind::Adaptive { .. })
    }

    /// The convergence result this schedule is meant to satisfy on
    /// `instance`, if any.
    pub fn theorem(&self, instance: &GameInstance) -> Option<Theorem> {
        match self.kind {
            ScheduleKind::Adaptive { .. } => Some(Theorem::Adaptive),
            ScheduleKind::LocalDegree { .. } => Some(Theorem::LocalDegree),
            ScheduleKind::PotentialWeighted { .. } => Some(Theorem::General),
            ScheduleKind::Constant { .. } if self.window.is_none() => None,
            _ if instance.is_coordination() => Some(Theorem::MaxDegree),
            _ => Some(Theorem::General),
        }
    }

    pub fn validate_for(&self, instance: &GameInstance) -> Result<(), ScheduleError> {
        if self.is_state_dependent() && !instance.is_coordination() {
            return Err(ScheduleError::AdaptiveNeedsCoordination);
        }
        Ok(())
    }

    /// Static probability of `u`; `None` for the adaptive schedule. Nodes
    /// whose divisor degenerates to zero get 0 (they cannot be unstable).
    pub(crate) fn static_probability(&self, instance: &GameInstance, u: usize) -> Option<f64> {
        let g = instance.graph();
        let ratio = |a: f64, d: usize| if d == 0 { 0.0 } else { a / d as f64 };
        Some(match self.kind {
            ScheduleKind::Constant { p } => p,
            ScheduleKind::MaxDegree { alpha } => ratio(alpha, g.max_degree()),
            ScheduleKind::NeighborhoodMax {
                alpha_low,
                alpha_high,
            } => {
                let hi = ratio(alpha_high, g.nbhd_max_degree(u));
                if hi == 0.0 {
                    0.0
                } else {
                    hi.max(ratio(alpha_low, g.max_degree())).min(hi)
                }
            }
            ScheduleKind::LocalDegree { alpha } => ratio(alpha, g.degree(u)),
            ScheduleKind::PotentialWeighted { alpha } => {
                if instance.delta_p() == 0 {
                    0.0
                } else {
                    alpha / instance.delta_p() as f64
                }
            }
            ScheduleKind::Adaptive { .. } => return None,
        })
    }

    /// `α / (d_u + 1)` given the unstable markers of the current step.
    pub(crate) fn adaptive_probability(
        alpha: f64,
        instance: &GameInstance,
        config: &Configuration,
        unstable: &[bool],
        u: usize,
    ) -> f64 {
        let d = instance
            .graph()
            .neighbors(u)
            .iter()
            .filter(|&&v| unstable[v] && config.get(v) != config.get(u))
            .count();
        alpha / (d + 1) as f64
    }

    /// Per-node activation probabilities in `config`.
    pub fn probabilities(
        &self,
        instance: &GameInstance,
        config: &Configuration,
    ) -> Result<Vec<f64>, ScheduleError> {
        self.validate_for(instance)?;
        let n = instance.node_count();
        let probs: Vec<f64> = match self.kind {
            ScheduleKind::Adaptive { alpha } => {
                let mut unstable = vec![false; n];
                for u in instance.unstable_set(config) {
                    unstable[u] = true;
                }
                (0..n)
                    .map(|u| Self::adaptive_probability(alpha, instance, config, &unstable, u))
                    .collect()
            }
            _ => (0..n)
                .map(|u| {
                    self.static_probability(instance, u)
                        .expect("static schedule")
                })
                .collect(),
        };
        check_range(&probs, |u| self.divisor_degenerate(instance, u))?;
        Ok(probs)
    }

    fn divisor_degenerate(&self, instance: &GameInstance, u: usize) -> bool {
        let g = instance.graph();
        match self.kind {
            ScheduleKind::Constant { .. } | ScheduleKind::Adaptive { .. } => false,
            ScheduleKind::MaxDegree { .. } => g.max_degree() == 0,
            ScheduleKind::NeighborhoodMax { .. } => g.nbhd_max_degree(u) == 0,
            ScheduleKind::LocalDegree { .. } => g.degree(u) == 0,
            ScheduleKind::PotentialWeighted { .. } => instance.delta_p() == 0,
        }
    }

    /// Describes every way the realized probabilities leave the window of
    /// the matched theorem. Schedules outside their window still run.
    pub fn window_warnings(&self, instance: &GameInstance, config: &Configuration) -> Vec<String> {
        let mut out = Vec::new();
        let (Some(theorem), Some(Window { p, q })) = (self.theorem(instance), self.window()) else {
            return out;
        };
        let ceiling = theorem.parameter_ceiling();
        if !(p > 0.0 && p <= ceiling && q > 0.0 && q <= ceiling) {
            out.push(format!(
                "window (p={p}, q={q}) outside (0, {ceiling}] for {theorem:?}"
            ));
        }
        let Ok(probs) = self.probabilities(instance, config) else {
            out.push("probabilities could not be evaluated".into());
            return out;
        };
        let g = instance.graph();
        let unstable = instance.unstable_set(config);
        let mut flags = vec![false; instance.node_count()];
        for &u in &unstable {
            flags[u] = true;
        }
        for &u in &unstable {
            let (lo_div, hi_div) = match theorem {
                Theorem::MaxDegree => (g.max_degree(), g.nbhd_max_degree(u)),
                Theorem::LocalDegree => (g.degree(u), g.degree(u)),
                Theorem::General => (instance.delta_p() as usize, instance.delta_p() as usize),
                Theorem::Adaptive => {
                    let d = g
                        .neighbors(u)
                        .iter()
                        .filter(|&&v| flags[v] && config.get(v) != config.get(u))
                        .count();
                    (d + 1, d + 1)
                }
            };
            let (lo, hi) = (p / lo_div as f64, q / hi_div as f64);
            let eps = 1e-12;
            if probs[u] < lo - eps || probs[u] > hi + eps {
                out.push(format!(
                    "node {u}: p_u = {} outside [{lo}, {hi}] for {theorem:?}",
                    probs[u]
                ));
            }
        }
        out
    }
}

pub(crate) fn check_range(
    probs: &[f64],
    degenerate: impl Fn(usize) -> bool,
) -> Result<(), ScheduleError> {
    for (u, &value) in probs.iter().enumerate() {
        let ok = value > 0.0 && value <= 1.0;
        if !ok && !(value == 0.0 && degenerate(u)) {
            return Err(ScheduleError::ProbabilityOutOfRange { node: u, value });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Belief;
    use crate::graph::Graph;

    fn coordination(g: Graph) -> GameInstance {
        GameInstance::symmetric_coordination(g)
    }

    #[test]
    fn max_degree_on_degree_ten() {
        let inst = coordination(Graph::star(11).unwrap());
        let c = Configuration::uniform(11, 0);
        let probs = ActivationSchedule::max_degree(0.5)
            .probabilities(&inst, &c)
            .unwrap();
        assert!(probs.iter().all(|&p| (p - 0.05).abs() < 1e-15));
    }

    #[test]
    fn adaptive_one_conflicting_unstable_neighbor() {
        let inst = coordination(Graph::path(2).unwrap());
        let c = Configuration::new(vec![0, 1]);
        let probs = ActivationSchedule::adaptive(0.3)
            .probabilities(&inst, &c)
            .unwrap();
        assert_eq!(probs, vec![0.15, 0.15]);
    }

    #[test]
    fn potential_weighted_uses_delta_p() {
        let inst =
            GameInstance::opinion_game(&Graph::path(3).unwrap(), &[Belief::Quarter; 3]).unwrap();
        let c = Configuration::uniform(6, 0);
        let probs = ActivationSchedule::potential_weighted(0.4)
            .probabilities(&inst, &c)
            .unwrap();
        assert!(probs.iter().all(|&p| p == 0.4 / 41.0));
    }

    #[test]
    fn local_and_neighborhood() {
        let inst = coordination(Graph::path(3).unwrap());
        let c = Configuration::uniform(3, 0);
        let local = ActivationSchedule::local_degree(0.5)
            .probabilities(&inst, &c)
            .unwrap();
        assert_eq!(local, vec![0.5, 0.25, 0.5]);
        let nbhd = ActivationSchedule::neighborhood_max(0.2, 0.5)
            .probabilities(&inst, &c)
            .unwrap();
        assert_eq!(nbhd, vec![0.25, 0.5, 0.25]);
    }

    #[test]
    fn degenerate_divisors_give_zero() {
        let inst = coordination(Graph::erdos_renyi(4, 0.0, 1).unwrap());
        let c = Configuration::uniform(4, 0);
        for s in [
            ActivationSchedule::max_degree(0.5),
            ActivationSchedule::local_degree(0.5),
            ActivationSchedule::neighborhood_max(0.1, 0.5),
            ActivationSchedule::potential_weighted(0.5),
        ] {
            assert_eq!(s.probabilities(&inst, &c).unwrap(), vec![0.0; 4]);
        }
    }

    #[test]
    fn misconfigured_alpha_rejected() {
        let inst = coordination(Graph::path(3).unwrap());
        let c = Configuration::uniform(3, 0);
        let err = ActivationSchedule::local_degree(1.5)
            .probabilities(&inst, &c)
            .unwrap_err();
        assert_eq!(
            err,
            ScheduleError::ProbabilityOutOfRange {
                node: 0,
                value: 1.5
            }
        );
        assert!(ActivationSchedule::constant(0.0)
            .probabilities(&inst, &c)
            .is_err());
    }

    #[test]
    fn adaptive_needs_coordination() {
        let inst = GameInstance::minority(Graph::path(3).unwrap());
        let c = Configuration::uniform(3, 0);
        assert_eq!(
            ActivationSchedule::adaptive(0.3).probabilities(&inst, &c),
            Err(ScheduleError::AdaptiveNeedsCoordination)
        );
    }

    #[test]
    fn windows_and_theorems() {
        let inst = coordination(Graph::path(2).unwrap());
        let c = Configuration::new(vec![0, 1]);
        assert_eq!(ActivationSchedule::constant(0.5).theorem(&inst), None);
        let windowed = ActivationSchedule::constant(0.25).with_window(0.25, 0.25);
        assert_eq!(windowed.theorem(&inst), Some(Theorem::MaxDegree));
        assert!(windowed.window_warnings(&inst, &c).is_empty());
        let outside = ActivationSchedule::constant(0.9).with_window(0.25, 0.25);
        assert_eq!(outside.window_warnings(&inst, &c).len(), 2);
        assert_eq!(
            ActivationSchedule::neighborhood_max(0.2, 0.5).window(),
            Some(Window { p: 0.2, q: 0.5 })
        );
        let minority = GameInstance::minority(Graph::path(2).unwrap());
        assert_eq!(
            ActivationSchedule::max_degree(0.3).theorem(&minority),
            Some(Theorem::General)
        );
    }

    #[test]
    fn schedule_json() {
        let s: ActivationSchedule =
            serde_json::from_str(r#"{"kind":"adaptive","alpha":0.2,"window":{"p":0.2,"q":0.4}}"#)
                .unwrap();
        assert_eq!(s, ActivationSchedule::adaptive(0.2).with_window(0.2, 0.4));
    }
}
