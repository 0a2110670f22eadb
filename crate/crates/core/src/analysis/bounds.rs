//! Constant-free convergence-time bounds `M₀/δ`.

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::dynamics::Theorem;
use crate::game::GameInstance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    pub theorem: Theorem,
    pub value: f64,
    pub delta: f64,
    /// For the general result, the bound with the theorem's stated
    /// `p(1-2q)` denominator instead of the drift constant `p(1-q)`.
    pub stated_value: Option<f64>,
}

/// `m0` is the initial number of conflicting edges for the coordination
/// results and `M₀ = nΔ_P/2` is derived from the instance for the general
/// one (the argument is then ignored).
pub fn theorem_bound(
    theorem: Theorem,
    instance: &GameInstance,
    m0: f64,
    p: f64,
    q: f64,
) -> Result<TheoremBound, AnalysisError> {
    let ceiling = theorem.parameter_ceiling();
    let in_range = |x: f64| x > 0.0 && x <= ceiling;
    if !in_range(p) || !in_range(q) {
        return Err(AnalysisError::InvalidParameter(format!(
            "(p={p}, q={q}) outside (0, {ceiling}] for {theorem:?}"
        )));
    }
    let max_degree = instance.graph().max_degree() as f64;
    let dp = instance.delta_p() as f64;
    let (delta, start, stated) = match theorem {
        Theorem::MaxDegree => (p * (1.0 - q) / max_degree, m0, None),
        Theorem::Adaptive => (p * (1.0 - 2.0 * q), m0, None),
        Theorem::LocalDegree => (p * (1.0 - 2.0 * q) / max_degree, m0, None),
        Theorem::General => {
            let m0 = instance.player_count() as f64 * dp / 2.0;
            let stated_delta = p * (1.0 - 2.0 * q) / dp;
            (
                p * (1.0 - q) / dp,
                m0,
                (stated_delta > 0.0).then(|| m0 / stated_delta),
            )
        }
    };
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(AnalysisError::InvalidParameter(format!(
            "improvement constant {delta} is not positive for {theorem:?}"
        )));
    }
    Ok(TheoremBound {
        theorem,
        value: start / delta,
        delta,
        stated_value: stated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Belief;
    use crate::graph::Graph;

    #[test]
    fn plug_in_values() {
        let star = GameInstance::symmetric_coordination(Graph::star(11).unwrap());
        let b = theorem_bound(Theorem::MaxDegree, &star, 50.0, 0.5, 0.5).unwrap();
        assert!((b.value - 2000.0).abs() < 1e-9);
        let b = theorem_bound(Theorem::Adaptive, &star, 50.0, 0.25, 0.25).unwrap();
        assert!((b.value - 400.0).abs() < 1e-9);
        let b = theorem_bound(Theorem::LocalDegree, &star, 50.0, 0.25, 0.25).unwrap();
        assert!((b.value - 4000.0).abs() < 1e-9);
    }

    #[test]
    fn general_opinion_path() {
        let g = Graph::path(3).unwrap();
        let inst = GameInstance::opinion_game(&g, &[Belief::Quarter; 3]).unwrap();
        let b = theorem_bound(Theorem::General, &inst, 0.0, 0.25, 0.25).unwrap();
        let expected = (3.0 * 41.0 / 2.0) * 41.0 / (0.25 * 0.75);
        assert!((b.value - expected).abs() < 1e-9);
        assert_eq!(b.value.round(), 13448.0);
        assert!((b.stated_value.unwrap() - expected * 1.5).abs() < 1e-6);
    }

    #[test]
    fn out_of_window() {
        let inst = GameInstance::symmetric_coordination(Graph::path(3).unwrap());
        assert!(theorem_bound(Theorem::Adaptive, &inst, 1.0, 0.25, 0.5).is_err());
        assert!(theorem_bound(Theorem::Adaptive, &inst, 1.0, 0.25, 0.6).is_err());
        assert!(theorem_bound(Theorem::MaxDegree, &inst, 1.0, 0.0, 0.5).is_err());
        assert!(theorem_bound(Theorem::MaxDegree, &inst, 1.0, 0.5, 1.0).is_err());
    }
}
