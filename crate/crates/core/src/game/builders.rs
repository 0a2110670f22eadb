use serde::{Deserialize, Serialize};

use super::normalize::normalize_tables;
use super::{EdgeGame, GameError, GameInstance};
use crate::graph::Graph;

/// Opinion-game beliefs are restricted to 1/4 and 3/4; scaling potentials
/// by 16 then keeps every entry integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum Belief {
    Quarter,
    ThreeQuarters,
}

impl Belief {
    pub fn value(self) -> f64 {
        match self {
            Self::Quarter => 0.25,
            Self::ThreeQuarters => 0.75,
        }
    }

    /// `16 (s - b)^2` for opinion `s ∈ {0, 1}`.
    fn scaled_cost(self, opinion: usize) -> i64 {
        match (self, opinion) {
            (Self::Quarter, 0) | (Self::ThreeQuarters, 1) => 1,
            _ => 9,
        }
    }
}

impl TryFrom<f64> for Belief {
    type Error = GameError;

    fn try_from(b: f64) -> Result<Self, Self::Error> {
        if b == 0.25 {
            Ok(Self::Quarter)
        } else if b == 0.75 {
            Ok(Self::ThreeQuarters)
        } else {
            Err(GameError::InvalidBelief(b))
        }
    }
}

impl From<Belief> for f64 {
    fn from(b: Belief) -> Self {
        b.value()
    }
}

impl GameInstance {
    /// Two colors per node; a conflicting edge costs 1.
    pub fn symmetric_coordination(graph: Graph) -> Self {
        Self::uniform_table(graph, vec![vec![0, 1], vec![1, 0]])
    }

    /// Two colors per node; an agreeing edge costs 1, so players move to the
    /// minority color of their neighborhood and stay put on ties.
    pub fn minority(graph: Graph) -> Self {
        Self::uniform_table(graph, vec![vec![1, 0], vec![0, 1]])
    }

    fn uniform_table(graph: Graph, table: Vec<Vec<i64>>) -> Self {
        let n = graph.node_count();
        let table = EdgeGame::new(table).expect("static table");
        Self::assemble(graph, vec![2; n], vec![table], |_, _| 0).expect("uniform 2x2 tables")
    }

    /// Builds an instance from real-valued tables, normalized to
    /// non-negative integers with the same response structure.
    pub fn from_potential_tables<I>(
        graph: Graph,
        strategy_counts: Vec<usize>,
        tables: I,
    ) -> Result<Self, GameError>
    where
        I: IntoIterator<Item = ((usize, usize), Vec<Vec<f64>>)>,
    {
        let (edges, raw): (Vec<_>, Vec<_>) = tables.into_iter().unzip();
        let normalized = normalize_tables(&raw)?;
        let games = normalized
            .tables
            .into_iter()
            .map(EdgeGame::new)
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_edge_games(graph, strategy_counts, edges.into_iter().zip(games))
    }

    /// Finite opinion game on `graph` with one dummy opinion node per player.
    ///
    /// Players keep ids `0..n` and two opinions; the dummy of player `u` is
    /// node `n + u` with a single strategy. Player edges carry the
    /// coordination table scaled by 16, and the player-dummy edge carries
    /// `[16 b_u^2, 16 (1 - b_u)^2]` as a column.
    pub fn opinion_game(graph: &Graph, beliefs: &[Belief]) -> Result<Self, GameError> {
        let n = graph.node_count();
        if beliefs.len() != n {
            return Err(GameError::StrategyCountLength {
                expected: n,
                got: beliefs.len(),
            });
        }
        let edges = graph.edges().chain((0..n).map(|u| (u, n + u)));
        let augmented = Graph::from_edges(2 * n, edges)?;
        let mut counts = vec![2; n];
        counts.extend(std::iter::repeat_n(1, n));

        let coordination = EdgeGame::new(vec![vec![0, 16], vec![16, 0]])?;
        let quarter = EdgeGame::new(vec![
            vec![Belief::Quarter.scaled_cost(0)],
            vec![Belief::Quarter.scaled_cost(1)],
        ])?;
        let three_quarters = EdgeGame::new(vec![
            vec![Belief::ThreeQuarters.scaled_cost(0)],
            vec![Belief::ThreeQuarters.scaled_cost(1)],
        ])?;
        Self::assemble(
            augmented,
            counts,
            vec![coordination, quarter, three_quarters],
            |u, v| {
                let (lo, hi) = (u.min(v), u.max(v));
                if hi < n {
                    0
                } else {
                    match beliefs[lo] {
                        Belief::Quarter => 1,
                        Belief::ThreeQuarters => 2,
                    }
                }
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Configuration;

    #[test]
    fn minority_rules() {
        let k2 = GameInstance::minority(Graph::path(2).unwrap());
        let same: Configuration = vec![0, 0].into();
        assert_eq!(k2.total_potential(&same), 1);
        assert_eq!(k2.unstable_set(&same), vec![0, 1]);
        let mixed: Configuration = vec![0, 1].into();
        assert_eq!(k2.total_potential(&mixed), 0);
        assert!(k2.is_equilibrium(&mixed));
        assert!(!k2.is_coordination());

        // center sees one black and one white leaf: gains are 0 both ways
        let star = GameInstance::minority(Graph::star(3).unwrap());
        let c: Configuration = vec![0, 1, 0].into();
        assert_eq!(star.payoff_gain(&c, 0, 1), 0);
        assert!(!star.is_unstable(&c, 0));
    }

    #[test]
    fn opinion_path3() {
        let g = Graph::path(3).unwrap();
        let inst = GameInstance::opinion_game(
            &g,
            &[Belief::Quarter, Belief::ThreeQuarters, Belief::Quarter],
        )
        .unwrap();
        assert_eq!(inst.node_count(), 6);
        assert_eq!(inst.player_count(), 3);
        assert_eq!(inst.delta_p(), 16 * 2 + 9);
        assert!(16 * 2 <= inst.delta_p() && inst.delta_p() <= 16 * 3);
        // dummies never move
        let c: Configuration = vec![0, 1, 0, 0, 0, 0].into();
        for dummy in 3..6 {
            assert!(!inst.is_unstable(&c, dummy));
        }
    }

    #[test]
    fn opinion_single_node() {
        let g = Graph::path(1).unwrap();
        let q = GameInstance::opinion_game(&g, &[Belief::Quarter]).unwrap();
        assert_eq!(q.total_potential(&vec![0, 0].into()), 1);
        let one: Configuration = vec![1, 0].into();
        assert_eq!(q.total_potential(&one), 9);
        assert_eq!(q.best_response(&one, 0), 0);

        let tq = GameInstance::opinion_game(&g, &[Belief::ThreeQuarters]).unwrap();
        assert_eq!(tq.total_potential(&vec![1, 0].into()), 1);
    }

    #[test]
    fn belief_parsing() {
        assert_eq!(Belief::try_from(0.25), Ok(Belief::Quarter));
        assert_eq!(Belief::try_from(0.5), Err(GameError::InvalidBelief(0.5)));
        let parsed: Vec<Belief> = serde_json::from_str("[0.75, 0.25]").unwrap();
        assert_eq!(parsed, vec![Belief::ThreeQuarters, Belief::Quarter]);
        assert!(GameInstance::opinion_game(&Graph::path(2).unwrap(), &[Belief::Quarter]).is_err());
    }

    #[test]
    fn coordination_delta_p_is_max_degree() {
        for g in [
            Graph::grid(3, 4).unwrap(),
            Graph::star(6).unwrap(),
            Graph::cycle(7).unwrap(),
        ] {
            let delta = g.max_degree() as i64;
            assert_eq!(GameInstance::symmetric_coordination(g).delta_p(), delta);
        }
    }
}
