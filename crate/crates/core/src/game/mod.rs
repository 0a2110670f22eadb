//! Local interaction potential games.
//!
//! A [`GameInstance`] stores one non-negative integer potential table per
//! edge. Payoffs are never materialized: a player's gain from a unilateral
//! switch equals the decrease of the global potential, so every response
//! decision is made from potential differences on the incident edges.

mod builders;
mod file;
mod normalize;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};

pub use builders::Belief;
pub use file::{Builder, EdgeTableEntry, GraphSource, InstanceFile};
pub use normalize::{normalize_tables, Normalized};

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no potential table for edge ({0}, {1})")]
    MissingEdgeGame(usize, usize),
    #[error("two potential tables for edge ({0}, {1})")]
    DuplicateEdgeGame(usize, usize),
    #[error("({0}, {1}) is not an edge of the graph")]
    NotAnEdge(usize, usize),
    #[error("table dimension mismatch on edge ({u}, {v}): expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        u: usize,
        v: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("potential table is empty or ragged")]
    RaggedTable,
    #[error("potential table entry {0} is negative")]
    NegativeEntry(i64),
    #[error("potential table entry {0} is not finite")]
    NonFinite(f64),
    #[error("belief {0} is not one of 1/4, 3/4")]
    InvalidBelief(f64),
    #[error("expected {expected} strategy counts, got {got}")]
    StrategyCountLength { expected: usize, got: usize },
    #[error("node {0} has zero strategies")]
    ZeroStrategies(usize),
    #[error("configuration invalid: {0}")]
    InvalidConfiguration(String),
    #[error("failed to read instance file: {0}")]
    Io(String),
    #[error("malformed instance document: {0}")]
    Format(String),
}

/// A two-player potential table `P_uv[s_u][s_v]`, rows indexed by the
/// endpoint with the smaller id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct EdgeGame {
    rows: usize,
    cols: usize,
    values: Vec<i64>,
    max_value: i64,
}

impl EdgeGame {
    pub fn new(table: Vec<Vec<i64>>) -> Result<Self, GameError> {
        let rows = table.len();
        let cols = table.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || table.iter().any(|r| r.len() != cols) {
            return Err(GameError::RaggedTable);
        }
        let values: Vec<i64> = table.into_iter().flatten().collect();
        if let Some(&neg) = values.iter().find(|&&x| x < 0) {
            return Err(GameError::NegativeEntry(neg));
        }
        let max_value = values.iter().copied().max().unwrap_or(0);
        Ok(Self {
            rows,
            cols,
            values,
            max_value,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.values[row * self.cols + col]
    }

    /// `Δ_{P_uv}`, the largest entry.
    pub fn max_value(&self) -> i64 {
        self.max_value
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.values.chunks(self.cols).map(<[i64]>::to_vec).collect()
    }

    /// `[[0, w], [w, 0]]` with `w >= 1`.
    fn is_coordination(&self) -> bool {
        self.rows == 2
            && self.cols == 2
            && self.get(0, 0) == 0
            && self.get(1, 1) == 0
            && self.get(0, 1) == self.get(1, 0)
            && self.get(0, 1) >= 1
    }
}

impl TryFrom<Vec<Vec<i64>>> for EdgeGame {
    type Error = GameError;

    fn try_from(table: Vec<Vec<i64>>) -> Result<Self, Self::Error> {
        Self::new(table)
    }
}

impl From<EdgeGame> for Vec<Vec<i64>> {
    fn from(game: EdgeGame) -> Self {
        game.to_rows()
    }
}

/// One strategy index per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration(Vec<usize>);

impl Configuration {
    pub fn new(strategies: Vec<usize>) -> Self {
        Self(strategies)
    }

    pub fn uniform(n: usize, strategy: usize) -> Self {
        Self(vec![strategy; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    #[inline]
    pub fn get(&self, u: usize) -> usize {
        self.0[u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, s: usize) {
        self.0[u] = s;
    }
}

impl From<Vec<usize>> for Configuration {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

impl std::fmt::Display for Configuration {
    /// Compact form: digits for strategies below 10, dot-separated otherwise.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.iter().all(|&s| s < 10) {
            for s in &self.0 {
                write!(f, "{s}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
            f.write_str(&parts.join("."))
        }
    }
}

/// A graph with a potential table on every edge.
#[derive(Debug, Clone)]
pub struct GameInstance {
    graph: Graph,
    strategy_counts: Vec<usize>,
    tables: Vec<EdgeGame>,
    /// Table index per adjacency slot, aligned with `graph.neighbors(u)`.
    incident_tables: Vec<Vec<u32>>,
    delta_p: i64,
    coordination: bool,
}

impl GameInstance {
    /// Builds an instance from explicit per-edge tables. Every edge must
    /// appear exactly once, keyed by either orientation; tables for `(v, u)`
    /// with `v > u` are given in the caller's orientation and transposed.
    pub fn from_edge_games<I>(
        graph: Graph,
        strategy_counts: Vec<usize>,
        games: I,
    ) -> Result<Self, GameError>
    where
        I: IntoIterator<Item = ((usize, usize), EdgeGame)>,
    {
        let mut by_edge: HashMap<(usize, usize), EdgeGame> = HashMap::new();
        for ((a, b), game) in games {
            if !graph.has_edge(a, b) {
                return Err(GameError::NotAnEdge(a, b));
            }
            let (key, game) = if a < b {
                ((a, b), game)
            } else {
                ((b, a), transpose(&game))
            };
            if by_edge.insert(key, game).is_some() {
                return Err(GameError::DuplicateEdgeGame(key.0, key.1));
            }
        }
        let mut interned: Vec<EdgeGame> = Vec::new();
        let mut index: HashMap<EdgeGame, u32> = HashMap::new();
        let mut edge_index: HashMap<(usize, usize), u32> = HashMap::new();
        for (u, v) in graph.edges() {
            let game = by_edge
                .remove(&(u, v))
                .ok_or(GameError::MissingEdgeGame(u, v))?;
            let next = interned.len() as u32;
            let id = *index.entry(game.clone()).or_insert_with(|| {
                interned.push(game);
                next
            });
            edge_index.insert((u, v), id);
        }
        Self::assemble(graph, strategy_counts, interned, |u, v| {
            edge_index[&(u.min(v), u.max(v))]
        })
    }

    /// Shared constructor: `table_of(u, v)` returns the interned table index
    /// for the edge, with `u < v` orientation.
    pub(crate) fn assemble(
        graph: Graph,
        strategy_counts: Vec<usize>,
        tables: Vec<EdgeGame>,
        table_of: impl Fn(usize, usize) -> u32,
    ) -> Result<Self, GameError> {
        let n = graph.node_count();
        if strategy_counts.len() != n {
            return Err(GameError::StrategyCountLength {
                expected: n,
                got: strategy_counts.len(),
            });
        }
        if let Some(u) = strategy_counts.iter().position(|&k| k == 0) {
            return Err(GameError::ZeroStrategies(u));
        }
        let incident_tables: Vec<Vec<u32>> = (0..n)
            .map(|u| graph.neighbors(u).iter().map(|&v| table_of(u, v)).collect())
            .collect();
        for (u, v) in graph.edges() {
            let t = &tables[table_of(u, v) as usize];
            let expected = (strategy_counts[u], strategy_counts[v]);
            if (t.rows(), t.cols()) != expected {
                return Err(GameError::DimensionMismatch {
                    u,
                    v,
                    expected,
                    got: (t.rows(), t.cols()),
                });
            }
        }
        let delta_p = (0..n)
            .map(|u| {
                incident_tables[u]
                    .iter()
                    .map(|&t| tables[t as usize].max_value())
                    .sum::<i64>()
            })
            .max()
            .unwrap_or(0);
        let coordination = strategy_counts.iter().all(|&k| k == 2)
            && graph
                .edges()
                .all(|(u, v)| tables[table_of(u, v) as usize].is_coordination());
        Ok(Self {
            graph,
            strategy_counts,
            tables,
            incident_tables,
            delta_p,
            coordination,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn strategy_counts(&self) -> &[usize] {
        &self.strategy_counts
    }

    pub fn strategy_count(&self, u: usize) -> usize {
        self.strategy_counts[u]
    }

    /// Nodes with at least two strategies; the others can never move.
    pub fn player_count(&self) -> usize {
        self.strategy_counts.iter().filter(|&&k| k > 1).count()
    }

    /// `Δ_P = max_u Σ_{v ∈ N(u)} Δ_{P_uv}`.
    pub fn delta_p(&self) -> i64 {
        self.delta_p
    }

    /// True when every node has two strategies and every edge table is a
    /// scaled symmetric coordination table `[[0, w], [w, 0]]`.
    pub fn is_coordination(&self) -> bool {
        self.coordination
    }

    /// The table on edge `(u, v)` in `min(u, v)`-row orientation.
    pub fn edge_game(&self, u: usize, v: usize) -> Option<&EdgeGame> {
        let slot = self.graph.neighbors(u).binary_search(&v).ok()?;
        Some(&self.tables[self.incident_tables[u][slot] as usize])
    }

    /// Table index per adjacency slot of `u`.
    pub(crate) fn incident_tables(&self, u: usize) -> &[u32] {
        &self.incident_tables[u]
    }

    /// `P_uv(s_u, s_v)` respecting the edge orientation.
    #[inline]
    pub(crate) fn oriented(&self, table: u32, u: usize, s_u: usize, v: usize, s_v: usize) -> i64 {
        let t = &self.tables[table as usize];
        if u < v {
            t.get(s_u, s_v)
        } else {
            t.get(s_v, s_u)
        }
    }

    /// Potential of edge `(u, v)` when the endpoints play `s_u`, `s_v`.
    pub fn edge_potential(&self, u: usize, s_u: usize, v: usize, s_v: usize) -> Option<i64> {
        let game = self.edge_game(u, v)?;
        Some(if u < v {
            game.get(s_u, s_v)
        } else {
            game.get(s_v, s_u)
        })
    }

    pub fn validate_config(&self, config: &Configuration) -> Result<(), GameError> {
        if config.len() != self.node_count() {
            return Err(GameError::InvalidConfiguration(format!(
                "length {} for {} nodes",
                config.len(),
                self.node_count()
            )));
        }
        for (u, (&s, &k)) in config
            .as_slice()
            .iter()
            .zip(&self.strategy_counts)
            .enumerate()
        {
            if s >= k {
                return Err(GameError::InvalidConfiguration(format!(
                    "node {u} plays {s} but has {k} strategies"
                )));
            }
        }
        Ok(())
    }

    /// `P(c) = Σ_{uv ∈ E} P_uv(c_u, c_v)`.
    pub fn total_potential(&self, config: &Configuration) -> i64 {
        self.graph
            .edges()
            .map(|(u, v)| {
                self.edge_game(u, v)
                    .expect("edge")
                    .get(config.get(u), config.get(v))
            })
            .sum()
    }

    /// Upper bound `Σ_{uv} Δ_{P_uv}` on the potential.
    pub fn potential_ceiling(&self) -> i64 {
        self.graph
            .edges()
            .map(|(u, v)| self.edge_game(u, v).expect("edge").max_value())
            .sum()
    }

    /// Number of edges whose endpoints play different strategies.
    pub fn conflicting_edges(&self, config: &Configuration) -> usize {
        self.graph
            .edges()
            .filter(|&(u, v)| config.get(u) != config.get(v))
            .count()
    }

    /// Local cost `Σ_{v ∈ N(u)} P_uv(s, c_v)` for every strategy `s` of `u`.
    pub fn local_costs(&self, config: &Configuration, u: usize) -> Vec<i64> {
        let mut costs = vec![0; self.strategy_counts[u]];
        for (&v, &t) in self.graph.neighbors(u).iter().zip(&self.incident_tables[u]) {
            for (s, cost) in costs.iter_mut().enumerate() {
                *cost += self.oriented(t, u, s, v, config.get(v));
            }
        }
        costs
    }

    /// `P(c) - P(c')` where `c'` differs from `c` only in `u` playing `s`;
    /// equal to `u`'s payoff improvement.
    pub fn payoff_gain(&self, config: &Configuration, u: usize, s: usize) -> i64 {
        let current = config.get(u);
        self.graph
            .neighbors(u)
            .iter()
            .zip(&self.incident_tables[u])
            .map(|(&v, &t)| {
                let cv = config.get(v);
                self.oriented(t, u, current, v, cv) - self.oriented(t, u, s, v, cv)
            })
            .sum()
    }

    /// Largest-gain strategy; the current strategy when no switch gains,
    /// otherwise the lowest index among maximizers.
    pub fn best_response(&self, config: &Configuration, u: usize) -> usize {
        let current = config.get(u);
        let mut best = current;
        let mut best_gain = 0;
        for s in 0..self.strategy_counts[u] {
            let gain = self.payoff_gain(config, u, s);
            if gain > best_gain {
                best = s;
                best_gain = gain;
            }
        }
        best
    }

    pub fn is_unstable(&self, config: &Configuration, u: usize) -> bool {
        (0..self.strategy_counts[u]).any(|s| self.payoff_gain(config, u, s) >= 1)
    }

    /// Nodes with a strictly improving switch, ascending.
    pub fn unstable_set(&self, config: &Configuration) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&u| self.is_unstable(config, u))
            .collect()
    }

    pub fn is_equilibrium(&self, config: &Configuration) -> bool {
        (0..self.node_count()).all(|u| !self.is_unstable(config, u))
    }
}

fn transpose(game: &EdgeGame) -> EdgeGame {
    let rows = (0..game.cols())
        .map(|c| (0..game.rows()).map(|r| game.get(r, c)).collect())
        .collect();
    EdgeGame::new(rows).expect("transpose preserves validity")
}
