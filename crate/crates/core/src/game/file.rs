//! JSON instance documents.
//!
//! ```json
//! {
//!   "graph": {"family": "path", "n": 3},
//!   "strategy_counts": [2, 2, 2],
//!   "edges": [{"u": 0, "v": 1, "table": [[0, 1], [1, 0]]},
//!             {"u": 1, "v": 2, "table": [[0, 1], [1, 0]]}]
//! }
//! ```
//!
//! Instead of `strategy_counts` and `edges`, a document may name a
//! `builder` (`symmetric_coordination`, `minority`, `opinion`); the opinion
//! builder also reads `beliefs`. `graph` is either a generator family, an
//! inline `{"nodes": n, "edges": [[u, v], ...]}`, or `{"edge_list": path}`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Belief, GameError, GameInstance};
use crate::graph::{Graph, StandardFamily};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Family(StandardFamily),
    Inline {
        #[serde(default)]
        nodes: Option<usize>,
        edges: Vec<(usize, usize)>,
    },
    EdgeListFile {
        edge_list: PathBuf,
    },
}

impl GraphSource {
    /// Relative edge-list paths resolve against `base_dir` when given.
    pub fn build(&self, base_dir: Option<&Path>) -> Result<Graph, GameError> {
        match self {
            Self::Family(f) => Ok(f.build()?),
            Self::Inline { nodes, edges } => {
                let implied = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
                Ok(Graph::from_edges(
                    nodes.unwrap_or(implied),
                    edges.iter().copied(),
                )?)
            }
            Self::EdgeListFile { edge_list } => {
                let path = match base_dir {
                    Some(dir) if edge_list.is_relative() => dir.join(edge_list),
                    _ => edge_list.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| GameError::Io(format!("{}: {e}", path.display())))?;
                Ok(Graph::from_edge_list(&text)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builder {
    SymmetricCoordination,
    Minority,
    Opinion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeTableEntry {
    pub u: usize,
    pub v: usize,
    pub table: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub graph: GraphSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<Builder>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<Vec<Belief>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy_counts: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<EdgeTableEntry>>,
}

impl InstanceFile {
    pub fn load(path: &Path) -> Result<Self, GameError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GameError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| GameError::Format(e.to_string()))
    }

    /// Explicit document for an existing instance (tables already integral).
    pub fn from_instance(instance: &GameInstance) -> Self {
        let g = instance.graph();
        let edges = g
            .edges()
            .map(|(u, v)| EdgeTableEntry {
                u,
                v,
                table: instance
                    .edge_game(u, v)
                    .expect("edge")
                    .to_rows()
                    .into_iter()
                    .map(|r| r.into_iter().map(|x| x as f64).collect())
                    .collect(),
            })
            .collect();
        Self {
            graph: GraphSource::Inline {
                nodes: Some(g.node_count()),
                edges: g.edges().collect(),
            },
            builder: None,
            beliefs: None,
            strategy_counts: Some(instance.strategy_counts().to_vec()),
            edges: Some(edges),
        }
    }

    pub fn build(&self, base_dir: Option<&Path>) -> Result<GameInstance, GameError> {
        let graph = self.graph.build(base_dir)?;
        match self.builder {
            Some(Builder::SymmetricCoordination) => Ok(GameInstance::symmetric_coordination(graph)),
            Some(Builder::Minority) => Ok(GameInstance::minority(graph)),
            Some(Builder::Opinion) => {
                let beliefs = self
                    .beliefs
                    .as_ref()
                    .ok_or_else(|| GameError::Format("opinion builder needs beliefs".into()))?;
                GameInstance::opinion_game(&graph, beliefs)
            }
            None => {
                let counts = self
                    .strategy_counts
                    .clone()
                    .ok_or_else(|| GameError::Format("missing strategy_counts".into()))?;
                let edges = self
                    .edges
                    .as_ref()
                    .ok_or_else(|| GameError::Format("missing edges".into()))?;
                GameInstance::from_potential_tables(
                    graph,
                    counts,
                    edges.iter().map(|e| ((e.u, e.v), e.table.clone())),
                )
            }
        }
    }
}
