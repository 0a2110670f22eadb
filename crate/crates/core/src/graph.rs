//! Undirected simple graphs with cached degree statistics.
//!
//! Node ids are dense integers `0..n`. Every constructor documents its id
//! layout so that configurations written against one run can be replayed
//! against another.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: expected two non-negative integer ids, got {text:?}")]
    Parse { line: usize, text: String },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("graph invariant violated: {0}")]
    Invariant(String),
}

/// An immutable undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    degree: Vec<usize>,
    max_degree: usize,
    nbhd_max_degree: Vec<usize>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph on `node_count` nodes. Duplicate edges collapse;
    /// self-loops and out-of-range ids are rejected.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); node_count];
        for (u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if u >= node_count || v >= node_count {
                return Err(GraphError::NodeOutOfRange(u, v, node_count));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self::from_sorted_adjacency(adjacency))
    }

    fn from_sorted_adjacency(adjacency: Vec<Vec<usize>>) -> Self {
        let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
        let max_degree = degree.iter().copied().max().unwrap_or(0);
        let nbhd_max_degree = adjacency
            .iter()
            .map(|nbrs| nbrs.iter().map(|&v| degree[v]).max().unwrap_or(0))
            .collect();
        let edge_count = degree.iter().sum::<usize>() / 2;
        Self {
            adjacency,
            degree,
            max_degree,
            nbhd_max_degree,
            edge_count,
        }
    }

    /// Parses the edge-list text format: one `u v` pair per line,
    /// `#`-prefixed comment lines and blank lines ignored. The node count is
    /// one more than the largest id mentioned.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        let mut node_count = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = || GraphError::Parse {
                line: idx + 1,
                text: raw.to_string(),
            };
            let mut fields = line.split_whitespace();
            let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err());
            };
            let u: usize = a.parse().map_err(|_| parse_err())?;
            let v: usize = b.parse().map_err(|_| parse_err())?;
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            node_count = node_count.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Self::from_edges(node_count, edges)
    }

    /// Serializes to the edge-list format, one `u v` line per edge with
    /// `u < v`, preceded by an informational comment.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!(
            "# nodes {} edges {}\n",
            self.node_count(),
            self.edge_count()
        );
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    /// Nodes `0..n_left` form side L, `n_left..n_left + n_right` side R.
    pub fn complete_bipartite(n_left: usize, n_right: usize) -> Result<Self, GraphError> {
        if n_left == 0 || n_right == 0 {
            return Err(GraphError::InvalidParams(format!(
                "complete bipartite sides must be non-empty, got ({n_left}, {n_right})"
            )));
        }
        let n = n_left + n_right;
        let adjacency = (0..n)
            .map(|u| {
                if u < n_left {
                    (n_left..n).collect()
                } else {
                    (0..n_left).collect()
                }
            })
            .collect();
        Ok(Self::from_sorted_adjacency(adjacency))
    }

    pub fn path(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidParams("path needs n >= 1".into()));
        }
        Self::from_edges(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::InvalidParams(
                "simple cycle needs n >= 3".into(),
            ));
        }
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn clique(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidParams("clique needs n >= 1".into()));
        }
        let adjacency = (0..n)
            .map(|u| (0..n).filter(|&v| v != u).collect())
            .collect();
        Ok(Self::from_sorted_adjacency(adjacency))
    }

    /// Star on `n` nodes in total: node 0 is the center.
    pub fn star(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidParams("star needs n >= 2".into()));
        }
        Self::complete_bipartite(1, n - 1)
    }

    /// Grid graph; node `(x, y)` has id `y * width + x`.
    pub fn grid(width: usize, height: usize) -> Result<Self, GraphError> {
        if width == 0 || height == 0 {
            return Err(GraphError::InvalidParams("grid sides must be >= 1".into()));
        }
        let id = |x: usize, y: usize| y * width + x;
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                if x + 1 < width {
                    edges.push((id(x, y), id(x + 1, y)));
                }
                if y + 1 < height {
                    edges.push((id(x, y), id(x, y + 1)));
                }
            }
        }
        Self::from_edges(width * height, edges)
    }

    /// G(n, p); deterministic in `seed`.
    pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidParams("erdos_renyi needs n >= 1".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::InvalidParams(format!(
                "edge probability {p} outside [0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.random_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbor ids of `u`.
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.degree[u]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degree
    }

    /// Maximum degree of the whole graph.
    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Largest degree among the neighbors of `u` (0 for isolated nodes).
    pub fn nbhd_max_degree(&self, u: usize) -> usize {
        self.nbhd_max_degree[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.node_count() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// All edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Re-derives every cached quantity and checks symmetry and simplicity.
    pub fn validate(&self) -> Result<(), GraphError> {
        let bad = |msg: String| Err(GraphError::Invariant(msg));
        for (u, nbrs) in self.adjacency.iter().enumerate() {
            if nbrs.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("adjacency of {u} not strictly sorted"));
            }
            for &v in nbrs {
                if v == u {
                    return bad(format!("self-loop at {u}"));
                }
                if !self.has_edge(v, u) {
                    return bad(format!("edge {u}->{v} has no reverse"));
                }
            }
            if self.degree[u] != nbrs.len() {
                return bad(format!("degree cache of {u}"));
            }
            let local = nbrs.iter().map(|&v| self.degree[v]).max().unwrap_or(0);
            if self.nbhd_max_degree[u] != local {
                return bad(format!("neighborhood max degree cache of {u}"));
            }
        }
        if self.max_degree != self.degree.iter().copied().max().unwrap_or(0) {
            return bad("max degree cache".into());
        }
        if 2 * self.edge_count != self.degree.iter().sum::<usize>() {
            return bad("edge count cache".into());
        }
        Ok(())
    }
}

/// Named generator families, as referenced from experiment and instance files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StandardFamily {
    Path { n: usize },
    Cycle { n: usize },
    Clique { n: usize },
    Star { n: usize },
    Grid { width: usize, height: usize },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
    CompleteBipartite { n_left: usize, n_right: usize },
    Tightness { r: usize },
}

impl StandardFamily {
    pub fn build(&self) -> Result<Graph, GraphError> {
        match *self {
            Self::Path { n } => Graph::path(n),
            Self::Cycle { n } => Graph::cycle(n),
            Self::Clique { n } => Graph::clique(n),
            Self::Star { n } => Graph::star(n),
            Self::Grid { width, height } => Graph::grid(width, height),
            Self::ErdosRenyi { n, p, seed } => Graph::erdos_renyi(n, p, seed),
            Self::CompleteBipartite { n_left, n_right } => {
                Graph::complete_bipartite(n_left, n_right)
            }
            Self::Tightness { r } => tightness_network(r).map(|t| t.graph),
        }
    }
}

/// The sequential-frontier network together with its default start.
#[derive(Debug, Clone)]
pub struct TightnessNetwork {
    pub graph: Graph,
    /// Strategy 0 (black) on the clique, 1 (white) on every path node.
    pub initial: Vec<usize>,
    /// Part index per node: 0 for the clique, `i >= 1` for the i-th path.
    pub part_labels: Vec<usize>,
}

impl TightnessNetwork {
    pub fn part_count(&self) -> usize {
        self.part_labels.iter().copied().max().map_or(0, |m| m + 1)
    }
}

/// Builds the network of parts `P_0, ..., P_{r-2}` with `|P_i| = r - i`.
///
/// `P_0` is a clique, every other part is a path, and consecutive parts are
/// completely joined. Ids are assigned part by part, left to right, and
/// along each path in order.
pub fn tightness_network(r: usize) -> Result<TightnessNetwork, GraphError> {
    if r < 4 || !r.is_multiple_of(2) {
        return Err(GraphError::InvalidParams(format!(
            "tightness network needs an even r >= 4, got {r}"
        )));
    }
    let sizes: Vec<usize> = (0..=r - 2).map(|i| r - i).collect();
    let mut starts = Vec::with_capacity(sizes.len());
    let mut n = 0;
    for &s in &sizes {
        starts.push(n);
        n += s;
    }
    let part = |i: usize| starts[i]..starts[i] + sizes[i];

    let mut edges = Vec::new();
    for a in part(0) {
        for b in (a + 1)..part(0).end {
            edges.push((a, b));
        }
    }
    for i in 1..sizes.len() {
        for a in part(i) {
            if a + 1 < part(i).end {
                edges.push((a, a + 1));
            }
            for b in part(i - 1) {
                edges.push((b, a));
            }
        }
    }
    let graph = Graph::from_edges(n, edges)?;

    let mut part_labels = vec![0; n];
    for (i, _) in sizes.iter().enumerate() {
        for u in part(i) {
            part_labels[u] = i;
        }
    }
    let initial = part_labels.iter().map(|&p| usize::from(p > 0)).collect();
    Ok(TightnessNetwork {
        graph,
        initial,
        part_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_path() {
        let g = Graph::from_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.max_degree(), 2);
        g.validate().unwrap();
    }

    #[test]
    fn edge_list_dedup_and_comments() {
        let g = Graph::from_edge_list("# header\n\n0 1\n0 1\n1 0\n").unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degrees(), &[1, 1]);
    }

    #[test]
    fn edge_list_errors() {
        assert_eq!(Graph::from_edge_list("0 0"), Err(GraphError::SelfLoop(0)));
        assert!(matches!(
            Graph::from_edge_list("0 -1"),
            Err(GraphError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Graph::from_edge_list("0 1\n2"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Graph::from_edge_list("0 1 2"),
            Err(GraphError::Parse { .. })
        ));
        assert!(matches!(
            Graph::from_edge_list("a b"),
            Err(GraphError::Parse { .. })
        ));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::grid(3, 2).unwrap();
        assert_eq!(Graph::from_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn bipartite_shapes() {
        let k22 = Graph::complete_bipartite(2, 2).unwrap();
        assert_eq!(
            (k22.node_count(), k22.edge_count(), k22.max_degree()),
            (4, 4, 2)
        );

        let star = Graph::complete_bipartite(3, 1).unwrap();
        assert_eq!(star.degree(0), 1);
        assert_eq!(star.degree(3), 3);
        assert_eq!(star.nbhd_max_degree(0), 3);
        assert_eq!(star.nbhd_max_degree(3), 1);

        let big = Graph::complete_bipartite(100, 100).unwrap();
        assert_eq!(big.edge_count(), 10_000);
        assert_eq!(big.max_degree(), 100);
        big.validate().unwrap();

        assert!(Graph::complete_bipartite(0, 3).is_err());
    }

    #[test]
    fn standard_families() {
        let p3 = Graph::path(3).unwrap();
        assert_eq!(p3.degrees(), &[1, 2, 1]);
        assert_eq!(
            (0..3).map(|u| p3.nbhd_max_degree(u)).collect::<Vec<_>>(),
            vec![2, 1, 2]
        );

        let k4 = Graph::clique(4).unwrap();
        assert_eq!(k4.edge_count(), 6);
        assert!(k4.degrees().iter().all(|&d| d == 3));

        let empty = Graph::erdos_renyi(10, 0.0, 7).unwrap();
        assert_eq!(empty.edge_count(), 0);
        assert_eq!(empty.max_degree(), 0);
        assert_eq!(empty.nbhd_max_degree(3), 0);

        assert_eq!(
            Graph::erdos_renyi(30, 0.3, 5).unwrap(),
            Graph::erdos_renyi(30, 0.3, 5).unwrap()
        );
        assert_eq!(
            Graph::erdos_renyi(5, 1.0, 1).unwrap(),
            Graph::clique(5).unwrap()
        );
        assert!(Graph::erdos_renyi(5, 1.5, 1).is_err());
        assert!(Graph::cycle(2).is_err());
        assert!(Graph::grid(0, 3).is_err());
        assert_eq!(Graph::grid(3, 3).unwrap().edge_count(), 12);
        assert_eq!(Graph::star(4).unwrap().degree(0), 3);
    }

    #[test]
    fn family_spec_json() {
        let spec: StandardFamily = serde_json::from_str(r#"{"family":"cycle","n":5}"#).unwrap();
        assert_eq!(spec.build().unwrap(), Graph::cycle(5).unwrap());
    }

    /// Brute-force strict-majority instability on the 2-colored network.
    fn unstable_nodes(t: &TightnessNetwork) -> Vec<usize> {
        (0..t.graph.node_count())
            .filter(|&u| {
                let differing = t
                    .graph
                    .neighbors(u)
                    .iter()
                    .filter(|&&v| t.initial[v] != t.initial[u])
                    .count();
                2 * differing > t.graph.degree(u)
            })
            .collect()
    }

    #[test]
    fn tightness_r4() {
        let t = tightness_network(4).unwrap();
        t.graph.validate().unwrap();
        assert_eq!(t.graph.node_count(), 9);
        assert_eq!(t.part_labels, vec![0, 0, 0, 0, 1, 1, 1, 2, 2]);
        // the 3-path is 4-5-6, its endpoints are 4 and 6
        assert_eq!(unstable_nodes(&t), vec![4, 6]);
        let conflicts = t
            .graph
            .edges()
            .filter(|&(u, v)| t.initial[u] != t.initial[v])
            .count();
        assert_eq!(conflicts, 12);
    }

    #[test]
    fn tightness_sizes() {
        let t = tightness_network(8).unwrap();
        assert_eq!(t.graph.node_count(), 35);
        assert_eq!(t.part_count(), 7);
        for r in [6, 10, 12] {
            let t = tightness_network(r).unwrap();
            t.graph.validate().unwrap();
            let conflicts = t
                .graph
                .edges()
                .filter(|&(u, v)| t.initial[u] != t.initial[v])
                .count();
            assert_eq!(conflicts, r * (r - 1));
            assert_eq!(unstable_nodes(&t).len(), 2);
            assert!(t.graph.max_degree() <= 2 * r);
        }
        assert!(tightness_network(5).is_err());
        assert!(tightness_network(2).is_err());
    }
}
