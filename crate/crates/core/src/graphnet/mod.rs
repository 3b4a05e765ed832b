//! Network topologies and their structural metrics.
//!
//! All graphs are simple and undirected with node ids `0..n`. Edges are
//! stored once as `(u, v)` with `u < v`, sorted ascending, and adjacency
//! lists are sorted ascending so that neighbour order is reproducible.

mod generators;
mod metrics;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use generators::{
    make_disconnected, make_lattice, make_modular, make_random_regular, CANONICAL_MODULAR_SEED,
    RANDOM_REGULAR_RETRY_BUDGET,
};
pub use metrics::{
    avg_path_length, betweenness, mean_betweenness, topology_metrics, TopologyMetrics,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Lattice,
    RandomRegular,
    Modular,
    Disconnected,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Lattice => "lattice",
            TopologyKind::RandomRegular => "random_regular",
            TopologyKind::Modular => "modular",
            TopologyKind::Disconnected => "disconnected",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lattice" => Ok(TopologyKind::Lattice),
            "random_regular" => Ok(TopologyKind::RandomRegular),
            "modular" => Ok(TopologyKind::Modular),
            "disconnected" => Ok(TopologyKind::Disconnected),
            other => Err(Error::Parameter(format!("unknown topology kind `{other}`"))),
        }
    }
}

/// Parameters of a topology, resolved to a [`Graph`] by [`TopologySpec::build`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySpec {
    Lattice {
        rows: usize,
        cols: usize,
    },
    RandomRegular {
        n: usize,
        d: usize,
        /// Fixed generation seed; when absent the caller's seed is used.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Modular {
        cliques: usize,
        size: usize,
        /// Rewiring seed; absent means the canonical construction.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Disconnected {
        n: usize,
    },
}

impl TopologySpec {
    /// The three 49-node, degree-4 networks used throughout the study.
    pub fn standard_topologies() -> [TopologySpec; 3] {
        [
            TopologySpec::Lattice { rows: 7, cols: 7 },
            TopologySpec::RandomRegular {
                n: 49,
                d: 4,
                seed: None,
            },
            TopologySpec::Modular {
                cliques: 7,
                size: 7,
                seed: None,
            },
        ]
    }

    pub fn kind(&self) -> TopologyKind {
        match self {
            TopologySpec::Lattice { .. } => TopologyKind::Lattice,
            TopologySpec::RandomRegular { .. } => TopologyKind::RandomRegular,
            TopologySpec::Modular { .. } => TopologyKind::Modular,
            TopologySpec::Disconnected { .. } => TopologyKind::Disconnected,
        }
    }

    pub fn node_count(&self) -> usize {
        match *self {
            TopologySpec::Lattice { rows, cols } => rows * cols,
            TopologySpec::RandomRegular { n, .. } => n,
            TopologySpec::Modular { cliques, size, .. } => cliques * size,
            TopologySpec::Disconnected { n } => n,
        }
    }

    /// Seed actually used for generation when `fallback_seed` is offered.
    pub fn effective_seed(&self, fallback_seed: u64) -> u64 {
        match *self {
            TopologySpec::RandomRegular { seed, .. } => seed.unwrap_or(fallback_seed),
            TopologySpec::Modular { seed, .. } => seed.unwrap_or(CANONICAL_MODULAR_SEED),
            _ => 0,
        }
    }

    pub fn build(&self, fallback_seed: u64) -> Result<Graph> {
        let seed = self.effective_seed(fallback_seed);
        match *self {
            TopologySpec::Lattice { rows, cols } => make_lattice(rows, cols),
            TopologySpec::RandomRegular { n, d, .. } => make_random_regular(n, d, seed),
            TopologySpec::Modular { cliques, size, .. } => make_modular(cliques, size, seed),
            TopologySpec::Disconnected { n } => make_disconnected(n),
        }
    }
}

/// Simple undirected graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Build a graph from an edge list. Edge orientation and order are
    /// irrelevant; self-loops, duplicates and out-of-range ids are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut norm: Vec<(usize, usize)> = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            norm.push((u.min(v), u.max(v)));
        }
        norm.sort_unstable();
        if let Some(w) = norm.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &norm {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph {
            n,
            edges: norm,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted `(u, v)` pairs with `u < v`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbours of `v` in ascending id order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(v) = queue.pop_front() {
            let next = dist[v].map(|d| d + 1);
            for &w in &self.adjacency[v] {
                if dist[w].is_none() {
                    dist[w] = next;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.bfs_distances(0).iter().all(Option::is_some)
    }
}

/// On-disk form of a topology: `{"n", "edges", "kind", "seed"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub kind: TopologyKind,
    pub seed: u64,
}

impl TopologyFile {
    pub fn new(graph: &Graph, kind: TopologyKind, seed: u64) -> Self {
        TopologyFile {
            n: graph.node_count(),
            edges: graph.edges().iter().map(|&(u, v)| [u, v]).collect(),
            kind,
            seed,
        }
    }

    pub fn to_graph(&self) -> Result<Graph> {
        Graph::from_edges(self.n, self.edges.iter().map(|e| (e[0], e[1])))
    }
}
