//! Undirected communication graphs over controller indices.

mod connectivity;
mod format;
mod generate;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use connectivity::{is_connected_without, local_connectivity, vertex_connectivity, ConnectivityCertificate};
pub use generate::{
    extend_graph, extend_graph_random, generate_preventive, generate_responsive, Strategy,
};

pub type NodeId = usize;

/// Simple undirected graph on nodes `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    adjacency: Vec<BTreeSet<NodeId>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    node_count: usize,
    edges: Vec<(NodeId, NodeId)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;

    fn try_from(repr: GraphRepr) -> Result<Self> {
        Graph::from_edges(repr.node_count, repr.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            node_count: g.node_count(),
            edges: g.edges().collect(),
        }
    }
}

impl Graph {
    /// Graph with `node_count` nodes and no edges.
    pub fn empty(node_count: usize) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidGraph("node_count must be positive".into()));
        }
        Ok(Graph {
            adjacency: vec![BTreeSet::new(); node_count],
        })
    }

    pub fn complete(node_count: usize) -> Result<Self> {
        let mut g = Graph::empty(node_count)?;
        for i in 0..node_count {
            for j in i + 1..node_count {
                g.insert_edge(i, j);
            }
        }
        Ok(g)
    }

    /// Builds a graph from unordered pairs. Rejects self-loops, duplicates
    /// (in either orientation) and out-of-range endpoints.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut g = Graph::empty(node_count)?;
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.range(i + 1..).map(move |&j| (i, j)))
    }

    pub fn add_edge(&mut self, a: NodeId, b: NodeId) -> Result<()> {
        let n = self.node_count();
        if a >= n || b >= n {
            return Err(Error::InvalidGraph(format!(
                "edge ({a}, {b}) has an endpoint outside 0..{n}"
            )));
        }
        if a == b {
            return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
        }
        if self.has_edge(a, b) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
        }
        self.insert_edge(a, b);
        Ok(())
    }

    fn insert_edge(&mut self, a: NodeId, b: NodeId) {
        self.adjacency[a].insert(b);
        self.adjacency[b].insert(a);
    }

    /// Appends a fresh isolated node and returns its index.
    pub(crate) fn push_node(&mut self) -> NodeId {
        self.adjacency.push(BTreeSet::new());
        self.adjacency.len() - 1
    }

    pub fn has_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency.get(a).is_some_and(|adj| adj.contains(&b))
    }

    pub fn degree(&self, i: NodeId) -> usize {
        self.adjacency[i].len()
    }

    /// The neighbor set `N_i`.
    pub fn neighbors(&self, i: NodeId) -> Result<&BTreeSet<NodeId>> {
        self.adjacency.get(i).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "node {i} out of range for graph with {} nodes",
                self.node_count()
            ))
        })
    }

    pub fn is_complete(&self) -> bool {
        let n = self.node_count();
        self.adjacency.iter().all(|adj| adj.len() == n - 1)
    }

    pub fn is_connected(&self) -> bool {
        is_connected_without(self, &BTreeSet::new())
    }

    /// Applies a relabeling: node `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[NodeId]) -> Result<Graph> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument(
                "relabeling is not a permutation of the node set".into(),
            ));
        }
        Graph::from_edges(n, self.edges().map(|(a, b)| (perm[a], perm[b])))
    }
}

/// Communication links known to be compromised.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkAttackSet {
    forbidden_edges: BTreeSet<(NodeId, NodeId)>,
}

impl LinkAttackSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Validates every pair against `node_count`; pairs are normalized so
    /// `(3, 1)` and `(1, 3)` name the same link.
    pub fn from_pairs<I>(node_count: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut set = LinkAttackSet::new();
        for (a, b) in pairs {
            if a == b || a >= node_count || b >= node_count {
                return Err(Error::InvalidArgument(format!(
                    "attacked link ({a}, {b}) is not a pair of distinct nodes in 0..{node_count}"
                )));
            }
            set.forbidden_edges.insert((a.min(b), a.max(b)));
        }
        Ok(set)
    }

    pub fn contains(&self, a: NodeId, b: NodeId) -> bool {
        self.forbidden_edges.contains(&(a.min(b), a.max(b)))
    }

    /// True when no attacked link touches `node`.
    pub fn is_clean(&self, node: NodeId) -> bool {
        !self
            .forbidden_edges
            .iter()
            .any(|&(a, b)| a == node || b == node)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.forbidden_edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.forbidden_edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forbidden_edges.is_empty()
    }

    pub fn max_node(&self) -> Option<NodeId> {
        self.forbidden_edges.iter().map(|&(_, b)| b).max()
    }
}

/// Pattern graph of the demonstration weight matrix (six microgrids).
pub fn demonstration_topology() -> Graph {
    Graph::from_edges(
        6,
        [
            (0, 1),
            (0, 2),
            (0, 3),
            (1, 2),
            (1, 3),
            (1, 4),
            (2, 5),
            (3, 4),
            (3, 5),
            (4, 5),
        ],
    )
    .expect("static edge list is valid")
}
