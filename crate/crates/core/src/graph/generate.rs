//! Connectivity-preserving topology construction.
//!
//! All generators grow a seed clique on `m = 2f + 1` nodes one node at a
//! time, wiring each new node to `m` existing ones. Adding a node with `m`
//! edges to an `m`-connected graph keeps it `m`-connected, and the first
//! extension of `K_m` is `K_{m+1}`, so every output on at least `m + 1` nodes
//! is `m`-connected. Outputs are still certified with the max-flow oracle.

use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{vertex_connectivity, Graph, LinkAttackSet, NodeId};
use crate::{Error, Result};

/// How the communication agent builds topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Randomized construction before any link attack is known.
    Preventive,
    /// Construction restricted to links not known to be attacked.
    Responsive,
}

/// Adds one node wired to exactly `targets`, which must be `m` distinct
/// existing nodes.
pub fn extend_graph(g: &Graph, m: usize, targets: &[NodeId]) -> Result<Graph> {
    let n = g.node_count();
    if targets.len() != m {
        return Err(Error::InvalidArgument(format!(
            "expected {m} extension targets, got {}",
            targets.len()
        )));
    }
    let distinct: BTreeSet<_> = targets.iter().copied().collect();
    if distinct.len() != m {
        return Err(Error::InvalidArgument(format!(
            "extension targets {targets:?} are not distinct"
        )));
    }
    if let Some(&bad) = distinct.iter().find(|&&t| t >= n) {
        return Err(Error::InvalidArgument(format!(
            "extension target {bad} is not a node of the {n}-node graph"
        )));
    }
    let mut out = g.clone();
    let fresh = out.push_node();
    for &t in &distinct {
        out.insert_edge(fresh, t);
    }
    Ok(out)
}

/// [`extend_graph`] with `m` targets drawn uniformly without replacement.
pub fn extend_graph_random<R: Rng + ?Sized>(g: &Graph, m: usize, rng: &mut R) -> Result<Graph> {
    let n = g.node_count();
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "cannot pick {m} distinct targets among {n} nodes"
        )));
    }
    let targets = index::sample(rng, n, m).into_vec();
    extend_graph(g, m, &targets)
}

fn required_connectivity(n: usize, f: usize) -> Result<usize> {
    let m = 2 * f + 1;
    if n < m {
        return Err(Error::InfeasibleTopology(format!(
            "{n} nodes cannot host a {m}-connected graph for fault bound {f}"
        )));
    }
    Ok(m)
}

fn certify(g: &Graph, m: usize) -> Result<()> {
    if g.node_count() <= m {
        // Complete graph on m nodes; its connectivity is m - 1 by convention.
        return Ok(());
    }
    let cert = vertex_connectivity(g)?;
    if cert.kappa < m {
        return Err(Error::InternalInvariant(format!(
            "generated graph has connectivity {} < {m} (separator {:?})",
            cert.kappa, cert.witness_cut
        )));
    }
    Ok(())
}

/// Randomized `(2f+1)`-connected topology.
///
/// Picks `2f + 1` random nodes and joins them into a clique, attaches the
/// remaining nodes one by one (in random order) to `2f + 1` uniformly chosen
/// nodes already placed, then relabels the result with a uniform random
/// permutation. When `n == 2f + 1` the result is the complete graph, whose
/// connectivity is only `2f`.
pub fn generate_preventive<R: Rng + ?Sized>(n: usize, f: usize, rng: &mut R) -> Result<Graph> {
    let m = required_connectivity(n, f)?;

    let seed_nodes = index::sample(rng, n, m).into_vec();
    let chosen: BTreeSet<_> = seed_nodes.iter().copied().collect();
    let mut rest: Vec<NodeId> = (0..n).filter(|v| !chosen.contains(v)).collect();
    rest.shuffle(rng);
    // Construction position p holds node order[p].
    let order: Vec<NodeId> = seed_nodes.into_iter().chain(rest).collect();

    let mut g = Graph::complete(m)?;
    while g.node_count() < n {
        g = extend_graph_random(&g, m, rng)?;
    }

    let mut perm: Vec<NodeId> = (0..n).collect();
    perm.shuffle(rng);
    let labels: Vec<NodeId> = order.iter().map(|&v| perm[v]).collect();
    let g = g.relabel(&labels)?;

    certify(&g, m)?;
    Ok(g)
}

/// `(2f+1)`-connected topology that avoids every attacked link.
///
/// The seed clique is drawn among nodes with no attacked incident link. Each
/// remaining node is placed once it has at least `2f + 1` safe links to the
/// nodes placed so far; ties are broken at random, as are the targets.
/// Node labels are kept because attacked links refer to them.
pub fn generate_responsive<R: Rng + ?Sized>(
    n: usize,
    f: usize,
    attacks: &LinkAttackSet,
    rng: &mut R,
) -> Result<Graph> {
    let m = required_connectivity(n, f)?;
    if let Some(max) = attacks.max_node() {
        if max >= n {
            return Err(Error::InvalidArgument(format!(
                "attacked link references node {max}, graph has {n} nodes"
            )));
        }
    }

    let clean: Vec<NodeId> = (0..n).filter(|&v| attacks.is_clean(v)).collect();
    if clean.len() < m {
        return Err(Error::InfeasibleTopology(format!(
            "seed clique: only {} node(s) {:?} have no attacked links, need {m}",
            clean.len(),
            clean
        )));
    }
    let seed: Vec<NodeId> = index::sample(rng, clean.len(), m)
        .into_iter()
        .map(|i| clean[i])
        .collect();

    let mut g = Graph::empty(n)?;
    for (a, &u) in seed.iter().enumerate() {
        for &v in &seed[a + 1..] {
            g.insert_edge(u, v);
        }
    }
    let mut placed: BTreeSet<NodeId> = seed.iter().copied().collect();
    let mut remaining: BTreeSet<NodeId> = (0..n).filter(|v| !placed.contains(v)).collect();

    while !remaining.is_empty() {
        let safe_targets = |v: NodeId| -> Vec<NodeId> {
            placed
                .iter()
                .copied()
                .filter(|&p| !attacks.contains(v, p))
                .collect()
        };
        let eligible: Vec<NodeId> = remaining
            .iter()
            .copied()
            .filter(|&v| safe_targets(v).len() >= m)
            .collect();
        if eligible.is_empty() {
            return Err(Error::InfeasibleTopology(format!(
                "extension after placing {} of {n} nodes: none of {:?} has {m} safe links to the placed nodes",
                placed.len(),
                remaining
            )));
        }
        let v = eligible[rng.random_range(0..eligible.len())];
        let candidates = safe_targets(v);
        for i in index::sample(rng, candidates.len(), m) {
            g.insert_edge(v, candidates[i]);
        }
        placed.insert(v);
        remaining.remove(&v);
    }

    if let Some((a, b)) = g.edges().find(|&(a, b)| attacks.contains(a, b)) {
        return Err(Error::InternalInvariant(format!(
            "responsive topology uses attacked link ({a}, {b})"
        )));
    }
    certify(&g, m)?;
    Ok(g)
}
