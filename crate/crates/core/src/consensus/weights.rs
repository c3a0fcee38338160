use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use super::observability::verify_rank_condition;
use crate::graph::{vertex_connectivity, Graph, NodeId};
use crate::{Error, Result};

/// Resampling budget for [`synthesize_weights`].
pub const SYNTHESIS_ATTEMPTS: usize = 20;

const DEAD_ZONE: f64 = 1e-3;

/// Square update matrix whose off-pattern entries are zero: `w_ij = 0`
/// unless `j == i` or `j` is a neighbor of `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    entries: DMatrix<f64>,
    graph: Graph,
}

impl WeightMatrix {
    pub fn new(graph: Graph, entries: DMatrix<f64>) -> Result<Self> {
        let n = graph.node_count();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "weight matrix is {}x{}, graph has {n} nodes",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = entries[(i, j)];
                if !w.is_finite() {
                    return Err(Error::InvalidArgument(format!("w[{i}][{j}] = {w} is not finite")));
                }
                if i != j && w != 0.0 && !graph.has_edge(i, j) {
                    return Err(Error::InvalidArgument(format!(
                        "w[{i}][{j}] = {w} but nodes {i} and {j} are not linked"
                    )));
                }
            }
        }
        Ok(WeightMatrix { entries, graph })
    }

    /// Takes the communication graph to be the off-diagonal nonzero pattern
    /// (an edge wherever `w_ij` or `w_ji` is nonzero).
    pub fn with_implied_graph(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "weight matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if entries[(i, j)] != 0.0 || entries[(j, i)] != 0.0 {
                    edges.push((i, j));
                }
            }
        }
        WeightMatrix::new(Graph::from_edges(n, edges)?, entries)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "row {bad} has {} entries, expected {n}",
                rows[bad].len()
            )));
        }
        WeightMatrix::with_implied_graph(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// The six-microgrid demonstration matrix.
    pub fn demonstration() -> Self {
        let rows: [[f64; 6]; 6] = [
            [5.0, 4.0, 1.0, 1.0, 0.0, 0.0],
            [1.0, -3.0, -2.0, 1.0, 4.0, 0.0],
            [-3.0, -3.0, -4.0, 0.0, 0.0, -3.0],
            [-1.0, -2.0, 0.0, 5.0, -1.0, -3.0],
            [0.0, 4.0, 0.0, 5.0, -1.0, -4.0],
            [0.0, 0.0, -3.0, -1.0, 1.0, -3.0],
        ];
        WeightMatrix::with_implied_graph(DMatrix::from_fn(6, 6, |i, j| rows[i][j]))
            .expect("static matrix is well formed")
    }

    /// Metropolis averaging weights: `w_ij = 1 / (1 + max(deg_i, deg_j))`
    /// on edges and `w_ii = 1 - Σ_j w_ij`. Symmetric and doubly stochastic.
    pub fn metropolis(graph: &Graph) -> Self {
        let n = graph.node_count();
        let mut entries = DMatrix::zeros(n, n);
        for (a, b) in graph.edges() {
            let w = 1.0 / (1.0 + graph.degree(a).max(graph.degree(b)) as f64);
            entries[(a, b)] = w;
            entries[(b, a)] = w;
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| entries[(i, j)]).sum();
            entries[(i, i)] = 1.0 - off;
        }
        WeightMatrix {
            entries,
            graph: graph.clone(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> f64 {
        self.entries[(i, j)]
    }

    /// Row `i` restricted to `{i} ∪ N_i`, ascending by column.
    pub fn local_row(&self, i: NodeId) -> Vec<(NodeId, f64)> {
        let mut cols: Vec<NodeId> = self.graph.neighbors(i).map_or_else(|_| Vec::new(), |n| n.iter().copied().collect());
        cols.push(i);
        cols.sort_unstable();
        cols.into_iter().map(|j| (j, self.entries[(i, j)])).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Dense row-major CSV. Values use the shortest decimal form that parses
    /// back to the same `f64`, so the round trip is exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.entries.row_iter() {
            let cells: Vec<String> = row.iter().map(|w| format!("{w:?}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Parses dense CSV; the graph is implied by the nonzero pattern.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.trim().parse::<f64>().map_err(|_| {
                        Error::Parse(format!("line {}: bad number {:?}", lineno + 1, cell.trim()))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse("weight CSV has no rows".into()));
        }
        WeightMatrix::from_rows(&rows).map_err(|e| match e {
            Error::InvalidArgument(msg) | Error::InvalidGraph(msg) => Error::Parse(msg),
            other => other,
        })
    }
}

/// Samples weights on the graph's pattern (self loops and edges) i.i.d.
/// uniform on `[-1, 1]` with `|w| >= 1e-3`, resampling until the rank
/// condition for fault bound `f` holds at some horizon `<= k_max`.
///
/// The graph must be `(2f+1)`-connected; a single node is accepted for
/// `f = 0`.
pub fn synthesize_weights<R: Rng + ?Sized>(
    graph: &Graph,
    f: usize,
    k_max: usize,
    rank_threshold: f64,
    rng: &mut R,
) -> Result<WeightMatrix> {
    let n = graph.node_count();
    let needed = 2 * f + 1;
    if n == 1 {
        if f > 0 {
            return Err(Error::SynthesisFailure(format!(
                "a single node cannot tolerate {f} faulty controller(s)"
            )));
        }
    } else {
        let kappa = vertex_connectivity(graph)?.kappa;
        if kappa < needed {
            return Err(Error::SynthesisFailure(format!(
                "graph connectivity {kappa} is below the {needed} required for fault bound {f}"
            )));
        }
    }

    let sample = |rng: &mut R| loop {
        let w: f64 = rng.random_range(-1.0..=1.0);
        if w.abs() >= DEAD_ZONE {
            return w;
        }
    };
    for _ in 0..SYNTHESIS_ATTEMPTS {
        let mut entries = DMatrix::zeros(n, n);
        for i in 0..n {
            entries[(i, i)] = sample(rng);
        }
        for (a, b) in graph.edges() {
            entries[(a, b)] = sample(rng);
            entries[(b, a)] = sample(rng);
        }
        let w = WeightMatrix {
            entries,
            graph: graph.clone(),
        };
        if verify_rank_condition(&w, f, k_max, rank_threshold).is_ok() {
            return Ok(w);
        }
    }
    Err(Error::SynthesisFailure(format!(
        "no sampled weights met the rank condition for f = {f} within horizon {k_max} after {SYNTHESIS_ATTEMPTS} attempts"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::graph::demonstration_topology;

    #[test]
    fn demonstration_pattern_matches_topology() {
        let w = WeightMatrix::demonstration();
        assert_eq!(w.graph(), &demonstration_topology());
        assert_eq!(w.get(4, 4), -1.0);
        assert_eq!(
            w.local_row(0),
            vec![(0, 5.0), (1, 4.0), (2, 1.0), (3, 1.0)]
        );
    }

    #[test]
    fn pattern_violation_is_rejected() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let entries = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.5, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(WeightMatrix::new(g, entries), Err(Error::InvalidArgument(_))));
        let nan = DMatrix::from_element(1, 1, f64::NAN);
        assert!(WeightMatrix::new(Graph::empty(1).unwrap(), nan).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = crate::graph::generate_preventive(7, 1, &mut rng).unwrap();
        let w = synthesize_weights(&g, 1, 9, 1e-9, &mut rng).unwrap();
        let back = WeightMatrix::from_csv(&w.to_csv()).unwrap();
        assert_eq!(back, w);
        for (a, b) in w.entries().iter().zip(back.entries().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(WeightMatrix::from_csv("1,2\n3\n"), Err(Error::Parse(_))));
        assert!(matches!(WeightMatrix::from_csv("1,x\n3,4\n"), Err(Error::Parse(_))));
        assert!(matches!(WeightMatrix::from_csv(""), Err(Error::Parse(_))));
    }

    #[test]
    fn metropolis_is_doubly_stochastic() {
        let w = WeightMatrix::metropolis(&demonstration_topology());
        for i in 0..6 {
            let row: f64 = w.entries().row(i).sum();
            let col: f64 = w.entries().column(i).sum();
            assert!((row - 1.0).abs() < 1e-15 && (col - 1.0).abs() < 1e-15);
            assert!(w.get(i, i) > 0.0);
        }
    }

    #[test]
    fn single_node_synthesis() {
        let g = Graph::empty(1).unwrap();
        let w = synthesize_weights(&g, 0, 3, 1e-9, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(w.get(0, 0).abs() >= DEAD_ZONE);
        assert!(synthesize_weights(&g, 1, 3, 1e-9, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn triangle_cannot_host_one_fault() {
        let k3 = Graph::complete(3).unwrap();
        let err = synthesize_weights(&k3, 1, 5, 1e-9, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, Error::SynthesisFailure(_)));
    }

    #[test]
    fn synthesized_entries_stay_on_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = crate::graph::generate_preventive(6, 1, &mut rng).unwrap();
        let w = synthesize_weights(&g, 1, 8, 1e-9, &mut rng).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let on_pattern = i == j || g.has_edge(i, j);
                let v = w.get(i, j);
                assert_eq!(v != 0.0, on_pattern);
                assert!(v.abs() <= 1.0);
            }
        }
    }
}
