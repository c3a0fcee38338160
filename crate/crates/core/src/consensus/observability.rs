//! Observation matrices seen by a single controller and the rank condition
//! that makes initial values recoverable under injection.
//!
//! For observer `i` with selector `C_i` (own row plus one row per neighbor):
//!
//! ```text
//! O_{i,0} = C_i                 O_{i,L} = [ C_i ; O_{i,L-1} W ]
//! M_{i,0} = (no columns)        M_{i,L} = [ 0 , 0 ; O_{i,L-1} B_F , M_{i,L-1} ]
//! ```
//!
//! so that `Y_i^{0:K} = O_{i,K} S^0 + M_{i,K}^F u_F^{0:K-1}`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::singular_values;
use super::WeightMatrix;
use crate::graph::NodeId;
use crate::{Error, Result};

/// Observed nodes for `observer`: itself first, then its neighbors ascending.
pub fn selector(w: &WeightMatrix, observer: NodeId) -> Result<Vec<NodeId>> {
    let neighbors = w.graph().neighbors(observer)?;
    Ok(std::iter::once(observer).chain(neighbors.iter().copied()).collect())
}

#[derive(Debug, Clone)]
pub struct ObservabilityStack {
    pub observer: NodeId,
    pub selector: Vec<NodeId>,
    pub horizon: usize,
    pub o: DMatrix<f64>,
    /// `M_{i,K}^F` per candidate fault set (sorted node lists).
    pub m_for: BTreeMap<Vec<NodeId>, DMatrix<f64>>,
}

impl ObservabilityStack {
    pub fn node_count(&self) -> usize {
        self.o.ncols()
    }

    pub fn fault_matrix(&self, set: &[NodeId]) -> Option<&DMatrix<f64>> {
        self.m_for.get(set)
    }
}

fn normalize_set(set: &[NodeId], n: usize) -> Result<Vec<NodeId>> {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != set.len() {
        return Err(Error::InvalidArgument(format!("fault set {set:?} repeats a node")));
    }
    if let Some(bad) = sorted.iter().find(|&&v| v >= n) {
        return Err(Error::InvalidArgument(format!("fault set names node {bad}, network has {n}")));
    }
    Ok(sorted)
}

pub fn build_observability_stack(
    w: &WeightMatrix,
    observer: NodeId,
    horizon: usize,
    candidate_sets: &[Vec<NodeId>],
) -> Result<ObservabilityStack> {
    let n = w.node_count();
    let sel = selector(w, observer)?;
    let rows = sel.len();
    let c = DMatrix::from_fn(rows, n, |r, col| if sel[r] == col { 1.0 } else { 0.0 });
    let sets = candidate_sets
        .iter()
        .map(|s| normalize_set(s, n))
        .collect::<Result<Vec<_>>>()?;

    let mut o = c.clone();
    let mut ms: Vec<DMatrix<f64>> = sets.iter().map(|_| DMatrix::zeros(rows, 0)).collect();
    for level in 1..=horizon {
        let prev_o = o;
        for (m, set) in ms.iter_mut().zip(&sets) {
            // O_{L-1} B_F picks the columns of the faulty nodes.
            let ob = prev_o.select_columns(set.iter());
            let width = level * set.len();
            let mut next = DMatrix::zeros(rows * (level + 1), width);
            next.view_mut((rows, 0), (rows * level, set.len())).copy_from(&ob);
            next.view_mut((rows, set.len()), (rows * level, m.ncols())).copy_from(m);
            *m = next;
        }
        let mut next_o = DMatrix::zeros(rows * (level + 1), n);
        next_o.view_mut((0, 0), (rows, n)).copy_from(&c);
        next_o.view_mut((rows, 0), (rows * level, n)).copy_from(&(&prev_o * w.entries()));
        o = next_o;
    }
    Ok(ObservabilityStack {
        observer,
        selector: sel,
        horizon,
        o,
        m_for: sets.into_iter().zip(ms).collect(),
    })
}

/// Number of singular values above `threshold` times the largest.
pub fn numerical_rank(m: &DMatrix<f64>, threshold: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = singular_values(m).expect("SVD converges for finite input");
    let max = sv.first().copied().unwrap_or(0.0);
    if max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > threshold * max).count()
}

/// All `size`-subsets of `0..n` in lexicographic order.
pub fn subsets_of_size(n: usize, size: usize) -> Vec<Vec<NodeId>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            if n - v < size - cur.len() {
                break;
            }
            cur.push(v);
            rec(v + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if size <= n {
        rec(0, n, size, &mut Vec::new(), &mut out);
    }
    out
}

/// Subsets of size `0..=max_size`, by increasing size then lexicographically.
pub fn subsets_up_to(n: usize, max_size: usize) -> Vec<Vec<NodeId>> {
    (0..=max_size.min(n)).flat_map(|k| subsets_of_size(n, k)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankViolation {
    pub observer: NodeId,
    pub set: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankFailure {
    pub k_max: usize,
    pub subset_size: usize,
    /// Observer/set pairs still failing at `k_max`.
    pub violations: Vec<RankViolation>,
}

impl std::fmt::Display for RankFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "rank condition for {}-node fault sets fails at every horizon up to {}: ",
            self.subset_size, self.k_max
        )?;
        let shown: Vec<String> = self
            .violations
            .iter()
            .take(8)
            .map(|v| format!("observer {} with {:?}", v.observer, v.set))
            .collect();
        write!(f, "{}", shown.join(", "))?;
        if self.violations.len() > shown.len() {
            write!(f, ", ... ({} total)", self.violations.len())?;
        }
        Ok(())
    }
}

fn condition_holds(w: &WeightMatrix, observer: NodeId, horizon: usize, set: &[NodeId], threshold: f64) -> bool {
    let n = w.node_count();
    let stack = build_observability_stack(w, observer, horizon, &[set.to_vec()])
        .expect("observer and set validated by caller");
    let m = &stack.m_for[set];
    let mut joint = DMatrix::zeros(stack.o.nrows(), n + m.ncols());
    joint.view_mut((0, 0), (stack.o.nrows(), n)).copy_from(&stack.o);
    joint.view_mut((0, n), (m.nrows(), m.ncols())).copy_from(m);
    // Powers of W span many orders of magnitude across row blocks; scaling
    // rows to unit norm leaves both ranks unchanged but keeps the relative
    // singular-value cutoff meaningful at longer horizons.
    let mut scaled_m = m.clone();
    for r in 0..joint.nrows() {
        let norm = joint.row(r).norm();
        if norm > 0.0 {
            joint.row_mut(r).scale_mut(1.0 / norm);
            scaled_m.row_mut(r).scale_mut(1.0 / norm);
        }
    }
    numerical_rank(&joint, threshold) == n + numerical_rank(&scaled_m, threshold)
}

fn smallest_horizon(w: &WeightMatrix, subset_size: usize, k_max: usize, threshold: f64) -> Result<usize, RankFailure> {
    let n = w.node_count();
    let size = subset_size.min(n);
    let sets = subsets_of_size(n, size);
    let pairs: Vec<(NodeId, &Vec<NodeId>)> = (0..n).flat_map(|i| sets.iter().map(move |s| (i, s))).collect();
    // The condition is monotone in K (extra rounds only append rows), so each
    // pair's first passing horizon is found by a linear scan.
    let per_pair: Vec<Option<usize>> = pairs
        .par_iter()
        .map(|&(i, set)| (1..=k_max).find(|&k| condition_holds(w, i, k, set, threshold)))
        .collect();
    let violations: Vec<RankViolation> = pairs
        .iter()
        .zip(&per_pair)
        .filter(|(_, k)| k.is_none())
        .map(|(&(observer, set), _)| RankViolation {
            observer,
            set: set.clone(),
        })
        .collect();
    if !violations.is_empty() || k_max == 0 {
        return Err(RankFailure {
            k_max,
            subset_size: size,
            violations,
        });
    }
    Ok(per_pair.into_iter().flatten().max().unwrap_or(1))
}

/// Smallest `K <= k_max` such that, for every observer `i` and every set `Y`
/// of `2f` nodes, `rank [O_{i,K} M_{i,K}^Y] = N + rank M_{i,K}^Y`.
pub fn verify_rank_condition(w: &WeightMatrix, f: usize, k_max: usize, rank_threshold: f64) -> Result<usize, RankFailure> {
    smallest_horizon(w, 2 * f, k_max, rank_threshold)
}

/// The same check over sets of `f` nodes only: enough for every observer to
/// decode when the faulty set is known, and to rule out explanations by
/// other sets when it is unique.
pub fn verify_identifiability(w: &WeightMatrix, f: usize, k_max: usize, rank_threshold: f64) -> Result<usize, RankFailure> {
    smallest_horizon(w, f, k_max, rank_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, generate_preventive};
    use crate::consensus::synthesize_weights;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TH: f64 = 1e-9;

    #[test]
    fn horizon_one_unrolls_once() {
        let w = WeightMatrix::demonstration();
        let stack = build_observability_stack(&w, 2, 1, &[vec![]]).unwrap();
        let c = &stack.o.rows(0, 4).clone_owned();
        assert_eq!(stack.o.rows(4, 4).clone_owned(), c * w.entries());
        assert_eq!(stack.m_for[&vec![]].ncols(), 0);
        assert_eq!(stack.selector, vec![2, 0, 1, 5]);
    }

    #[test]
    fn demonstration_stack_dimensions() {
        let w = WeightMatrix::demonstration();
        let stack = build_observability_stack(&w, 0, 3, &[vec![3]]).unwrap();
        assert_eq!(stack.o.shape(), (16, 6));
        assert_eq!(stack.m_for[&vec![3]].shape(), (16, 3));
    }

    #[test]
    fn fault_matrix_blocks() {
        // Column block k of M holds C W^{j-1-k} e_F in row block j > k.
        let w = WeightMatrix::demonstration();
        let stack = build_observability_stack(&w, 4, 3, &[vec![3]]).unwrap();
        let m = &stack.m_for[&vec![3]];
        let rows = stack.selector.len();
        let c = stack.o.rows(0, rows).clone_owned();
        let mut e = DMatrix::zeros(6, 1);
        e[(3, 0)] = 1.0;
        for j in 0..=3 {
            for k in 0..3 {
                let block = m.view((j * rows, k), (rows, 1)).clone_owned();
                if j <= k {
                    assert!(block.iter().all(|&v| v == 0.0));
                } else {
                    let expected = &c * w.entries().pow((j - 1 - k) as u32) * &e;
                    assert!((block - expected).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn stack_rejects_bad_sets() {
        let w = WeightMatrix::demonstration();
        assert!(build_observability_stack(&w, 0, 2, &[vec![1, 1]]).is_err());
        assert!(build_observability_stack(&w, 0, 2, &[vec![6]]).is_err());
        assert!(build_observability_stack(&w, 6, 2, &[]).is_err());
    }

    #[test]
    fn subsets_are_ordered() {
        assert_eq!(subsets_of_size(4, 2).len(), 6);
        assert_eq!(subsets_of_size(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(subsets_up_to(3, 1), vec![vec![], vec![0], vec![1], vec![2]]);
        assert!(subsets_of_size(2, 3).is_empty());
    }

    #[test]
    fn demonstration_fails_pairwise_condition_at_one_observer() {
        let w = WeightMatrix::demonstration();
        let failure = verify_rank_condition(&w, 1, 8, TH).unwrap_err();
        assert_eq!(
            failure.violations,
            vec![RankViolation { observer: 2, set: vec![0, 1] }]
        );
        assert_eq!(verify_identifiability(&w, 1, 8, TH), Ok(1));
        assert_eq!(verify_rank_condition(&w, 0, 8, TH), Ok(1));
    }

    #[test]
    fn infeasible_fault_bound() {
        let w = WeightMatrix::demonstration();
        assert!(verify_rank_condition(&w, 3, 8, TH).is_err());
        let ident = WeightMatrix::with_implied_graph(DMatrix::identity(4, 4)).unwrap();
        assert!(verify_rank_condition(&ident, 0, 6, TH).is_err());
    }

    #[test]
    fn synthesized_weights_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = generate_preventive(7, 1, &mut rng).unwrap();
        let w = synthesize_weights(&g, 1, 9, TH, &mut rng).unwrap();
        let k = verify_rank_condition(&w, 1, 9, TH).unwrap();
        assert!((1..=9).contains(&k));
    }

    #[test]
    fn disconnected_graph_is_unobservable() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let w = WeightMatrix::new(g, DMatrix::from_element(4, 4, 0.0)).unwrap();
        assert!(verify_rank_condition(&w, 0, 6, TH).is_err());
    }
}
