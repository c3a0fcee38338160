//! Recovering initial values from one controller's observation history.
//!
//! Decoding solves `Y = O S^0 + M^F u` jointly for `(S^0, u)` by truncated-SVD
//! least squares. When the rank condition holds the `S^0` block is unique even
//! if `M^F` is column-rank deficient, and the minimum-norm solution carries it.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::observability::{subsets_up_to, ObservabilityStack};
use super::selector;
use super::linalg::truncated_solve;
use super::WeightMatrix;
use crate::graph::NodeId;
use crate::{Error, Result};

/// Thresholds shared by rank checks and decoders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    /// Singular values below this fraction of the largest count as zero.
    pub rank_threshold: f64,
    /// Largest relative residual `‖A x − Y‖ / ‖Y‖` accepted as consistent.
    pub residual_tolerance: f64,
    /// Largest relative disagreement between consistent candidate decodes.
    pub agreement_tolerance: f64,
    /// Condition numbers above this are flagged.
    pub condition_threshold: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            rank_threshold: 1e-9,
            residual_tolerance: 1e-8,
            agreement_tolerance: 1e-6,
            condition_threshold: 1e12,
        }
    }
}

/// The values a controller received at steps `0..=K`: its own value and
/// each neighbor's, in selector order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    pub observer: NodeId,
    pub selector: Vec<NodeId>,
    pub samples: Vec<Vec<f64>>,
}

impl ObservationRecord {
    pub fn new(observer: NodeId, selector: Vec<NodeId>) -> Self {
        ObservationRecord {
            observer,
            selector,
            samples: Vec::new(),
        }
    }

    /// Extracts `y_i^k = C_i S^k` from a full state trajectory.
    pub fn from_states(w: &WeightMatrix, observer: NodeId, states: &[Vec<f64>]) -> Result<Self> {
        let sel = selector(w, observer)?;
        let samples = states
            .iter()
            .map(|s| sel.iter().map(|&j| s[j]).collect())
            .collect();
        Ok(ObservationRecord {
            observer,
            selector: sel,
            samples,
        })
    }

    pub fn push(&mut self, sample: Vec<f64>) -> Result<()> {
        if sample.len() != self.selector.len() {
            return Err(Error::InvalidArgument(format!(
                "observation has {} values, selector has {}",
                sample.len(),
                self.selector.len()
            )));
        }
        self.samples.push(sample);
        Ok(())
    }

    /// `Y_i^{0:K}` as one column.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.samples.iter().map(Vec::len).sum(),
            self.samples.iter().flatten().copied(),
        )
    }

    /// Same record with every sample replaced by `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &ObservationRecord, b: f64) -> ObservationRecord {
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect())
            .collect();
        ObservationRecord {
            observer: self.observer,
            selector: self.selector.clone(),
            samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub initial_values: Vec<f64>,
    pub total: f64,
    pub consistent_fault_sets: Vec<Vec<NodeId>>,
    pub residual: f64,
    pub condition_number: f64,
    /// Set when `condition_number` exceeds the configured threshold.
    pub ill_conditioned: bool,
}

struct Solve {
    initial_values: Vec<f64>,
    residual: f64,
    condition_number: f64,
}

fn check_shapes(stack: &ObservabilityStack, obs: &ObservationRecord) -> Result<()> {
    if obs.observer != stack.observer || obs.selector != stack.selector {
        return Err(Error::InvalidArgument(format!(
            "observation record of node {} does not match the stack of node {}",
            obs.observer, stack.observer
        )));
    }
    if obs.samples.len() != stack.horizon + 1 {
        return Err(Error::InvalidArgument(format!(
            "{} observation steps recorded, horizon {} needs {}",
            obs.samples.len(),
            stack.horizon,
            stack.horizon + 1
        )));
    }
    Ok(())
}

fn solve(stack: &ObservabilityStack, y: &DVector<f64>, set: &[NodeId], cfg: &DecodeConfig) -> Result<Solve> {
    let n = stack.node_count();
    let m = stack.fault_matrix(set).ok_or_else(|| {
        Error::InvalidArgument(format!("stack has no fault matrix for candidate set {set:?}"))
    })?;
    let rows = stack.o.nrows();
    let mut a = DMatrix::zeros(rows, n + m.ncols());
    a.view_mut((0, 0), (rows, n)).copy_from(&stack.o);
    a.view_mut((0, n), (rows, m.ncols())).copy_from(m);

    let solved = truncated_solve(&a, y, cfg.rank_threshold)?;
    let (x, max_sv, min_kept) = (solved.x, solved.max_singular, solved.min_kept);

    let y_norm = y.norm();
    let misfit = (&a * &x - y).norm();
    let residual = if y_norm > 0.0 { misfit / y_norm } else { misfit };
    Ok(Solve {
        initial_values: x.rows(0, n).iter().copied().collect(),
        residual,
        condition_number: if min_kept.is_finite() { max_sv / min_kept } else { f64::INFINITY },
    })
}

fn finish(solve: Solve, sets: Vec<Vec<NodeId>>, cfg: &DecodeConfig) -> DecodeResult {
    DecodeResult {
        total: solve.initial_values.iter().sum(),
        initial_values: solve.initial_values,
        consistent_fault_sets: sets,
        residual: solve.residual,
        ill_conditioned: solve.condition_number > cfg.condition_threshold,
        condition_number: solve.condition_number,
    }
}

/// Decodes under a declared faulty set. Fails if the observations are not
/// explained by injections at exactly those nodes.
pub fn decode_known_faults(
    stack: &ObservabilityStack,
    obs: &ObservationRecord,
    fault_set: &[NodeId],
    cfg: &DecodeConfig,
) -> Result<DecodeResult> {
    check_shapes(stack, obs)?;
    let mut set = fault_set.to_vec();
    set.sort_unstable();
    let s = solve(stack, &obs.stacked(), &set, cfg)?;
    if s.residual > cfg.residual_tolerance {
        return Err(Error::DecodeInconsistency {
            fault_set: set,
            residual: s.residual,
            tolerance: cfg.residual_tolerance,
        });
    }
    Ok(finish(s, vec![set], cfg))
}

/// Decodes without knowing which controllers are faulty: tries every set of
/// at most `f` nodes and keeps those that explain the observations. All
/// consistent candidates must agree; the first one (smallest, then
/// lexicographic) supplies the reported values.
pub fn decode_unknown_faults(
    stack: &ObservabilityStack,
    obs: &ObservationRecord,
    f: usize,
    cfg: &DecodeConfig,
) -> Result<DecodeResult> {
    check_shapes(stack, obs)?;
    let y = obs.stacked();
    let candidates = subsets_up_to(stack.node_count(), f);
    let solved: Vec<Result<Solve>> = candidates
        .par_iter()
        .map(|set| solve(stack, &y, set, cfg))
        .collect();

    let mut consistent: Vec<(Vec<NodeId>, Solve)> = Vec::new();
    for (set, s) in candidates.into_iter().zip(solved) {
        let s = s?;
        if s.residual <= cfg.residual_tolerance {
            consistent.push((set, s));
        }
    }
    let Some(((_, first), rest)) = consistent.split_first() else {
        return Err(Error::DecodeFailure(format!(
            "observer {}: no set of at most {f} faulty nodes explains the observations",
            stack.observer
        )));
    };
    let reference = DVector::from_column_slice(&first.initial_values);
    let scale = reference.norm().max(f64::MIN_POSITIVE);
    for (set, s) in rest {
        let gap = (DVector::from_column_slice(&s.initial_values) - &reference).norm() / scale;
        if gap > cfg.agreement_tolerance {
            return Err(Error::InternalInvariant(format!(
                "observer {}: candidate {set:?} decodes to values {gap:e} (relative) away from {:?}; rank condition violated numerically",
                stack.observer, consistent[0].0
            )));
        }
    }
    let sets: Vec<Vec<NodeId>> = consistent.iter().map(|(set, _)| set.clone()).collect();
    let (_, first) = consistent.swap_remove(0);
    Ok(finish(first, sets, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{build_observability_stack, run_updates, InjectionSchedule};

    const SUPPLY: [f64; 6] = [24.17, 64.31, 89.19, 134.43, 49.65, 79.69];

    fn observe(w: &WeightMatrix, inj: &InjectionSchedule, observer: NodeId) -> ObservationRecord {
        let states = run_updates(w, &SUPPLY, inj, inj.horizon()).unwrap();
        ObservationRecord::from_states(w, observer, &states).unwrap()
    }

    #[test]
    fn no_faults_recovers_exactly() {
        let w = WeightMatrix::demonstration();
        let inj = InjectionSchedule::none(3);
        let stack = build_observability_stack(&w, 0, 3, &[vec![]]).unwrap();
        let r = decode_known_faults(&stack, &observe(&w, &inj, 0), &[], &DecodeConfig::default()).unwrap();
        for (a, b) in r.initial_values.iter().zip(SUPPLY) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((r.total - 441.44).abs() < 1e-9);
    }

    #[test]
    fn wrong_declared_fault_is_inconsistent() {
        let w = WeightMatrix::demonstration();
        let inj = InjectionSchedule::none(3).with(3, vec![25.0, -12.0, 30.0]).unwrap();
        let stack = build_observability_stack(&w, 0, 3, &[vec![5]]).unwrap();
        let err = decode_known_faults(&stack, &observe(&w, &inj, 0), &[5], &DecodeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DecodeInconsistency { .. }));
    }

    #[test]
    fn unknown_fault_is_located() {
        let w = WeightMatrix::demonstration();
        let inj = InjectionSchedule::none(3).with(3, vec![25.0, -12.0, 30.0]).unwrap();
        for observer in 0..6 {
            let stack = build_observability_stack(&w, observer, 3, &subsets_up_to(6, 1)).unwrap();
            let r = decode_unknown_faults(&stack, &observe(&w, &inj, observer), 1, &DecodeConfig::default()).unwrap();
            assert_eq!(r.consistent_fault_sets, vec![vec![3]]);
            assert!((r.total - 441.44).abs() < 1e-8);
        }
    }

    #[test]
    fn without_injection_every_candidate_is_consistent() {
        let w = WeightMatrix::demonstration();
        let inj = InjectionSchedule::none(3);
        let stack = build_observability_stack(&w, 1, 3, &subsets_up_to(6, 1)).unwrap();
        let obs = observe(&w, &inj, 1);
        let cfg = DecodeConfig::default();
        let unknown = decode_unknown_faults(&stack, &obs, 1, &cfg).unwrap();
        assert_eq!(unknown.consistent_fault_sets.len(), 7);
        let known = decode_known_faults(&stack, &obs, &[], &cfg).unwrap();
        assert_eq!(known.initial_values, unknown.initial_values);
        assert_eq!(known.residual, unknown.residual);
    }

    #[test]
    fn two_faults_exceed_bound() {
        let w = WeightMatrix::demonstration();
        let inj = InjectionSchedule::none(3)
            .with(3, vec![25.0, -12.0, 30.0])
            .unwrap()
            .with(5, vec![-40.0, 7.0, 11.0])
            .unwrap();
        let stack = build_observability_stack(&w, 0, 3, &subsets_up_to(6, 1)).unwrap();
        let err = decode_unknown_faults(&stack, &observe(&w, &inj, 0), 1, &DecodeConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DecodeFailure(_)));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let w = WeightMatrix::demonstration();
        let stack = build_observability_stack(&w, 0, 3, &[vec![]]).unwrap();
        let short = observe(&w, &InjectionSchedule::none(2), 0);
        assert!(decode_known_faults(&stack, &short, &[], &DecodeConfig::default()).is_err());
        let other = observe(&w, &InjectionSchedule::none(3), 1);
        assert!(decode_known_faults(&stack, &other, &[], &DecodeConfig::default()).is_err());
        let full = observe(&w, &InjectionSchedule::none(3), 0);
        assert!(decode_known_faults(&stack, &full, &[2], &DecodeConfig::default()).is_err());
    }
}
