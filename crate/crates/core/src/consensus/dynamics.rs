use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::WeightMatrix;
use crate::graph::{Graph, NodeId};
use crate::{Error, Result};

/// Additive injections `u_i^k` at compromised controllers for steps
/// `0..horizon`. Steps without an explicit value inject zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionSchedule {
    horizon: usize,
    values: BTreeMap<NodeId, Vec<f64>>,
}

impl InjectionSchedule {
    pub fn none(horizon: usize) -> Self {
        InjectionSchedule {
            horizon,
            values: BTreeMap::new(),
        }
    }

    /// Marks `node` as compromised with injections `values[k]` at step `k`.
    pub fn insert(&mut self, node: NodeId, values: Vec<f64>) -> Result<()> {
        if values.len() > self.horizon {
            return Err(Error::InvalidArgument(format!(
                "{} injection values for node {node} exceed horizon {}",
                values.len(),
                self.horizon
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("injection {bad} at node {node} is not finite")));
        }
        let mut padded = values;
        padded.resize(self.horizon, 0.0);
        self.values.insert(node, padded);
        Ok(())
    }

    pub fn with(mut self, node: NodeId, values: Vec<f64>) -> Result<Self> {
        self.insert(node, values)?;
        Ok(self)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// The compromised set `F`, ascending.
    pub fn faulty_nodes(&self) -> Vec<NodeId> {
        self.values.keys().copied().collect()
    }

    pub fn value(&self, node: NodeId, step: usize) -> f64 {
        self.values
            .get(&node)
            .and_then(|v| v.get(step))
            .copied()
            .unwrap_or(0.0)
    }

    /// Same injections over a different horizon (truncated or zero-padded).
    pub fn with_horizon(&self, horizon: usize) -> Self {
        let values = self
            .values
            .iter()
            .map(|(&node, v)| {
                let mut v = v.clone();
                v.resize(horizon, 0.0);
                (node, v)
            })
            .collect();
        InjectionSchedule { horizon, values }
    }

    fn check_nodes(&self, n: usize) -> Result<()> {
        match self.values.keys().find(|&&v| v >= n) {
            Some(bad) => Err(Error::InvalidArgument(format!(
                "injection targets node {bad}, network has {n} nodes"
            ))),
            None => Ok(()),
        }
    }
}

fn iterate(w: &WeightMatrix, initial: &[f64], inj: &InjectionSchedule, steps: usize) -> Result<Vec<Vec<f64>>> {
    let n = w.node_count();
    if initial.len() != n {
        return Err(Error::InvalidArgument(format!(
            "initial vector has {} entries, network has {n} nodes",
            initial.len()
        )));
    }
    inj.check_nodes(n)?;
    let entries = w.entries();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.to_vec());
    for k in 0..steps {
        let current = &states[k];
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let mut acc = 0.0;
                for (j, s) in current.iter().enumerate() {
                    acc += entries[(i, j)] * s;
                }
                acc + inj.value(i, k)
            })
            .collect();
        states.push(next);
    }
    Ok(states)
}

/// `S^{k+1} = W S^k + B_F u^k` for `k = 0..K`; returns `S^0..=S^K`.
pub fn run_updates(
    w: &WeightMatrix,
    initial: &[f64],
    inj: &InjectionSchedule,
    horizon: usize,
) -> Result<Vec<Vec<f64>>> {
    if inj.horizon() != horizon {
        return Err(Error::InvalidArgument(format!(
            "injection horizon {} differs from update horizon {horizon}",
            inj.horizon()
        )));
    }
    iterate(w, initial, inj, horizon)
}

/// Metropolis-weighted average consensus with the same injection hook, for
/// comparison against the resilient scheme. Injections past the schedule's
/// horizon are zero.
pub fn run_average_consensus_baseline(
    g: &Graph,
    initial: &[f64],
    inj: &InjectionSchedule,
    steps: usize,
) -> Result<Vec<Vec<f64>>> {
    if g.node_count() > 1 && !g.is_connected() {
        return Err(Error::InvalidArgument("average consensus needs a connected graph".into()));
    }
    iterate(&WeightMatrix::metropolis(g), initial, inj, steps)
}
