use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::consensus::ObservationRecord;
use crate::graph::NodeId;
use crate::scenario::{MicrogridProfile, Verdict};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Supply,
    Demand,
}

impl Quantity {
    pub const ALL: [Quantity; 2] = [Quantity::Supply, Quantity::Demand];

    fn index(self) -> usize {
        match self {
            Quantity::Supply => 0,
            Quantity::Demand => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quantity::Supply => "supply",
            Quantity::Demand => "demand",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub sender: NodeId,
    pub step: usize,
    pub quantity: Quantity,
    pub value: f64,
}

/// One microgrid controller.
#[derive(Debug, Clone)]
pub struct ControllerState {
    id: NodeId,
    local_supply: f64,
    local_demand: f64,
    neighbors: BTreeSet<NodeId>,
    /// `(j, w_ij)` for `j` in `{id} ∪ N_id`, ascending.
    weight_row: Vec<(NodeId, f64)>,
    /// Attacker-controlled additions to this controller's update, if any.
    injection: Option<Vec<f64>>,
    current: [f64; 2],
    step: usize,
    inbox: BTreeMap<(Quantity, NodeId), f64>,
    observations: [ObservationRecord; 2],
    pub verdict: Verdict,
}

impl ControllerState {
    pub fn new(
        profile: &MicrogridProfile,
        neighbors: BTreeSet<NodeId>,
        weight_row: Vec<(NodeId, f64)>,
        injection: Option<Vec<f64>>,
    ) -> Self {
        let id = profile.id;
        let selector: Vec<NodeId> = std::iter::once(id).chain(neighbors.iter().copied()).collect();
        let (supply, demand) = (profile.supply.value(), profile.critical_demand.value());
        ControllerState {
            id,
            local_supply: supply,
            local_demand: demand,
            neighbors,
            weight_row,
            injection,
            current: [supply, demand],
            step: 0,
            inbox: BTreeMap::new(),
            observations: [
                ObservationRecord::new(id, selector.clone()),
                ObservationRecord::new(id, selector),
            ],
            verdict: Verdict::Undecided,
        }
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn neighbors(&self) -> &BTreeSet<NodeId> {
        &self.neighbors
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn local_value(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Supply => self.local_supply,
            Quantity::Demand => self.local_demand,
        }
    }

    /// The value this controller currently holds for `q`.
    pub fn current(&self, q: Quantity) -> f64 {
        self.current[q.index()]
    }

    pub fn observation(&self, q: Quantity) -> &ObservationRecord {
        &self.observations[q.index()]
    }

    /// Messages to broadcast this step, one per quantity.
    pub fn outgoing(&self) -> [Message; 2] {
        Quantity::ALL.map(|quantity| Message {
            sender: self.id,
            step: self.step,
            quantity,
            value: self.current(quantity),
        })
    }

    /// Accepts a message only from a neighbor, for the current step, once.
    pub fn receive(&mut self, msg: Message) -> Result<()> {
        if !self.neighbors.contains(&msg.sender) {
            return Err(Error::InternalInvariant(format!(
                "controller {} received a message from non-neighbor {}",
                self.id, msg.sender
            )));
        }
        if msg.step != self.step {
            return Err(Error::InternalInvariant(format!(
                "controller {} at step {} received a step-{} message",
                self.id, self.step, msg.step
            )));
        }
        if self.inbox.insert((msg.quantity, msg.sender), msg.value).is_some() {
            return Err(Error::InternalInvariant(format!(
                "controller {} received a duplicate {:?} message from {}",
                self.id, msg.quantity, msg.sender
            )));
        }
        Ok(())
    }

    fn inbox_value(&self, q: Quantity, sender: NodeId) -> Result<f64> {
        self.inbox.get(&(q, sender)).copied().ok_or_else(|| {
            Error::InternalInvariant(format!(
                "controller {} is missing the step-{} {:?} value of neighbor {sender}",
                self.id, self.step, q
            ))
        })
    }

    /// Appends `y^k` (own value, then each neighbor's) to the observation
    /// records. Requires every neighbor's message for this step.
    pub fn record_observation(&mut self) -> Result<()> {
        for q in Quantity::ALL {
            let mut sample = vec![self.current(q)];
            for &j in &self.neighbors {
                sample.push(self.inbox_value(q, j)?);
            }
            self.observations[q.index()].push(sample)?;
        }
        Ok(())
    }

    /// Computes the next value from this step's inbox and advances the step.
    pub fn update(&mut self) -> Result<()> {
        let mut next = [0.0; 2];
        for q in Quantity::ALL {
            let mut acc = 0.0;
            for &(j, w) in &self.weight_row {
                let v = if j == self.id { self.current(q) } else { self.inbox_value(q, j)? };
                acc += w * v;
            }
            let u = self
                .injection
                .as_ref()
                .and_then(|u| u.get(self.step))
                .copied()
                .unwrap_or(0.0);
            next[q.index()] = acc + u;
        }
        self.current = next;
        self.inbox.clear();
        self.step += 1;
        Ok(())
    }

    /// Ends a round without an update (the final observation round).
    pub fn finish_round(&mut self) {
        self.inbox.clear();
    }
}
