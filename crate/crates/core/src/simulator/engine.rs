use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controller::{ControllerState, Message, Quantity};
use super::period::Trajectory;
use super::Execution;
use crate::consensus::{InjectionSchedule, WeightMatrix};
use crate::graph::{Graph, NodeId};
use crate::scenario::MicrogridProfile;
use crate::{Error, Result};

/// Counters filled in while the engine runs; any nonzero violation count
/// also aborts the run with an internal-invariant error.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditCounters {
    pub rounds: usize,
    pub messages_delivered: usize,
    /// Messages addressed to a node that is not a neighbor of the sender.
    pub locality_violations: usize,
    /// Controllers handed a profile other than their own.
    pub foreign_profile_reads: usize,
}

/// Runs `K + 1` lockstep rounds: in each round every controller broadcasts
/// to its neighbors, records what it sees, and (except in the last round)
/// computes its next value.
pub struct RoundEngine {
    graph: Graph,
    controllers: Vec<ControllerState>,
    horizon: usize,
    execution: Execution,
    audit: AuditCounters,
    trajectory: Trajectory,
}

impl RoundEngine {
    pub fn new(
        profiles: &[MicrogridProfile],
        weights: &WeightMatrix,
        injections: &InjectionSchedule,
        horizon: usize,
        execution: Execution,
    ) -> Result<Self> {
        let graph = weights.graph().clone();
        let n = graph.node_count();
        if profiles.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} profiles for a {n}-node graph",
                profiles.len()
            )));
        }
        let audit = AuditCounters::default();
        let faulty = injections.faulty_nodes();
        let mut controllers = Vec::with_capacity(n);
        for (i, profile) in profiles.iter().enumerate() {
            if profile.id != i {
                return Err(Error::InternalInvariant(format!(
                    "controller {i} would be handed the profile of microgrid {}",
                    profile.id
                )));
            }
            let injection = faulty
                .contains(&i)
                .then(|| (0..horizon).map(|k| injections.value(i, k)).collect());
            controllers.push(ControllerState::new(
                profile,
                graph.neighbors(i)?.clone(),
                weights.local_row(i),
                injection,
            ));
        }
        let trajectory = Trajectory::starting_from(&controllers);
        Ok(RoundEngine {
            graph,
            controllers,
            horizon,
            execution,
            audit,
            trajectory,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn controllers(&self) -> &[ControllerState] {
        &self.controllers
    }

    pub fn controllers_mut(&mut self) -> &mut [ControllerState] {
        &mut self.controllers
    }

    pub fn audit(&self) -> AuditCounters {
        self.audit
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    /// Hands `msg` to `recipient` if the graph links it to the sender.
    pub fn deliver(&mut self, recipient: NodeId, msg: Message) -> Result<()> {
        if !self.graph.has_edge(msg.sender, recipient) {
            self.audit.locality_violations += 1;
            return Err(Error::InternalInvariant(format!(
                "message from {} to {recipient} travels outside the communication graph",
                msg.sender
            )));
        }
        self.controllers[recipient].receive(msg)?;
        self.audit.messages_delivered += 1;
        Ok(())
    }

    fn round(&mut self, last: bool) -> Result<()> {
        let outgoing: Vec<[Message; 2]> = self.controllers.iter().map(ControllerState::outgoing).collect();
        for (sender, msgs) in outgoing.iter().enumerate() {
            let recipients: Vec<NodeId> = self.graph.neighbors(sender)?.iter().copied().collect();
            for r in recipients {
                for &msg in msgs {
                    self.deliver(r, msg)?;
                }
            }
        }
        // Delivery is complete: the barrier between steps.
        let local = |c: &mut ControllerState| -> Result<()> {
            c.record_observation()?;
            if last {
                c.finish_round();
                Ok(())
            } else {
                c.update()
            }
        };
        match self.execution {
            Execution::Sequential => self.controllers.iter_mut().try_for_each(local)?,
            Execution::Parallel => self.controllers.par_iter_mut().try_for_each(local)?,
        }
        self.audit.rounds += 1;
        if !last {
            self.trajectory.record(&self.controllers);
        }
        Ok(())
    }

    /// Executes all rounds; afterwards each controller holds `K + 1`
    /// observation samples per quantity.
    pub fn run(&mut self) -> Result<()> {
        for k in 0..=self.horizon {
            self.round(k == self.horizon)?;
        }
        Ok(())
    }

    pub fn final_values(&self, q: Quantity) -> Vec<f64> {
        self.controllers.iter().map(|c| c.current(q)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::run_updates;
    use crate::scenario::Scenario;

    fn golden_engine(execution: Execution) -> RoundEngine {
        let s = Scenario::golden();
        let w = WeightMatrix::demonstration();
        let inj = InjectionSchedule::none(3).with(3, vec![25.0, -12.0, 30.0]).unwrap();
        RoundEngine::new(&s.microgrids, &w, &inj, 3, execution).unwrap()
    }

    #[test]
    fn matches_compact_form_exactly() {
        let mut engine = golden_engine(Execution::Sequential);
        engine.run().unwrap();
        let s = Scenario::golden();
        let inj = InjectionSchedule::none(3).with(3, vec![25.0, -12.0, 30.0]).unwrap();
        let central = run_updates(&WeightMatrix::demonstration(), &s.supplies(), &inj, 3).unwrap();
        assert_eq!(engine.trajectory().supply, central);
        let central = run_updates(&WeightMatrix::demonstration(), &s.demands(), &inj, 3).unwrap();
        assert_eq!(engine.trajectory().demand, central);
    }

    #[test]
    fn audit_counts_every_directed_message() {
        let mut engine = golden_engine(Execution::Sequential);
        engine.run().unwrap();
        let audit = engine.audit();
        // 10 edges, both directions, two quantities, four rounds.
        assert_eq!(audit.messages_delivered, 10 * 2 * 2 * 4);
        assert_eq!(audit.rounds, 4);
        assert_eq!(audit.locality_violations, 0);
        assert_eq!(audit.foreign_profile_reads, 0);
        for c in engine.controllers() {
            assert_eq!(c.observation(Quantity::Supply).samples.len(), 4);
        }
    }

    #[test]
    fn off_graph_delivery_is_caught() {
        let mut engine = golden_engine(Execution::Sequential);
        let msg = Message {
            sender: 0,
            step: 0,
            quantity: Quantity::Supply,
            value: 1.0,
        };
        // Nodes 0 and 4 are not linked.
        assert!(matches!(engine.deliver(4, msg), Err(Error::InternalInvariant(_))));
        assert_eq!(engine.audit().locality_violations, 1);
        assert!(engine.deliver(1, msg).is_ok());
        assert!(engine.deliver(1, msg).is_err());
    }

    #[test]
    fn parallel_equals_sequential() {
        let mut a = golden_engine(Execution::Sequential);
        let mut b = golden_engine(Execution::Parallel);
        a.run().unwrap();
        b.run().unwrap();
        assert_eq!(a.trajectory(), b.trajectory());
        for (x, y) in a.controllers().iter().zip(b.controllers()) {
            assert_eq!(x.observation(Quantity::Demand), y.observation(Quantity::Demand));
        }
    }

    #[test]
    fn mislabeled_profiles_are_refused() {
        let mut s = Scenario::golden();
        s.microgrids.swap(0, 1);
        let w = WeightMatrix::demonstration();
        assert!(RoundEngine::new(&s.microgrids, &w, &InjectionSchedule::none(2), 2, Execution::Sequential).is_err());
    }
}
