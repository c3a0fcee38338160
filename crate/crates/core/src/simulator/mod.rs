//! Synchronous message-passing realization of the consensus scheme.
//!
//! Each controller is a separate state machine holding only its own profile,
//! its row of the weight matrix, and the messages delivered to it over graph
//! edges. The engine moves messages between controllers and enforces the
//! round barrier; the communication agent produces topologies without any
//! access to microgrid data.

mod agent;
mod controller;
mod engine;
mod period;

use serde::{Deserialize, Serialize};

pub use agent::{CommunicationAgent, TopologySource};
pub use controller::{ControllerState, Message, Quantity};
pub use engine::{AuditCounters, RoundEngine};
pub use period::{
    run_campaign, run_campaign_detailed, run_period, simulate_period, ControllerReport, DecisionRecord, Diagnostics,
    PeriodRun, Trajectory,
};

/// How controllers turn their observations into totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// Resilient decoding with the compromised set declared up front.
    KnownFaults,
    /// Resilient decoding over every candidate set of at most `f` nodes.
    UnknownFaults,
    /// Metropolis average consensus; totals are `N` times the local value.
    Baseline,
}

/// Whether controllers within a round run on the rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}
