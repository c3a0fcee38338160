//! Attack-resilient interconnection decisions for networked microgrids.
//!
//! Microgrid controllers exchange supply and critical-demand values over a
//! randomized peer-to-peer graph, run linear iterative consensus in which a
//! bounded number of controllers may have their updates corrupted by injected
//! data, and each controller reconstructs every initial value from its own
//! observation history. From the recovered totals every controller evaluates
//! the interconnection rule `Σ supply > Σ critical demand`.
//!
//! Layout:
//! - [`graph`]: communication topologies, exact vertex connectivity, and the
//!   connectivity-preserving generators.
//! - [`consensus`]: weights, the update dynamics with injection, observability
//!   stacks, the rank condition, and the fault-tolerant decoders.
//! - [`scenario`]: microgrid profiles, attack descriptions, scenario files.
//! - [`simulator`]: the synchronous round engine and per-period decisions.

pub mod consensus;
pub mod error;
pub mod graph;
pub mod scenario;
pub mod simulator;

pub use error::{Error, Result};
pub use graph::{ConnectivityCertificate, Graph, LinkAttackSet, NodeId};
