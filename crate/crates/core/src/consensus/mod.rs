//! Resilient linear iterative consensus.
//!
//! Every controller repeatedly replaces its value with a weighted combination
//! of its own and its neighbors' values; compromised controllers add injected
//! data to their update. After `K` rounds a controller holds a linear function
//! of the initial values and the injections, and can decode the initial values
//! exactly when the topology and weights satisfy the rank condition checked
//! in [`observability`].

mod decode;
mod dynamics;
mod linalg;
mod observability;
mod weights;

pub use decode::{
    decode_known_faults, decode_unknown_faults, DecodeConfig, DecodeResult, ObservationRecord,
};
pub use dynamics::{run_average_consensus_baseline, run_updates, InjectionSchedule};
pub use observability::{
    build_observability_stack, numerical_rank, selector, subsets_of_size, subsets_up_to,
    verify_identifiability, verify_rank_condition, ObservabilityStack, RankFailure, RankViolation,
};
pub use weights::{synthesize_weights, WeightMatrix, SYNTHESIS_ATTEMPTS};

/// Default horizon cap: `N + 2`.
pub fn default_k_max(node_count: usize) -> usize {
    node_count + 2
}
