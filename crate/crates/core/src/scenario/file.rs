//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "demo",
//!   "microgrids": [{"id": 0, "label": "MG1", "supply": 24.17, "critical_demand": 22.30}, ...],
//!   "attack": {"compromised_controllers": [{"node": 3, "values": [25.0, -12.0, 30.0]}],
//!              "compromised_links": [], "known_to_agent": false},
//!   "f": 1,
//!   "period_hours": 1.0,
//!   "seed": 7,
//!   "consensus": {"k_max": null, "rank_threshold": 1e-9, "residual_tolerance": 1e-8,
//!                 "agreement_tolerance": 1e-6, "condition_threshold": 1e12,
//!                 "baseline_steps": 50, "accuracy_tolerance": 1e-6},
//!   "topology": {"fixed_edges": [[0, 1], ...], "regenerate_each_period": false},
//!   "weights": [[5, 4, 1, 1, 0, 0], ...]
//! }
//! ```
//!
//! `topology`, `weights`, `consensus` and `attack` are optional. Without
//! `fixed_edges` the communication agent generates the graph; without
//! `weights` they are synthesized from the seed.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AttackSpec, MicrogridProfile};
use crate::consensus::{default_k_max, DecodeConfig};
use crate::graph::NodeId;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsensusParams {
    /// Horizon cap for the rank condition; `N + 2` when absent.
    pub k_max: Option<usize>,
    #[serde(flatten)]
    pub decode: DecodeConfig,
    /// Rounds of average consensus in baseline mode.
    pub baseline_steps: usize,
    /// Relative error below which a recovered total counts as accurate.
    pub accuracy_tolerance: f64,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        ConsensusParams {
            k_max: None,
            decode: DecodeConfig::default(),
            baseline_steps: 50,
            accuracy_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_edges: Option<Vec<(NodeId, NodeId)>>,
    #[serde(default = "default_true")]
    pub regenerate_each_period: bool,
}

fn default_true() -> bool {
    true
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            fixed_edges: None,
            regenerate_each_period: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub microgrids: Vec<MicrogridProfile>,
    #[serde(default)]
    pub attack: AttackSpec,
    pub f: usize,
    #[serde(default = "default_period_hours")]
    pub period_hours: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub consensus: ConsensusParams,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
}

fn default_period_hours() -> f64 {
    1.0
}

impl Scenario {
    /// The six-microgrid demonstration with one attacked controller.
    pub fn golden() -> Scenario {
        Scenario::from_json_str(include_str!("../../scenarios/golden.json"))
            .expect("bundled golden scenario is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Scenario> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!("{path}: {inner}"))
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn node_count(&self) -> usize {
        self.microgrids.len()
    }

    pub fn supplies(&self) -> Vec<f64> {
        self.microgrids.iter().map(|m| m.supply.value()).collect()
    }

    pub fn demands(&self) -> Vec<f64> {
        self.microgrids.iter().map(|m| m.critical_demand.value()).collect()
    }

    pub fn k_max(&self) -> usize {
        self.consensus.k_max.unwrap_or_else(|| default_k_max(self.node_count()))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.microgrids.len();
        if n == 0 {
            return Err(Error::Config("microgrids: at least one microgrid is required".into()));
        }
        for (idx, m) in self.microgrids.iter().enumerate() {
            if m.id != idx {
                return Err(Error::Config(format!(
                    "microgrids[{idx}].id: expected {idx}, got {} (ids must be 0..N in order)",
                    m.id
                )));
            }
        }
        if !(self.period_hours.is_finite() && self.period_hours > 0.0) {
            return Err(Error::Config(format!(
                "period_hours: must be positive, got {}",
                self.period_hours
            )));
        }
        if matches!(self.consensus.k_max, Some(0)) {
            return Err(Error::Config("consensus.k_max: must be at least 1".into()));
        }
        if self.consensus.baseline_steps == 0 {
            return Err(Error::Config("consensus.baseline_steps: must be at least 1".into()));
        }
        self.attack.validate(n, self.f)?;
        if let Some(edges) = &self.topology.fixed_edges {
            crate::graph::Graph::from_edges(n, edges.iter().copied())
                .map_err(|e| Error::Config(format!("topology.fixed_edges: {e}")))?;
        }
        if let Some(rows) = &self.weights {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config(format!("weights: expected a {n}x{n} matrix")));
            }
            if rows.iter().flatten().any(|w| !w.is_finite()) {
                return Err(Error::Config("weights: entries must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read scenario {}: {e}", path.display())))?;
    Scenario::from_json_str(&text)
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("config error: "))))
}
