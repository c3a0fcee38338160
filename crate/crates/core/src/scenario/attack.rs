use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::consensus::InjectionSchedule;
use crate::graph::{LinkAttackSet, NodeId};
use crate::{Error, Result};

/// A named injection distribution sampled once per step for `steps` steps.
///
/// Supported names and parameters: `uniform {low, high}`,
/// `normal {mean, std}`, `constant {value}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionDescriptor {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub steps: usize,
}

impl DistributionDescriptor {
    fn param(&self, key: &str) -> Result<f64> {
        self.params.get(key).copied().ok_or_else(|| {
            Error::Config(format!("distribution {:?} needs parameter {key:?}", self.name))
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match self.name.as_str() {
            "uniform" => {
                let (low, high) = (self.param("low")?, self.param("high")?);
                let dist = Uniform::new_inclusive(low, high)
                    .map_err(|e| Error::Config(format!("uniform({low}, {high}): {e}")))?;
                Ok((0..self.steps).map(|_| dist.sample(rng)).collect())
            }
            "normal" => {
                let (mean, std) = (self.param("mean")?, self.param("std")?);
                let dist = Normal::new(mean, std)
                    .map_err(|e| Error::Config(format!("normal({mean}, {std}): {e}")))?;
                Ok((0..self.steps).map(|_| dist.sample(rng)).collect())
            }
            "constant" => Ok(vec![self.param("value")?; self.steps]),
            other => Err(Error::Config(format!(
                "unknown injection distribution {other:?} (expected uniform, normal or constant)"
            ))),
        }
    }
}

/// A compromised controller and what gets injected into its update. Exactly
/// one of `values` and `distribution` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompromisedController {
    pub node: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionDescriptor>,
}

impl CompromisedController {
    pub fn explicit(node: NodeId, values: Vec<f64>) -> Self {
        CompromisedController {
            node,
            values: Some(values),
            distribution: None,
        }
    }

    pub fn sampled(node: NodeId, distribution: DistributionDescriptor) -> Self {
        CompromisedController {
            node,
            values: None,
            distribution: Some(distribution),
        }
    }

    /// Number of consecutive steps that carry injected data.
    pub fn steps(&self) -> usize {
        match (&self.values, &self.distribution) {
            (Some(v), _) => v.len(),
            (None, Some(d)) => d.steps,
            (None, None) => 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    #[serde(default)]
    pub compromised_controllers: Vec<CompromisedController>,
    #[serde(default)]
    pub compromised_links: Vec<(NodeId, NodeId)>,
    /// Whether the communication agent knows which links are attacked and
    /// should route around them.
    #[serde(default)]
    pub known_to_agent: bool,
}

impl AttackSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn compromised_nodes(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.compromised_controllers.iter().map(|c| c.node).collect();
        nodes.sort_unstable();
        nodes
    }

    /// Longest injection run over all compromised controllers.
    pub fn injection_steps(&self) -> usize {
        self.compromised_controllers.iter().map(CompromisedController::steps).max().unwrap_or(0)
    }

    pub fn link_attacks(&self, node_count: usize) -> Result<LinkAttackSet> {
        LinkAttackSet::from_pairs(node_count, self.compromised_links.iter().copied())
            .map_err(|e| Error::Config(format!("attack.compromised_links: {e}")))
    }

    pub fn validate(&self, node_count: usize, f: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (idx, c) in self.compromised_controllers.iter().enumerate() {
            let field = format!("attack.compromised_controllers[{idx}]");
            if c.node >= node_count {
                return Err(Error::Config(format!(
                    "{field}.node: node {} does not exist ({node_count} microgrids)",
                    c.node
                )));
            }
            if !seen.insert(c.node) {
                return Err(Error::Config(format!("{field}.node: node {} listed twice", c.node)));
            }
            match (&c.values, &c.distribution) {
                (Some(v), None) => {
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Config(format!("{field}.values: non-finite injection")));
                    }
                }
                (None, Some(_)) => {}
                _ => {
                    return Err(Error::Config(format!(
                        "{field}: set exactly one of \"values\" or \"distribution\""
                    )))
                }
            }
        }
        if seen.len() > f {
            return Err(Error::Config(format!(
                "attack.compromised_controllers: {} compromised controllers exceed fault bound f = {f}",
                seen.len()
            )));
        }
        self.link_attacks(node_count)?;
        Ok(())
    }
}

/// Turns an attack description into a concrete schedule over `steps` update
/// steps. Explicit values pass through unchanged; distributions are sampled
/// node by node in ascending order, step by step.
pub fn sample_injections<R: Rng + ?Sized>(
    spec: &AttackSpec,
    steps: usize,
    rng: &mut R,
) -> Result<InjectionSchedule> {
    let mut controllers: Vec<&CompromisedController> = spec.compromised_controllers.iter().collect();
    controllers.sort_by_key(|c| c.node);
    let mut schedule = InjectionSchedule::none(steps);
    for c in controllers {
        let values = match (&c.values, &c.distribution) {
            (Some(v), None) => v.clone(),
            (None, Some(d)) => d.sample(rng)?,
            _ => {
                return Err(Error::Config(format!(
                    "compromised controller {} needs exactly one of values or distribution",
                    c.node
                )))
            }
        };
        if values.len() > steps {
            return Err(Error::Config(format!(
                "controller {}: {} injection steps exceed the horizon of {steps}",
                c.node,
                values.len()
            )));
        }
        schedule.insert(c.node, values)?;
    }
    Ok(schedule)
}
