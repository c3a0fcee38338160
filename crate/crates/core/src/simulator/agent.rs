use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{generate_preventive, generate_responsive, Graph, LinkAttackSet, Strategy};
use crate::scenario::Scenario;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySource {
    Generated(Strategy),
    Fixed(Graph),
}

/// Chooses who talks with whom. It is constructed from, and only ever sees,
/// the fault bound, the seed, the node count and the known link attacks.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunicationAgent {
    source: TopologySource,
    f: usize,
    seed: u64,
    regenerate_each_period: bool,
}

impl CommunicationAgent {
    pub fn new(strategy: Strategy, f: usize, seed: u64) -> Self {
        CommunicationAgent {
            source: TopologySource::Generated(strategy),
            f,
            seed,
            regenerate_each_period: true,
        }
    }

    pub fn fixed(graph: Graph, f: usize) -> Self {
        CommunicationAgent {
            source: TopologySource::Fixed(graph),
            f,
            seed: 0,
            regenerate_each_period: false,
        }
    }

    /// Keeps the period-0 topology for every period.
    pub fn with_fixed_cadence(mut self) -> Self {
        self.regenerate_each_period = false;
        self
    }

    /// Fixed edges if the scenario lists them, otherwise responsive when the
    /// link attacks are known and preventive when they are not.
    pub fn for_scenario(scenario: &Scenario) -> Result<Self> {
        let n = scenario.node_count();
        let agent = match &scenario.topology.fixed_edges {
            Some(edges) => CommunicationAgent::fixed(
                Graph::from_edges(n, edges.iter().copied())
                    .map_err(|e| Error::Config(format!("topology.fixed_edges: {e}")))?,
                scenario.f,
            ),
            None => {
                let strategy = if scenario.attack.known_to_agent {
                    Strategy::Responsive
                } else {
                    Strategy::Preventive
                };
                CommunicationAgent::new(strategy, scenario.f, scenario.seed)
            }
        };
        Ok(if scenario.topology.regenerate_each_period {
            agent
        } else {
            agent.with_fixed_cadence()
        })
    }

    pub fn source(&self) -> &TopologySource {
        &self.source
    }

    pub fn fault_bound(&self) -> usize {
        self.f
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Topology for decision period `period`.
    pub fn build_topology(&self, n: usize, links: &LinkAttackSet, period: u64) -> Result<Graph> {
        match &self.source {
            TopologySource::Fixed(g) => {
                if g.node_count() != n {
                    return Err(Error::Config(format!(
                        "fixed topology has {} nodes, scenario has {n}",
                        g.node_count()
                    )));
                }
                if let Some((a, b)) = g.edges().find(|&(a, b)| links.contains(a, b)) {
                    return Err(Error::InfeasibleTopology(format!(
                        "fixed topology uses attacked link ({a}, {b})"
                    )));
                }
                Ok(g.clone())
            }
            TopologySource::Generated(strategy) => {
                let stream = if self.regenerate_each_period { period } else { 0 };
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                rng.set_stream(stream);
                match strategy {
                    Strategy::Preventive => generate_preventive(n, self.f, &mut rng),
                    Strategy::Responsive => generate_responsive(n, self.f, links, &mut rng),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::vertex_connectivity;

    #[test]
    fn same_seed_same_topology() {
        let agent = CommunicationAgent::new(Strategy::Preventive, 1, 99);
        let a = agent.build_topology(8, &LinkAttackSet::new(), 0).unwrap();
        let b = agent.build_topology(8, &LinkAttackSet::new(), 0).unwrap();
        assert_eq!(a, b);
        assert!(vertex_connectivity(&a).unwrap().kappa >= 3);
    }

    #[test]
    fn fixed_cadence_reuses_period_zero() {
        let agent = CommunicationAgent::new(Strategy::Preventive, 1, 5).with_fixed_cadence();
        let links = LinkAttackSet::new();
        assert_eq!(agent.build_topology(9, &links, 0).unwrap(), agent.build_topology(9, &links, 4).unwrap());
    }

    #[test]
    fn fixed_topology_must_avoid_attacked_links() {
        let g = Graph::complete(4).unwrap();
        let agent = CommunicationAgent::fixed(g, 1);
        let links = LinkAttackSet::from_pairs(4, [(0, 1)]).unwrap();
        assert!(matches!(agent.build_topology(4, &links, 0), Err(Error::InfeasibleTopology(_))));
        assert!(agent.build_topology(5, &LinkAttackSet::new(), 0).is_err());
    }
}
