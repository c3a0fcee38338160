//! Microgrid-level inputs: supplies, critical demands, attacks, and the
//! interconnection rule.

mod attack;
mod file;

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;

pub use attack::{sample_injections, AttackSpec, CompromisedController, DistributionDescriptor};
pub use file::{load_scenario, ConsensusParams, Scenario, TopologyConfig};

/// Energy quantity in kVA·h that must be finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Kvah(f64);

impl Kvah {
    pub fn new(value: f64) -> Result<Self, String> {
        if !value.is_finite() || value < 0.0 {
            return Err(format!("expected a finite non-negative kVA·h value, got {value}"));
        }
        Ok(Kvah(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Kvah {
    type Error = String;

    fn try_from(value: f64) -> Result<Self, String> {
        Kvah::new(value)
    }
}

impl From<Kvah> for f64 {
    fn from(k: Kvah) -> f64 {
        k.0
    }
}

/// One microgrid's estimates for the coming period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrogridProfile {
    pub id: NodeId,
    #[serde(default)]
    pub label: String,
    pub supply: Kvah,
    pub critical_demand: Kvah,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionPeriod {
    pub index: u64,
    pub period_hours: f64,
}

impl DecisionPeriod {
    pub fn next(self) -> Self {
        DecisionPeriod {
            index: self.index + 1,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Interconnect,
    StandAlone,
    Undecided,
}

/// Interconnect exactly when total supply strictly exceeds total critical
/// demand; ties keep the microgrids apart.
pub fn evaluate_criterion(supply_total: f64, demand_total: f64) -> Verdict {
    if supply_total > demand_total {
        Verdict::Interconnect
    } else {
        Verdict::StandAlone
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn criterion_examples() {
        assert_eq!(evaluate_criterion(441.44, 380.06), Verdict::Interconnect);
        assert_eq!(evaluate_criterion(0.0, 0.0), Verdict::StandAlone);
        assert_eq!(evaluate_criterion(100.0, 100.000001), Verdict::StandAlone);
    }

    #[test]
    fn kvah_validation() {
        assert!(Kvah::new(-0.5).is_err());
        assert!(Kvah::new(f64::NAN).is_err());
        assert_eq!(Kvah::new(3.5).unwrap().value(), 3.5);
    }

    proptest! {
        #[test]
        fn criterion_is_antisymmetric(a in 0.0..1e6f64, b in 0.0..1e6f64) {
            prop_assume!(a != b);
            if evaluate_criterion(a, b) == Verdict::Interconnect {
                prop_assert_eq!(evaluate_criterion(b, a), Verdict::StandAlone);
            }
        }

        #[test]
        fn criterion_is_scale_invariant(
            supplies in prop::collection::vec(0.0..500.0f64, 1..10),
            demands in prop::collection::vec(0.0..500.0f64, 1..10),
            scale in prop::sample::select(vec![0.25, 0.5, 2.0, 4.0, 1024.0]),
        ) {
            let s: f64 = supplies.iter().sum();
            let d: f64 = demands.iter().sum();
            // Power-of-two scaling is exact in binary floating point.
            let ss: f64 = supplies.iter().map(|v| v * scale).sum();
            let ds: f64 = demands.iter().map(|v| v * scale).sum();
            prop_assert_eq!(evaluate_criterion(s, d), evaluate_criterion(ss, ds));
        }
    }
}
