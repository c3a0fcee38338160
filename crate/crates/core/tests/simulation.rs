use std::collections::BTreeMap;

use mgnet_core::graph::Strategy;
use mgnet_core::scenario::{load_scenario, AttackSpec, CompromisedController, DistributionDescriptor, Scenario, Verdict};
use mgnet_core::simulator::{run_campaign, run_campaign_detailed, run_period, simulate_period, CommunicationAgent, DecodeMode, Execution};

fn golden_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/golden.json")
}

fn generated(seed: u64) -> Scenario {
    let mut s = Scenario::golden();
    s.weights = None;
    s.topology.fixed_edges = None;
    s.topology.regenerate_each_period = true;
    s.seed = seed;
    s.attack = AttackSpec {
        compromised_controllers: vec![CompromisedController::sampled(
            1,
            DistributionDescriptor {
                name: "normal".into(),
                params: BTreeMap::from([("mean".into(), 20.0), ("std".into(), 5.0)]),
                steps: 3,
            },
        )],
        compromised_links: vec![(0, 4), (4, 5)],
        known_to_agent: true,
    };
    s
}

#[test]
fn golden_file_loads_and_decides() {
    let s = load_scenario(golden_path()).unwrap();
    assert_eq!(s, Scenario::golden());
    let agent = CommunicationAgent::for_scenario(&s).unwrap();
    for mode in [DecodeMode::KnownFaults, DecodeMode::UnknownFaults] {
        let rec = run_period(&s, &agent, mode).unwrap();
        assert_eq!(rec.consensus, Some(Verdict::Interconnect));
        assert!((rec.recovered_supply_total.unwrap() - 441.44).abs() < 1e-6);
        assert!((rec.recovered_demand_total.unwrap() - 380.06).abs() < 1e-6);
    }
}

#[test]
fn golden_diagnostics_report_pairwise_violation() {
    let s = Scenario::golden();
    let agent = CommunicationAgent::for_scenario(&s).unwrap();
    let d = run_period(&s, &agent, DecodeMode::UnknownFaults).unwrap().diagnostics.unwrap();
    assert_eq!(d.weights_source, "supplied");
    assert_eq!(d.rank_violations.len(), 1);
    assert_eq!(d.horizon, 3);
    assert_eq!(d.connectivity.unwrap().kappa, 3);
}

#[test]
fn outputs_are_byte_identical_for_equal_seeds() {
    let s = generated(42);
    let agent = CommunicationAgent::for_scenario(&s).unwrap();
    let render = || {
        run_campaign_detailed(&s, 3, &agent, DecodeMode::UnknownFaults, Execution::Parallel)
            .unwrap()
            .into_iter()
            .map(|r| (serde_json::to_string(&r.record).unwrap(), r.trajectory.unwrap().to_csv()))
            .collect::<Vec<_>>()
    };
    assert_eq!(render(), render());
    let other = CommunicationAgent::for_scenario(&generated(43)).unwrap();
    let a = simulate_period(&s, &agent, DecodeMode::UnknownFaults, 0, Execution::Sequential).unwrap();
    let b = simulate_period(&generated(43), &other, DecodeMode::UnknownFaults, 0, Execution::Sequential).unwrap();
    assert_ne!(a.record.diagnostics.unwrap().weights, b.record.diagnostics.unwrap().weights);
}

#[test]
fn responsive_campaign_avoids_attacked_links() {
    let s = generated(8);
    let agent = CommunicationAgent::for_scenario(&s).unwrap();
    let records = run_campaign(&s, 4, &agent, DecodeMode::UnknownFaults).unwrap();
    let mut graphs = Vec::new();
    for r in &records {
        assert!(r.is_unanimous(), "{:?}", r.error);
        let d = r.diagnostics.as_ref().unwrap();
        assert!(d.accurate);
        assert!(!d.graph.has_edge(0, 4) && !d.graph.has_edge(4, 5));
        assert_eq!(d.injections.faulty_nodes(), vec![1]);
        graphs.push(d.graph.clone());
    }
    assert!(graphs.windows(2).any(|p| p[0] != p[1]), "topology should be regenerated each period");
}

#[test]
fn fixed_cadence_reuses_topology() {
    let mut s = generated(8);
    s.topology.regenerate_each_period = false;
    let agent = CommunicationAgent::for_scenario(&s).unwrap();
    let recs = run_campaign(&s, 3, &agent, DecodeMode::KnownFaults).unwrap();
    let g0 = &recs[0].diagnostics.as_ref().unwrap().graph;
    assert!(recs.iter().all(|r| &r.diagnostics.as_ref().unwrap().graph == g0));
    let preventive = CommunicationAgent::new(Strategy::Preventive, 1, 8);
    assert!(run_period(&s, &preventive, DecodeMode::KnownFaults).is_ok());
}

#[test]
fn known_and_unknown_modes_agree() {
    let s = generated(5);
    let agent = CommunicationAgent::for_scenario(&s).unwrap();
    let k = run_period(&s, &agent, DecodeMode::KnownFaults).unwrap();
    let u = run_period(&s, &agent, DecodeMode::UnknownFaults).unwrap();
    assert_eq!(k.per_controller_verdict, u.per_controller_verdict);
    let (a, b) = (k.recovered_supply_total.unwrap(), u.recovered_supply_total.unwrap());
    assert!((a - b).abs() <= 1e-6 * a.abs());
}

#[test]
fn golden_attack_at_any_controller_is_tolerated() {
    for node in 0..6 {
        let mut s = Scenario::golden();
        s.attack.compromised_controllers[0].node = node;
        let agent = CommunicationAgent::for_scenario(&s).unwrap();
        for mode in [DecodeMode::KnownFaults, DecodeMode::UnknownFaults] {
            let rec = run_period(&s, &agent, mode).unwrap();
            assert_eq!(rec.consensus, Some(Verdict::Interconnect), "attack at {node}");
            assert!(rec.diagnostics.unwrap().accurate, "attack at {node}");
        }
    }
}
