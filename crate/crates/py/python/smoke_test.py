"""Smoke test for the mgnet extension module.

Build the module first, e.g. `maturin develop -m crates/py/Cargo.toml`, or
copy target/<profile>/libmgnet.so next to this script as mgnet.so.
"""

import json

import mgnet


def main():
    g = mgnet.Graph.demonstration()
    kappa, cut = g.vertex_connectivity()
    assert (g.node_count, g.edge_count, kappa) == (6, 10, 3), (g, kappa)
    assert len(cut) == 3

    p = mgnet.generate_preventive(8, 1, seed=3)
    assert p.vertex_connectivity()[0] >= 3
    r = mgnet.generate_responsive(8, 1, [(0, 1), (2, 3)], seed=3)
    assert not r.has_edge(0, 1) and not r.has_edge(2, 3)
    assert mgnet.Graph.from_edge_list(r.to_edge_list()) == r

    w = mgnet.WeightMatrix.synthesize(p, 1, seed=5)
    horizon, violations = mgnet.verify_rank_condition(w, 1)
    assert horizon is not None and not violations
    states = mgnet.run_updates(w, [1.0] * 8, horizon, {2: [5.0] * horizon})
    assert len(states) == horizon + 1

    horizon, violations = mgnet.verify_rank_condition(mgnet.WeightMatrix.demonstration(), 1)
    assert horizon is None and violations == [(2, [0, 1])]

    s = mgnet.Scenario.golden()
    record = json.loads(mgnet.run_period(s, "resilient-unknown"))
    assert record["consensus"] == "interconnect"
    assert abs(record["recovered_supply_total"] - 441.44) < 0.15
    assert abs(record["recovered_demand_total"] - 380.06) < 0.15
    baseline = json.loads(mgnet.run_period(s, "baseline"))
    assert not baseline["diagnostics"]["accurate"]

    assert mgnet.evaluate_criterion(441.44, 380.06) == "interconnect"
    try:
        mgnet.Scenario.from_json("{}")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed scenario accepted")
    try:
        mgnet.generate_responsive(5, 2, [(a, b) for a in range(5) for b in range(a + 1, 5)])
    except mgnet.MgnetError:
        pass
    else:
        raise AssertionError("infeasible topology accepted")
    print("mgnet smoke test passed")


if __name__ == "__main__":
    main()
