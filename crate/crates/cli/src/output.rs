use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use mgnet_core::graph::{ConnectivityCertificate, Graph, Strategy};
use mgnet_core::scenario::Scenario;
use mgnet_core::simulator::{DecodeMode, PeriodRun};
use serde_json::json;

fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

/// Period 0 files carry the plain name; later periods get a `_<p>` suffix.
fn per_period(stem: &str, ext: &str, period: u64) -> String {
    if period == 0 {
        format!("{stem}.{ext}")
    } else {
        format!("{stem}_{period}.{ext}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn write_run(dir: &Path, scenario: &Scenario, mode: DecodeMode, runs: &[PeriodRun]) -> anyhow::Result<()> {
    create(dir)?;
    let records: Vec<_> = runs.iter().map(|r| &r.record).collect();
    let doc = json!({
        "scenario": scenario.name,
        "mode": mode,
        "seed": scenario.seed,
        "periods": runs.len(),
        "records": records,
    });
    write(dir, "decision_record.json", &(serde_json::to_string_pretty(&doc)? + "\n"))?;

    let mut estimates = String::from(
        "period,controller,verdict,supply_estimate,demand_estimate,true_supply,true_demand,supply_error,demand_error\n",
    );
    for run in runs {
        let p = run.record.period.index;
        if let Some(t) = &run.trajectory {
            write(dir, &per_period("trajectory", "csv", p), &t.to_csv())?;
        }
        let Some(d) = &run.record.diagnostics else { continue };
        write(dir, &per_period("graph", "edges", p), &d.graph.to_edge_list())?;
        write(dir, &per_period("graph", "dot", p), &d.graph.to_dot())?;
        let weights: String = d
            .weights
            .iter()
            .map(|row| row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",") + "\n")
            .collect();
        write(dir, &per_period("weights", "csv", p), &weights)?;
        for c in &d.controllers {
            let err = |v: Option<f64>, truth: f64| opt(v.map(|x| x - truth));
            let verdict = serde_json::to_value(c.verdict)?;
            let _ = writeln!(
                estimates,
                "{p},{},{},{},{},{:?},{:?},{},{}",
                c.node,
                verdict.as_str().unwrap_or_default(),
                opt(c.supply_total),
                opt(c.demand_total),
                d.true_supply_total,
                d.true_demand_total,
                err(c.supply_total, d.true_supply_total),
                err(c.demand_total, d.true_demand_total),
            );
        }
    }
    write(dir, "estimates.csv", &estimates)
}

pub fn print_summary(runs: &[PeriodRun]) {
    for run in runs {
        let r = &run.record;
        let verdict = r
            .consensus
            .map(|v| serde_json::to_value(v).ok().and_then(|j| j.as_str().map(String::from)).unwrap_or_default())
            .unwrap_or_else(|| "split".into());
        let totals = match (r.recovered_supply_total, r.recovered_demand_total) {
            (Some(s), Some(d)) => format!("supply {s:.2}, demand {d:.2}"),
            _ => "no totals".into(),
        };
        let accuracy = match &r.diagnostics {
            Some(d) if !d.accurate => format!(
                "; inaccurate (max deviation supply {:.2}, demand {:.2})",
                d.max_supply_deviation, d.max_demand_deviation
            ),
            _ => String::new(),
        };
        println!("period {}: {verdict}; {totals}{accuracy}", r.period.index);
        if let Some(e) = &r.error {
            println!("  error: {e}");
        }
    }
}

pub fn write_graph(
    dir: &Path,
    g: &Graph,
    cert: &ConnectivityCertificate,
    f: usize,
    strategy: Strategy,
    seed: u64,
) -> anyhow::Result<()> {
    create(dir)?;
    write(dir, "graph.edges", &g.to_edge_list())?;
    write(dir, "graph.dot", &g.to_dot())?;
    let doc = json!({
        "nodes": g.node_count(),
        "edges": g.edge_count(),
        "f": f,
        "strategy": strategy,
        "seed": seed,
        "required_connectivity": 2 * f + 1,
        "kappa": cert.kappa,
        "witness_cut": cert.witness_cut,
    });
    write(dir, "certificate.json", &(serde_json::to_string_pretty(&doc)? + "\n"))
}
