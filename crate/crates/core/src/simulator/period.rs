use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::agent::CommunicationAgent;
use super::controller::{ControllerState, Quantity};
use super::engine::{AuditCounters, RoundEngine};
use super::{DecodeMode, Execution};
use crate::consensus::{
    build_observability_stack, decode_known_faults, decode_unknown_faults, subsets_up_to,
    synthesize_weights, verify_identifiability, verify_rank_condition, DecodeResult,
    InjectionSchedule, RankViolation, WeightMatrix,
};
use crate::graph::{vertex_connectivity, ConnectivityCertificate, Graph, NodeId};
use crate::scenario::{evaluate_criterion, sample_injections, DecisionPeriod, Scenario, Verdict};
use crate::{Error, Result};

const WEIGHT_STREAM: u64 = 1 << 32;
const INJECTION_STREAM: u64 = 2 << 32;

/// State vectors `S^0..` of both consensus instances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub supply: Vec<Vec<f64>>,
    pub demand: Vec<Vec<f64>>,
}

impl Trajectory {
    pub(crate) fn starting_from(controllers: &[ControllerState]) -> Self {
        let mut t = Trajectory::default();
        t.record(controllers);
        t
    }

    pub(crate) fn record(&mut self, controllers: &[ControllerState]) {
        self.supply.push(controllers.iter().map(|c| c.current(Quantity::Supply)).collect());
        self.demand.push(controllers.iter().map(|c| c.current(Quantity::Demand)).collect());
    }

    pub fn steps(&self) -> usize {
        self.supply.len()
    }

    /// `step,controller,quantity,value` rows, step-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,controller,quantity,value\n");
        for (step, (s, d)) in self.supply.iter().zip(&self.demand).enumerate() {
            for (q, states) in [(Quantity::Supply, s), (Quantity::Demand, d)] {
                for (node, v) in states.iter().enumerate() {
                    let _ = writeln!(out, "{step},{node},{},{v:?}", q.as_str());
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerReport {
    pub node: NodeId,
    pub verdict: Verdict,
    pub supply_total: Option<f64>,
    pub demand_total: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub supply_decode: Option<DecodeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demand_decode: Option<DecodeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub mode: DecodeMode,
    pub graph: Graph,
    pub connectivity: Option<ConnectivityCertificate>,
    /// Number of update steps `K`.
    pub horizon: usize,
    pub weights_source: String,
    pub weights: Vec<Vec<f64>>,
    /// Pairs failing the `2f`-set rank condition (supplied weights only).
    pub rank_violations: Vec<RankViolation>,
    pub injections: InjectionSchedule,
    pub true_supply_total: f64,
    pub true_demand_total: f64,
    pub max_supply_deviation: f64,
    pub max_demand_deviation: f64,
    /// Every controller's totals are within the accuracy tolerance.
    pub accurate: bool,
    pub controllers: Vec<ControllerReport>,
    pub audit: AuditCounters,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub period: DecisionPeriod,
    pub per_controller_verdict: BTreeMap<NodeId, Verdict>,
    /// Mean over controllers that reached a verdict.
    pub recovered_supply_total: Option<f64>,
    pub recovered_demand_total: Option<f64>,
    /// The shared verdict when every controller decided the same way.
    pub consensus: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub config_error: bool,
}

impl DecisionRecord {
    fn failed(period: DecisionPeriod, node_count: usize, err: &Error) -> Self {
        DecisionRecord {
            period,
            per_controller_verdict: (0..node_count).map(|i| (i, Verdict::Undecided)).collect(),
            recovered_supply_total: None,
            recovered_demand_total: None,
            consensus: None,
            diagnostics: None,
            error: Some(err.to_string()),
            config_error: err.is_config(),
        }
    }

    /// All controllers decided, and identically.
    pub fn is_unanimous(&self) -> bool {
        self.consensus.is_some_and(|v| v != Verdict::Undecided)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRun {
    pub record: DecisionRecord,
    pub trajectory: Option<Trajectory>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct PreparedWeights {
    weights: WeightMatrix,
    horizon: usize,
    source: &'static str,
    violations: Vec<RankViolation>,
    notes: Vec<String>,
}

fn prepare_resilient(scenario: &Scenario, graph: &Graph, period: u64) -> Result<PreparedWeights> {
    let f = scenario.f;
    let k_max = scenario.k_max();
    let threshold = scenario.consensus.decode.rank_threshold;
    let mut notes = Vec::new();
    if graph.node_count() == 2 * f + 1 && graph.is_complete() {
        notes.push(format!(
            "complete graph on 2f+1 = {} nodes has connectivity {}; every controller sees all values directly",
            graph.node_count(),
            2 * f
        ));
    }
    match &scenario.weights {
        Some(rows) => {
            let n = rows.len();
            let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
            let weights = WeightMatrix::new(graph.clone(), entries)
                .map_err(|e| Error::Config(format!("weights: {e}")))?;
            match verify_rank_condition(&weights, f, k_max, threshold) {
                Ok(k) => Ok(PreparedWeights {
                    weights,
                    horizon: k,
                    source: "supplied",
                    violations: Vec::new(),
                    notes,
                }),
                Err(failure) => {
                    let k = verify_identifiability(&weights, f, k_max, threshold).map_err(|e| {
                        Error::SynthesisFailure(format!("supplied weights cannot identify {f} fault(s): {e}"))
                    })?;
                    notes.push(format!(
                        "supplied weights fail the pairwise rank condition ({}); decoding relies on the candidate agreement check",
                        failure
                    ));
                    Ok(PreparedWeights {
                        weights,
                        horizon: k,
                        source: "supplied",
                        violations: failure.violations,
                        notes,
                    })
                }
            }
        }
        None => {
            let mut rng = stream_rng(scenario.seed, WEIGHT_STREAM + period);
            let weights = synthesize_weights(graph, f, k_max, threshold, &mut rng)?;
            let horizon = verify_rank_condition(&weights, f, k_max, threshold)
                .map_err(|e| Error::InternalInvariant(format!("synthesized weights: {e}")))?;
            Ok(PreparedWeights {
                weights,
                horizon,
                source: "synthesized",
                violations: Vec::new(),
                notes,
            })
        }
    }
}

fn decode_at(
    c: &ControllerState,
    weights: &WeightMatrix,
    horizon: usize,
    mode: DecodeMode,
    scenario: &Scenario,
) -> ControllerReport {
    let cfg = scenario.consensus.decode;
    let attempt = || -> Result<(DecodeResult, DecodeResult)> {
        let declared = scenario.attack.compromised_nodes();
        let candidates = match mode {
            DecodeMode::KnownFaults => vec![declared.clone()],
            _ => subsets_up_to(weights.node_count(), scenario.f),
        };
        let stack = build_observability_stack(weights, c.id(), horizon, &candidates)?;
        let run = |q| match mode {
            DecodeMode::KnownFaults => decode_known_faults(&stack, c.observation(q), &declared, &cfg),
            _ => decode_unknown_faults(&stack, c.observation(q), scenario.f, &cfg),
        };
        Ok((run(Quantity::Supply)?, run(Quantity::Demand)?))
    };
    match attempt() {
        Ok((s, d)) => ControllerReport {
            node: c.id(),
            verdict: evaluate_criterion(s.total, d.total),
            supply_total: Some(s.total),
            demand_total: Some(d.total),
            supply_decode: Some(s),
            demand_decode: Some(d),
            error: None,
        },
        Err(e) => ControllerReport {
            node: c.id(),
            verdict: Verdict::Undecided,
            supply_total: None,
            demand_total: None,
            supply_decode: None,
            demand_decode: None,
            error: Some(e.to_string()),
        },
    }
}

/// One decision period, returning the record together with the state
/// trajectory. Controller-level decode failures leave that controller
/// undecided; topology, weight and engine errors abort the period.
pub fn simulate_period(
    scenario: &Scenario,
    agent: &CommunicationAgent,
    mode: DecodeMode,
    period_index: u64,
    execution: Execution,
) -> Result<PeriodRun> {
    scenario.validate()?;
    let n = scenario.node_count();
    let links = scenario.attack.link_attacks(n)?;
    let graph = agent.build_topology(n, &links, period_index)?;
    let connectivity = if n >= 2 { Some(vertex_connectivity(&graph)?) } else { None };

    let injection_steps = scenario.attack.injection_steps();
    let (prepared, horizon) = match mode {
        DecodeMode::Baseline => {
            let steps = scenario.consensus.baseline_steps;
            let prepared = PreparedWeights {
                weights: WeightMatrix::metropolis(&graph),
                horizon: steps,
                source: "metropolis",
                violations: Vec::new(),
                notes: Vec::new(),
            };
            (prepared, steps)
        }
        _ => {
            let prepared = prepare_resilient(scenario, &graph, period_index)?;
            let horizon = prepared.horizon.max(injection_steps);
            (prepared, horizon)
        }
    };
    let mut inj_rng = stream_rng(scenario.seed, INJECTION_STREAM + period_index);
    let injections = sample_injections(&scenario.attack, horizon, &mut inj_rng)?;

    let mut engine = RoundEngine::new(&scenario.microgrids, &prepared.weights, &injections, horizon, execution)?;
    engine.run()?;

    let reports: Vec<ControllerReport> = match mode {
        DecodeMode::Baseline => Quantity::ALL
            .iter()
            .map(|&q| engine.final_values(q))
            .collect::<Vec<_>>()
            .pipe(|finals| {
                (0..n)
                    .map(|i| {
                        let s = n as f64 * finals[0][i];
                        let d = n as f64 * finals[1][i];
                        ControllerReport {
                            node: i,
                            verdict: evaluate_criterion(s, d),
                            supply_total: Some(s),
                            demand_total: Some(d),
                            supply_decode: None,
                            demand_decode: None,
                            error: None,
                        }
                    })
                    .collect()
            }),
        _ => {
            let decode = |c: &ControllerState| decode_at(c, &prepared.weights, horizon, mode, scenario);
            match execution {
                Execution::Sequential => engine.controllers().iter().map(decode).collect(),
                Execution::Parallel => engine.controllers().par_iter().map(decode).collect(),
            }
        }
    };
    for (c, r) in engine.controllers_mut().iter_mut().zip(&reports) {
        c.verdict = r.verdict;
    }

    let true_supply: f64 = scenario.supplies().iter().sum();
    let true_demand: f64 = scenario.demands().iter().sum();
    let deviation = |truth: f64, pick: fn(&ControllerReport) -> Option<f64>| {
        reports
            .iter()
            .map(|r| pick(r).map_or(f64::INFINITY, |v| (v - truth).abs()))
            .fold(0.0, f64::max)
    };
    let max_supply_deviation = deviation(true_supply, |r| r.supply_total);
    let max_demand_deviation = deviation(true_demand, |r| r.demand_total);
    let tol = scenario.consensus.accuracy_tolerance;
    let within = |dev: f64, truth: f64| dev <= tol * truth.abs().max(1.0);
    let accurate = within(max_supply_deviation, true_supply) && within(max_demand_deviation, true_demand);

    let decided: Vec<&ControllerReport> = reports.iter().filter(|r| r.verdict != Verdict::Undecided).collect();
    let mean = |pick: fn(&ControllerReport) -> Option<f64>| {
        (!decided.is_empty())
            .then(|| decided.iter().filter_map(|r| pick(r)).sum::<f64>() / decided.len() as f64)
    };
    let first = reports.first().map(|r| r.verdict);
    let consensus = first.filter(|v| reports.iter().all(|r| r.verdict == *v));

    let record = DecisionRecord {
        period: DecisionPeriod {
            index: period_index,
            period_hours: scenario.period_hours,
        },
        per_controller_verdict: reports.iter().map(|r| (r.node, r.verdict)).collect(),
        recovered_supply_total: mean(|r| r.supply_total),
        recovered_demand_total: mean(|r| r.demand_total),
        consensus,
        diagnostics: Some(Diagnostics {
            mode,
            graph,
            connectivity,
            horizon,
            weights_source: prepared.source.to_string(),
            weights: prepared.weights.rows(),
            rank_violations: prepared.violations,
            injections,
            true_supply_total: true_supply,
            true_demand_total: true_demand,
            max_supply_deviation,
            max_demand_deviation,
            accurate,
            controllers: reports,
            audit: engine.audit(),
            notes: prepared.notes,
        }),
        error: None,
        config_error: false,
    };
    Ok(PeriodRun {
        record,
        trajectory: Some(engine.trajectory().clone()),
    })
}

trait Pipe: Sized {
    fn pipe<T>(self, f: impl FnOnce(Self) -> T) -> T {
        f(self)
    }
}

impl<T> Pipe for T {}

/// A single decision period (period 0). Fails with a decode error if any
/// controller could not decode.
pub fn run_period(scenario: &Scenario, agent: &CommunicationAgent, mode: DecodeMode) -> Result<DecisionRecord> {
    let run = simulate_period(scenario, agent, mode, 0, Execution::Sequential)?;
    let undecided: Vec<String> = run
        .record
        .diagnostics
        .iter()
        .flat_map(|d| &d.controllers)
        .filter_map(|r| r.error.as_ref().map(|e| format!("controller {}: {e}", r.node)))
        .collect();
    if !undecided.is_empty() {
        return Err(Error::DecodeFailure(undecided.join("; ")));
    }
    Ok(run.record)
}

/// Periods `0..periods`; a failing period is recorded and the campaign
/// continues.
pub fn run_campaign_detailed(
    scenario: &Scenario,
    periods: u64,
    agent: &CommunicationAgent,
    mode: DecodeMode,
    execution: Execution,
) -> Result<Vec<PeriodRun>> {
    if periods == 0 {
        return Err(Error::InvalidArgument("a campaign needs at least one period".into()));
    }
    let one = |p: u64| {
        simulate_period(scenario, agent, mode, p, execution).unwrap_or_else(|e| PeriodRun {
            record: DecisionRecord::failed(
                DecisionPeriod {
                    index: p,
                    period_hours: scenario.period_hours,
                },
                scenario.node_count(),
                &e,
            ),
            trajectory: None,
        })
    };
    Ok(match execution {
        Execution::Sequential => (0..periods).map(one).collect(),
        Execution::Parallel => (0..periods).into_par_iter().map(one).collect(),
    })
}

pub fn run_campaign(
    scenario: &Scenario,
    periods: u64,
    agent: &CommunicationAgent,
    mode: DecodeMode,
) -> Result<Vec<DecisionRecord>> {
    Ok(run_campaign_detailed(scenario, periods, agent, mode, Execution::Sequential)?
        .into_iter()
        .map(|r| r.record)
        .collect())
}
