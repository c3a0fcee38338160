//! Python bindings for `mgnet-core`.

use std::collections::BTreeMap;

use mgnet_core::consensus::{
    default_k_max, run_updates as core_run_updates, synthesize_weights, verify_rank_condition as core_verify,
    InjectionSchedule, WeightMatrix,
};
use mgnet_core::graph::{self, Graph, LinkAttackSet};
use mgnet_core::scenario::{self, Scenario, Verdict};
use mgnet_core::simulator::{simulate_period, CommunicationAgent, DecodeMode, Execution};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

create_exception!(mgnet, MgnetError, PyException, "Raised when a computation fails.");

fn err(e: mgnet_core::Error) -> PyErr {
    if e.is_config() {
        PyValueError::new_err(e.to_string())
    } else {
        MgnetError::new_err(e.to_string())
    }
}

fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Interconnect => "interconnect",
        Verdict::StandAlone => "stand_alone",
        Verdict::Undecided => "undecided",
    }
}

#[pyclass(name = "Graph", module = "mgnet")]
struct PyGraph {
    inner: Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (node_count, edges = Vec::new()))]
    fn new(node_count: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyGraph {
            inner: Graph::from_edges(node_count, edges).map_err(err)?,
        })
    }

    #[staticmethod]
    fn complete(node_count: usize) -> PyResult<Self> {
        Ok(PyGraph {
            inner: Graph::complete(node_count).map_err(err)?,
        })
    }

    #[staticmethod]
    fn demonstration() -> Self {
        PyGraph {
            inner: graph::demonstration_topology(),
        }
    }

    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        Ok(PyGraph {
            inner: Graph::from_edge_list(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_dot(text: &str) -> PyResult<Self> {
        Ok(PyGraph {
            inner: Graph::from_dot(text).map_err(err)?,
        })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.inner.has_edge(a, b)
    }

    fn neighbors(&self, node: usize) -> PyResult<Vec<usize>> {
        Ok(self.inner.neighbors(node).map_err(err)?.iter().copied().collect())
    }

    /// `(kappa, witness_cut)`; the cut is `None` for complete graphs.
    fn vertex_connectivity(&self) -> PyResult<(usize, Option<Vec<usize>>)> {
        let c = graph::vertex_connectivity(&self.inner).map_err(err)?;
        Ok((c.kappa, c.witness_cut))
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    fn to_dot(&self) -> String {
        self.inner.to_dot()
    }

    fn __eq__(&self, other: PyRef<'_, PyGraph>) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

#[pyfunction]
#[pyo3(signature = (n, f, seed = 0))]
fn generate_preventive(n: usize, f: usize, seed: u64) -> PyResult<PyGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(PyGraph {
        inner: graph::generate_preventive(n, f, &mut rng).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (n, f, attacked_links, seed = 0))]
fn generate_responsive(n: usize, f: usize, attacked_links: Vec<(usize, usize)>, seed: u64) -> PyResult<PyGraph> {
    let links = LinkAttackSet::from_pairs(n, attacked_links).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(PyGraph {
        inner: graph::generate_responsive(n, f, &links, &mut rng).map_err(err)?,
    })
}

#[pyclass(name = "WeightMatrix", module = "mgnet")]
struct PyWeightMatrix {
    inner: WeightMatrix,
}

#[pymethods]
impl PyWeightMatrix {
    /// Rows of a square matrix; the communication graph is read off the
    /// nonzero pattern.
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyWeightMatrix {
            inner: WeightMatrix::from_rows(&rows).map_err(err)?,
        })
    }

    #[staticmethod]
    fn demonstration() -> Self {
        PyWeightMatrix {
            inner: WeightMatrix::demonstration(),
        }
    }

    #[staticmethod]
    fn metropolis(graph: PyRef<'_, PyGraph>) -> Self {
        PyWeightMatrix {
            inner: WeightMatrix::metropolis(&graph.inner),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (graph, f, k_max = None, seed = 0, rank_threshold = 1e-9))]
    fn synthesize(
        graph: PyRef<'_, PyGraph>,
        f: usize,
        k_max: Option<usize>,
        seed: u64,
        rank_threshold: f64,
    ) -> PyResult<Self> {
        let k_max = k_max.unwrap_or_else(|| default_k_max(graph.inner.node_count()));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(PyWeightMatrix {
            inner: synthesize_weights(&graph.inner, f, k_max, rank_threshold, &mut rng).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyWeightMatrix {
            inner: WeightMatrix::from_csv(text).map_err(err)?,
        })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows()
    }

    fn graph(&self) -> PyGraph {
        PyGraph {
            inner: self.inner.graph().clone(),
        }
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }
}

/// Smallest feasible horizon, or `None` with the failing `(observer, set)`
/// pairs.
#[pyfunction]
#[pyo3(signature = (weights, f, k_max = None, rank_threshold = 1e-9))]
fn verify_rank_condition(
    weights: PyRef<'_, PyWeightMatrix>,
    f: usize,
    k_max: Option<usize>,
    rank_threshold: f64,
) -> (Option<usize>, Vec<(usize, Vec<usize>)>) {
    let k_max = k_max.unwrap_or_else(|| default_k_max(weights.inner.node_count()));
    match core_verify(&weights.inner, f, k_max, rank_threshold) {
        Ok(k) => (Some(k), Vec::new()),
        Err(failure) => (None, failure.violations.into_iter().map(|v| (v.observer, v.set)).collect()),
    }
}

/// States `S^0..=S^K` under per-node injection sequences.
#[pyfunction]
#[pyo3(signature = (weights, initial, horizon, injections = BTreeMap::new()))]
fn run_updates(
    weights: PyRef<'_, PyWeightMatrix>,
    initial: Vec<f64>,
    horizon: usize,
    injections: BTreeMap<usize, Vec<f64>>,
) -> PyResult<Vec<Vec<f64>>> {
    let mut schedule = InjectionSchedule::none(horizon);
    for (node, values) in injections {
        schedule.insert(node, values).map_err(err)?;
    }
    core_run_updates(&weights.inner, &initial, &schedule, horizon).map_err(err)
}

#[pyclass(name = "Scenario", module = "mgnet")]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn golden() -> Self {
        PyScenario {
            inner: Scenario::golden(),
        }
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyScenario {
            inner: scenario::load_scenario(path).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyScenario {
            inner: Scenario::from_json_str(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_string()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    fn supplies(&self) -> Vec<f64> {
        self.inner.supplies()
    }

    fn demands(&self) -> Vec<f64> {
        self.inner.demands()
    }
}

fn parse_mode(mode: &str) -> PyResult<DecodeMode> {
    match mode {
        "resilient-known" => Ok(DecodeMode::KnownFaults),
        "resilient" | "resilient-unknown" => Ok(DecodeMode::UnknownFaults),
        "baseline" => Ok(DecodeMode::Baseline),
        other => Err(PyValueError::new_err(format!(
            "unknown mode {other:?} (expected resilient-known, resilient-unknown or baseline)"
        ))),
    }
}

/// One decision period; returns the decision record as JSON.
#[pyfunction]
#[pyo3(signature = (scenario, mode = "resilient-unknown", period = 0))]
fn run_period(py: Python<'_>, scenario: PyRef<'_, PyScenario>, mode: &str, period: u64) -> PyResult<String> {
    let mode = parse_mode(mode)?;
    let s = scenario.inner.clone();
    let record = py.detach(move || {
        let agent = CommunicationAgent::for_scenario(&s)?;
        simulate_period(&s, &agent, mode, period, Execution::Parallel)
    });
    let run = record.map_err(err)?;
    serde_json::to_string(&run.record).map_err(|e| MgnetError::new_err(e.to_string()))
}

/// Either `"interconnect"` or `"stand_alone"`.
#[pyfunction]
fn evaluate_criterion(supply_total: f64, demand_total: f64) -> &'static str {
    verdict_str(scenario::evaluate_criterion(supply_total, demand_total))
}

#[pymodule]
pub fn mgnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MgnetError", m.py().get_type::<MgnetError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyWeightMatrix>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(generate_preventive, m)?)?;
    m.add_function(wrap_pyfunction!(generate_responsive, m)?)?;
    m.add_function(wrap_pyfunction!(verify_rank_condition, m)?)?;
    m.add_function(wrap_pyfunction!(run_updates, m)?)?;
    m.add_function(wrap_pyfunction!(run_period, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_criterion, m)?)?;
    Ok(())
}
