//! `mgnet`: run decision campaigns, generate certified topologies and check
//! weight matrices.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 the computation
//! itself failed (decode failure, infeasible topology, rank condition).

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mgnet_core::consensus::{default_k_max, verify_identifiability, verify_rank_condition, WeightMatrix};
use mgnet_core::graph::{vertex_connectivity, Graph, LinkAttackSet, Strategy};
use mgnet_core::scenario::load_scenario;
use mgnet_core::simulator::{run_campaign_detailed, CommunicationAgent, DecodeMode, Execution};

#[derive(Parser)]
#[command(name = "mgnet", version, about = "Resilient interconnection decisions for networked microgrids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a decision campaign from a scenario file.
    Run(RunArgs),
    /// Generate a certified communication topology.
    Graph(GraphArgs),
    /// Find the smallest horizon satisfying the rank condition for a weight matrix.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    ResilientKnown,
    #[value(alias = "resilient")]
    ResilientUnknown,
    Baseline,
}

impl From<Mode> for DecodeMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::ResilientKnown => DecodeMode::KnownFaults,
            Mode::ResilientUnknown => DecodeMode::UnknownFaults,
            Mode::Baseline => DecodeMode::Baseline,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "resilient-unknown")]
    mode: Mode,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long, env = "MGNET_SEED")]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    periods: u64,
    /// Edge list or DOT file replacing the scenario topology.
    #[arg(long)]
    fixed_graph: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Preventive,
    Responsive,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(short, long)]
    n: usize,
    #[arg(short, long)]
    f: usize,
    #[arg(long, value_enum, default_value = "preventive")]
    strategy: StrategyArg,
    /// Attacked links as `a-b` pairs separated by commas.
    #[arg(long, default_value = "")]
    attacked_links: String,
    #[arg(long, env = "MGNET_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Weight matrix as CSV, one row per line.
    #[arg(long)]
    weights: PathBuf,
    #[arg(short, long)]
    f: usize,
    /// Largest horizon to try; defaults to N + 2.
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    rank_threshold: f64,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure { code: 1, message: e.to_string() }
    }

    fn from_core(e: mgnet_core::Error) -> Self {
        Failure {
            code: if e.is_config() { 1 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::config(format!("{e:#}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read_graph(path: &Path) -> anyhow::Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_dot = path.extension().is_some_and(|e| e == "dot") || text.trim_start().starts_with("graph");
    let g = if is_dot { Graph::from_dot(&text) } else { Graph::from_edge_list(&text) };
    g.with_context(|| format!("parsing {}", path.display()))
}

fn cmd_run(args: RunArgs) -> Result<u8, Failure> {
    let mut scenario = load_scenario(&args.scenario).map_err(Failure::from_core)?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(path) = &args.fixed_graph {
        let g = read_graph(path)?;
        if g.node_count() != scenario.node_count() {
            return Err(Failure::config(format!(
                "{} has {} nodes, scenario has {}",
                path.display(),
                g.node_count(),
                scenario.node_count()
            )));
        }
        scenario.topology.fixed_edges = Some(g.edges().collect());
    }
    let agent = CommunicationAgent::for_scenario(&scenario).map_err(Failure::from_core)?;
    let mode = DecodeMode::from(args.mode);
    let runs = run_campaign_detailed(&scenario, args.periods, &agent, mode, Execution::Parallel)
        .map_err(Failure::from_core)?;

    output::write_run(&args.out, &scenario, mode, &runs)?;
    output::print_summary(&runs);

    if let Some(r) = runs.iter().find(|r| r.record.config_error) {
        return Err(Failure::config(r.record.error.clone().unwrap_or_default()));
    }
    if let Some(r) = runs.iter().find(|r| !r.record.is_unanimous()) {
        let why = r.record.error.clone().unwrap_or_else(|| "controllers did not reach a unanimous verdict".into());
        return Err(Failure {
            code: 2,
            message: format!("period {}: {why}", r.record.period.index),
        });
    }
    Ok(0)
}

fn parse_links(n: usize, text: &str) -> Result<LinkAttackSet, Failure> {
    let mut pairs = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (a, b) = item
            .split_once(['-', ':'])
            .ok_or_else(|| Failure::config(format!("attacked link {item:?} is not of the form a-b")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Failure::config(format!("attacked link {item:?}: {s:?} is not a node index")))
        };
        pairs.push((parse(a)?, parse(b)?));
    }
    LinkAttackSet::from_pairs(n, pairs).map_err(Failure::from_core)
}

fn cmd_graph(args: GraphArgs) -> Result<u8, Failure> {
    let links = parse_links(args.n, &args.attacked_links)?;
    let strategy = match args.strategy {
        StrategyArg::Preventive => Strategy::Preventive,
        StrategyArg::Responsive => Strategy::Responsive,
    };
    let agent = CommunicationAgent::new(strategy, args.f, args.seed);
    let g = agent.build_topology(args.n, &links, 0).map_err(Failure::from_core)?;
    let cert = vertex_connectivity(&g).map_err(Failure::from_core)?;
    output::write_graph(&args.out, &g, &cert, args.f, strategy, args.seed)?;
    println!(
        "{} nodes, {} edges, connectivity {} (required {})",
        g.node_count(),
        g.edge_count(),
        cert.kappa,
        2 * args.f + 1
    );
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8, Failure> {
    let text = fs::read_to_string(&args.weights)
        .with_context(|| format!("reading {}", args.weights.display()))?;
    let w = WeightMatrix::from_csv(&text).map_err(Failure::from_core)?;
    let k_max = args.k_max.unwrap_or_else(|| default_k_max(w.node_count()));
    match verify_rank_condition(&w, args.f, k_max, args.rank_threshold) {
        Ok(k) => {
            println!("rank condition holds for f = {}: smallest K = {k}", args.f);
            Ok(0)
        }
        Err(failure) => {
            println!("rank condition fails for f = {}: {failure}", args.f);
            let n = w.node_count();
            if 2 * args.f + 1 > n.saturating_sub(1) {
                println!(
                    "f = {} needs connectivity {}, a {n}-node graph has at most {}",
                    args.f,
                    2 * args.f + 1,
                    n.saturating_sub(1)
                );
            }
            if let Ok(k) = verify_identifiability(&w, args.f, k_max, args.rank_threshold) {
                println!("single fault sets of size {} are identifiable from K = {k}", args.f);
            }
            Ok(2)
        }
    }
}
