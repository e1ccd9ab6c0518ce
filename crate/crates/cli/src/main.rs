use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use cml::ci::{CiTester, Dataset};
use cml::cveval::{run_cv, CvConfig, ParentMode};
use cml::discovery::{run_algorithm, Algorithm, DiscoveryConfig, DiscoveryResult, MbConfig};
use cml::experiment::{
    emit_report, run_experiment, ExperimentConfig, ExperimentOutput, NetworkSpec, RandomNetwork, SettingsGrid,
    SimulationSpec, TargetSelection, TargetsSpec,
};
use cml::graph::{Dag, MixedGraph, TargetSpec};
use cml::metrics::MetricsReport;
use cml::simgen::{load_network, sample_params, simulate_data, SimConfig, TargetFilter};

#[derive(Parser)]
#[command(name = "cml", version, about = "Local causal structure learning around target nodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample data from a linear Gaussian SEM on a network.
    Simulate(SimulateArgs),
    /// Learn structure from a data file.
    Discover(DiscoverArgs),
    /// Learn structure with a perfect independence oracle.
    Oracle(OracleArgs),
    /// Score a saved result against the true network.
    Metrics(MetricsArgs),
    /// Cross-validate estimated parent sets on a data file.
    Cv(CvArgs),
    /// Run a sweep from a config file, or the CML-versus-PC cost comparison.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write the drawn coefficients and noise scales as JSON.
    #[arg(long)]
    params_out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct AlgoArgs {
    /// Comma-separated node names or 0-based indices.
    #[arg(long)]
    targets: String,
    /// Comma-separated subset of cml, snl, pc.
    #[arg(long, default_value = "cml")]
    alg: String,
    #[arg(long, default_value_t = 0.01)]
    alpha_skel: f64,
    #[arg(long, default_value_t = 0.01)]
    alpha_mb: f64,
    #[arg(long, default_value_t = 3)]
    lmax: usize,
}

impl AlgoArgs {
    fn algorithms(&self) -> Result<Vec<Algorithm>> {
        self.alg
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| Ok(Algorithm::parse(s)?))
            .collect()
    }

    fn configs(&self) -> (MbConfig, DiscoveryConfig) {
        (
            MbConfig { alpha: self.alpha_mb, lmax: self.lmax },
            DiscoveryConfig { alpha_skel: self.alpha_skel, lmax: self.lmax, ..DiscoveryConfig::default() },
        )
    }
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    algo: AlgoArgs,
    #[arg(long)]
    data: PathBuf,
    /// True network; when given, metrics are written next to each result.
    #[arg(long)]
    network: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    network: PathBuf,
    #[command(flatten)]
    algo: AlgoArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    targets: String,
    /// Result JSON written by discover or oracle.
    #[arg(long)]
    result: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    data: PathBuf,
    /// Target set; repeat for several.
    #[arg(long = "targets", required = true)]
    targets: Vec<String>,
    #[arg(long, default_value = "cml")]
    alg: String,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    alpha_skel: f64,
    #[arg(long, default_value_t = 0.01)]
    alpha_mb: f64,
    #[arg(long, default_value_t = 3)]
    lmax: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Sweep config (TOML). When given, the flags below are ignored.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    p: usize,
    #[arg(long, default_value_t = 2.0)]
    degree: f64,
    #[arg(long, default_value_t = 2)]
    target_size: usize,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => simulate(a),
        Command::Discover(a) => discover(a),
        Command::Oracle(a) => oracle(a),
        Command::Metrics(a) => metrics(a),
        Command::Cv(a) => cv(a),
        Command::Bench(a) => bench(a),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let g = load_network(&a.network).with_context(|| format!("loading {}", a.network.display()))?;
    let cfg = SimConfig { n: a.n, seed: a.seed, ..SimConfig::default() };
    let params = sample_params(&g, &cfg)?;
    let data = simulate_data(&g, &params, a.n, a.seed)?;
    data.write_csv(&a.out)?;
    if let Some(p) = a.params_out {
        std::fs::write(p, serde_json::to_string_pretty(&params)? + "\n")?;
    }
    eprintln!("wrote {} rows x {} columns to {}", data.n(), data.p(), a.out.display());
    Ok(())
}

fn write_results(
    out: &Path,
    tester: &CiTester,
    truth: Option<&Dag>,
    names_graph: &MixedGraph,
    algo: &AlgoArgs,
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let targets = TargetSpec::parse(&algo.targets, names_graph)?;
    let (mb, dc) = algo.configs();
    for alg in algo.algorithms()? {
        let result = run_algorithm(alg, tester, &targets, &mb, &dc)?;
        let path = out.join(format!("{}.json", alg.name()));
        result.write_json(&path, false)?;
        if let Some(nbs) = &result.neighbor_sets {
            nbs.write_json(out.join(format!("{}_neighbors.json", alg.name())))?;
        }
        let mut line = format!(
            "{}: {} edges, {} tests ({} for blankets), {:.1} ms",
            alg.name(),
            result.graph.n_edges(),
            result.ci_tests,
            result.ci_tests_mb,
            result.runtime_ms()
        );
        if let Some(g) = truth {
            let m = MetricsReport::evaluate(&result, g, &targets)?;
            std::fs::write(
                out.join(format!("{}_metrics.json", alg.name())),
                serde_json::to_string_pretty(&m)? + "\n",
            )?;
            line += &format!(", F1 {:.3}, SHD {}, BNE {}", m.overall_f1, m.shd, m.bne_count);
        }
        println!("{line}");
    }
    Ok(())
}

fn discover(a: DiscoverArgs) -> Result<()> {
    let data = Dataset::read_csv(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    let truth = a.network.as_ref().map(load_network).transpose()?;
    let mut names = MixedGraph::new(data.p());
    names.set_names(data.names().to_vec())?;
    let tester = CiTester::from_dataset(&data)?;
    write_results(&a.out, &tester, truth.as_ref(), &names, &a.algo)
}

fn oracle(a: OracleArgs) -> Result<()> {
    let g = load_network(&a.network).with_context(|| format!("loading {}", a.network.display()))?;
    let tester = CiTester::oracle(g.clone());
    write_results(&a.out, &tester, Some(&g), &g, &a.algo)
}

/// Reads the graph part of a result file.
fn read_result_graph(path: &Path) -> Result<(MixedGraph, Option<Algorithm>)> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let mut graph = serde_json::Map::new();
    for key in ["p", "names", "edges"] {
        if let Some(x) = v.get(key) {
            graph.insert(key.into(), x.clone());
        }
    }
    let g = MixedGraph::from_json(&serde_json::Value::Object(graph).to_string())?;
    let alg = v.get("algorithm").and_then(|a| a.as_str()).map(Algorithm::parse).transpose()?;
    Ok((g, alg))
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let g = load_network(&a.network)?;
    let targets = TargetSpec::parse(&a.targets, &g)?;
    let (graph, alg) = read_result_graph(&a.result)?;
    if graph.p() != g.p() {
        bail!("result has {} nodes but the network has {}", graph.p(), g.p());
    }
    let result = DiscoveryResult {
        algorithm: alg.unwrap_or(Algorithm::Cml),
        graph,
        nodes: (0..g.p()).collect(),
        sepsets: Default::default(),
        neighbor_sets: None,
        ci_tests: 0,
        ci_tests_mb: 0,
        singular_tests: 0,
        flags: Vec::new(),
        timing_ms: Default::default(),
    };
    let m = MetricsReport::evaluate(&result, &g, &targets)?;
    println!("{}", serde_json::to_string_pretty(&m)?);
    Ok(())
}

fn cv(a: CvArgs) -> Result<()> {
    let data = Dataset::read_csv(&a.data)?;
    let mut names = MixedGraph::new(data.p());
    names.set_names(data.names().to_vec())?;
    let targets = a
        .targets
        .iter()
        .map(|t| TargetSpec::parse(t, &names))
        .collect::<cml::Result<Vec<_>>>()?;
    let cfg = CvConfig {
        k: a.k,
        seed: a.seed,
        modes: vec![ParentMode::Min, ParentMode::Max],
        algorithm: Algorithm::parse(&a.alg)?,
        discovery: DiscoveryConfig { alpha_skel: a.alpha_skel, lmax: a.lmax, ..DiscoveryConfig::default() },
        mb: MbConfig { alpha: a.alpha_mb, lmax: a.lmax },
    };
    let report = run_cv(&data, &targets, &cfg)?;
    std::fs::create_dir_all(&a.out)?;
    report.write_csv(a.out.join("cv.csv"), data.names())?;
    report.write_json(a.out.join("cv.json"))?;
    for mode in &cfg.modes {
        let ll: Vec<f64> = report.rows.iter().filter(|r| r.mode == *mode).map(|r| r.loglik).collect();
        println!("{}: mean held-out loglik {:.4} over {} rows", mode.name(), ll.iter().sum::<f64>() / ll.len() as f64, ll.len());
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let cfg = match &a.config {
        Some(path) => ExperimentConfig::read(path)?,
        None => bench_config(&a)?,
    };
    if a.config.is_some() {
        let out_dir = cfg.output_dir.clone();
        let out = run_experiment(&cfg)?;
        emit_report(&out, &out_dir)?;
        println!("{} cells ({} failed) written to {}", out.rows.len(), out.manifest.failed_cells, out_dir.display());
        return Ok(());
    }
    // One sweep per seed: the network itself changes with the seed.
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    println!("seed  cml_tests  pc_tests  ratio  cml_ms  pc_ms");
    for seed in 0..a.seeds {
        let c = ExperimentConfig { seed, ..cfg.clone() };
        let out = run_experiment(&c)?;
        let by = |alg| out.rows.iter().position(|r| r.algorithm == alg).expect("both algorithms ran");
        let (ci, pi) = (by(Algorithm::Cml), by(Algorithm::Pc));
        let tests = |i: usize| out.rows[i].ci_tests.unwrap_or(0);
        let ms = |i: usize| out.timings.iter().find(|t| t.cell == i).map_or(f64::NAN, |t| t.runtime_ms);
        println!(
            "{seed:>4}  {:>9}  {:>8}  {:>5.3}  {:>6.1}  {:>5.1}",
            tests(ci),
            tests(pi),
            tests(ci) as f64 / tests(pi).max(1) as f64,
            ms(ci),
            ms(pi)
        );
        rows.extend(out.rows.clone());
        timings.extend(out.timings.clone());
    }
    if let Some(dir) = &a.out {
        let out = ExperimentOutput { rows, timings, manifest: Default::default() };
        emit_report(&out, dir)?;
    }
    Ok(())
}

fn bench_config(a: &BenchArgs) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig {
        network: NetworkSpec {
            path: None,
            random: Some(RandomNetwork { p: a.p, expected_degree: a.degree }),
            name: None,
        },
        simulation: SimulationSpec { n: vec![a.n], ..SimulationSpec::default() },
        targets: TargetsSpec {
            sets: Vec::new(),
            random: Some(TargetSelection { sizes: vec![a.target_size], count: 1, filter: TargetFilter::open() }),
        },
        algorithms: vec![Algorithm::Cml, Algorithm::Pc],
        settings: SettingsGrid::default(),
        oracle: false,
        replicates: 1,
        seed: 0,
        threads: a.threads,
        output_dir: a.out.clone().unwrap_or_else(|| PathBuf::from("results")),
    })
}
