//! Experiment sweeps: config parsing, orchestration and report files.
//!
//! A config names a network (file or random), how data are produced (or the
//! oracle), the target sets, the algorithms and a grid of settings. Every
//! combination of replicate, sample size, target set, setting and algorithm is
//! one cell and yields one metrics row.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci::{CiTester, Dataset};
use crate::discovery::{run_algorithm, Algorithm, DiscoveryConfig, MbConfig, RuleSet};
use crate::error::{Error, Result};
use crate::graph::{Dag, TargetSpec};
use crate::metrics::MetricsReport;
use crate::simgen::{load_network, random_dag, sample_params, select_targets, simulate_data, SimConfig, TargetFilter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomNetwork {
    pub p: usize,
    pub expected_degree: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// Graph JSON file; relative paths resolve against the config file.
    pub path: Option<PathBuf>,
    pub random: Option<RandomNetwork>,
    /// Report label; defaults to the file stem or `random`.
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSpec {
    pub n: Vec<usize>,
    pub coef_lo: f64,
    pub coef_hi: f64,
    pub random_sign: bool,
    pub sd_lo: f64,
    pub sd_hi: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        let d = SimConfig::default();
        SimulationSpec {
            n: vec![d.n],
            coef_lo: d.coef_lo,
            coef_hi: d.coef_hi,
            random_sign: d.random_sign,
            sd_lo: d.sd_lo,
            sd_hi: d.sd_hi,
        }
    }
}

impl SimulationSpec {
    fn sim_config(&self, n: usize, seed: u64) -> SimConfig {
        SimConfig {
            n,
            coef_lo: self.coef_lo,
            coef_hi: self.coef_hi,
            random_sign: self.random_sign,
            sd_lo: self.sd_lo,
            sd_hi: self.sd_hi,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSelection {
    pub sizes: Vec<usize>,
    pub count: usize,
    #[serde(default)]
    pub filter: TargetFilter,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsSpec {
    /// Comma-separated node names (or 0-based indices), one string per set.
    #[serde(default)]
    pub sets: Vec<String>,
    pub random: Option<TargetSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SettingsGrid {
    pub alpha_mb: Vec<f64>,
    pub alpha_skel: Vec<f64>,
    pub lmax: Vec<usize>,
    pub rules: RuleSet,
}

impl Default for SettingsGrid {
    fn default() -> Self {
        let d = DiscoveryConfig::default();
        SettingsGrid {
            alpha_mb: vec![MbConfig::default().alpha],
            alpha_skel: vec![d.alpha_skel],
            lmax: vec![d.lmax],
            rules: RuleSet::default(),
        }
    }
}

/// One point of the settings grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub alpha_mb: f64,
    pub alpha_skel: f64,
    pub lmax: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkSpec,
    #[serde(default)]
    pub simulation: SimulationSpec,
    pub targets: TargetsSpec,
    pub algorithms: Vec<Algorithm>,
    #[serde(default)]
    pub settings: SettingsGrid,
    /// Skip simulation and answer tests from the true graph.
    #[serde(default)]
    pub oracle: bool,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn one() -> usize {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// Line (1-based) of the first `key =` assignment in `text`, or 1.
fn line_of(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            l.trim_start()
                .strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map_or(1, |i| i + 1)
}

impl ExperimentConfig {
    /// Parses and validates TOML text. Errors carry the offending line.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(1, |s| text[..s.start].matches('\n').count() + 1),
            message: e.message().to_string(),
        })?;
        cfg.validate().map_err(|(key, message)| Error::Config {
            line: line_of(text, key),
            message,
        })?;
        Ok(cfg)
    }

    /// Reads a config file; a relative network path is resolved against the file's directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        if let (Some(p), Some(dir)) = (&cfg.network.path, path.parent()) {
            if p.is_relative() {
                cfg.network.path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    /// Returns the offending key and a message.
    fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.algorithms.is_empty() {
            return Err(("algorithms", "at least one algorithm is required".into()));
        }
        match (&self.network.path, &self.network.random) {
            (Some(_), Some(_)) => return Err(("path", "give either a network path or a random network, not both".into())),
            (None, None) => return Err(("network", "a network path or random network is required".into())),
            _ => {}
        }
        if let Some(r) = &self.network.random {
            if r.p == 0 || !(r.expected_degree >= 0.0) {
                return Err(("p", "random network needs p >= 1 and expected_degree >= 0".into()));
            }
        }
        if self.targets.sets.is_empty() == self.targets.random.is_none() {
            return Err(("targets", "give either explicit target sets or a random selection".into()));
        }
        for (key, list) in [("alpha_mb", &self.settings.alpha_mb), ("alpha_skel", &self.settings.alpha_skel)] {
            if list.is_empty() {
                return Err((key, format!("{key} must list at least one value")));
            }
            if let Some(a) = list.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
                return Err((key, format!("{key} value {a} outside (0, 1)")));
            }
        }
        if self.settings.lmax.is_empty() {
            return Err(("lmax", "lmax must list at least one value".into()));
        }
        if self.replicates == 0 {
            return Err(("replicates", "replicates must be at least 1".into()));
        }
        if !self.oracle {
            if self.simulation.n.is_empty() || self.simulation.n.contains(&0) {
                return Err(("n", "sample sizes must be positive".into()));
            }
            self.simulation
                .sim_config(1, 0)
                .validate()
                .map_err(|e| ("simulation", e.to_string()))?;
        }
        Ok(())
    }

    /// The settings grid in `alpha_mb`, `alpha_skel`, `lmax` order.
    pub fn grid(&self) -> Vec<Setting> {
        let s = &self.settings;
        let mut out = Vec::new();
        for &alpha_mb in &s.alpha_mb {
            for &alpha_skel in &s.alpha_skel {
                for &lmax in &s.lmax {
                    out.push(Setting { alpha_mb, alpha_skel, lmax });
                }
            }
        }
        out
    }

    /// Seed of replicate `r`; replicate 0 uses the base seed.
    pub fn replicate_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn network_name(&self) -> String {
        if let Some(n) = &self.network.name {
            return n.clone();
        }
        match &self.network.path {
            Some(p) => p.file_stem().map_or("network".into(), |s| s.to_string_lossy().into_owned()),
            None => "random".into(),
        }
    }

    pub fn load_network(&self) -> Result<Dag> {
        match (&self.network.path, &self.network.random) {
            (Some(p), _) => load_network(p),
            (None, Some(r)) => random_dag(r.p, r.expected_degree, self.seed),
            (None, None) => Err(Error::InvalidParameter("no network given".into())),
        }
    }

    pub fn target_sets(&self, g: &Dag) -> Result<Vec<TargetSpec>> {
        match &self.targets.random {
            Some(sel) => select_targets(g, &sel.sizes, sel.count, &sel.filter, self.seed),
            None => self.targets.sets.iter().map(|s| TargetSpec::parse(s, g)).collect(),
        }
    }
}

/// One cell's outcome. Metric fields are empty when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub network: String,
    pub targets: String,
    pub target_size: usize,
    pub algorithm: Algorithm,
    pub replicate: usize,
    pub seed: u64,
    /// 0 under the oracle.
    pub n: usize,
    pub alpha_mb: f64,
    pub alpha_skel: f64,
    pub lmax: usize,
    pub overall_f1: Option<f64>,
    pub shd: Option<usize>,
    pub pra_f1_loose: Option<f64>,
    pub pra_f1_strict: Option<f64>,
    pub bne_count: Option<usize>,
    pub ci_tests: Option<u64>,
    pub ci_tests_mb: Option<u64>,
    pub singular_tests: Option<u64>,
    pub flags: Option<usize>,
    pub error: String,
}

/// Wall time of one cell's discovery call, Markov blanket recovery included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub cell: usize,
    pub algorithm: Algorithm,
    pub targets: String,
    pub replicate: usize,
    pub n: usize,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricsRow>,
    pub timings: Vec<TimingRow>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub network: String,
    pub network_nodes: usize,
    pub seed: u64,
    pub replicate_seeds: Vec<u64>,
    pub oracle: bool,
    pub cells: usize,
    pub failed_cells: usize,
    /// Content hash of every simulated dataset, keyed `r<replicate>_n<n>`.
    pub data_hashes: BTreeMap<String, String>,
    pub total_runtime_ms: f64,
}

struct Cell {
    replicate: usize,
    n: usize,
    target: usize,
    setting: Setting,
    algorithm: Algorithm,
}

/// Runs every cell of the sweep on a pool of `cfg.threads` workers. Rows come
/// back in cell order whatever the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    pool.install(|| sweep(cfg))
}

fn sweep(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let started = Instant::now();
    let g = cfg.load_network()?;
    let targets = cfg.target_sets(&g)?;
    let sizes: Vec<usize> = if cfg.oracle { vec![0] } else { cfg.simulation.n.clone() };
    let seeds: Vec<u64> = (0..cfg.replicates).map(|r| cfg.replicate_seed(r)).collect();
    let reps = if cfg.oracle { 1 } else { cfg.replicates };

    let mut datasets: BTreeMap<(usize, usize), Dataset> = BTreeMap::new();
    if !cfg.oracle {
        let keys: Vec<(usize, usize)> = (0..reps).flat_map(|r| sizes.iter().map(move |&n| (r, n))).collect();
        let sims = keys
            .par_iter()
            .map(|&(r, n)| {
                let params = sample_params(&g, &cfg.simulation.sim_config(n, seeds[r]))?;
                simulate_data(&g, &params, n, seeds[r])
            })
            .collect::<Result<Vec<_>>>()?;
        datasets = keys.into_iter().zip(sims).collect();
    }

    let mut cells = Vec::new();
    for replicate in 0..reps {
        for &n in &sizes {
            for target in 0..targets.len() {
                for setting in cfg.grid() {
                    for &algorithm in &cfg.algorithms {
                        cells.push(Cell { replicate, n, target, setting, algorithm });
                    }
                }
            }
        }
    }

    let network = cfg.network_name();
    let results: Vec<(MetricsRow, Option<f64>)> = cells
        .par_iter()
        .map(|c| {
            let t = &targets[c.target];
            let mut row = MetricsRow {
                network: network.clone(),
                targets: t.label(&g),
                target_size: t.len(),
                algorithm: c.algorithm,
                replicate: c.replicate,
                seed: seeds[c.replicate],
                n: c.n,
                alpha_mb: c.setting.alpha_mb,
                alpha_skel: c.setting.alpha_skel,
                lmax: c.setting.lmax,
                overall_f1: None,
                shd: None,
                pra_f1_loose: None,
                pra_f1_strict: None,
                bne_count: None,
                ci_tests: None,
                ci_tests_mb: None,
                singular_tests: None,
                flags: None,
                error: String::new(),
            };
            match run_cell(cfg, &g, t, c, datasets.get(&(c.replicate, c.n))) {
                Ok((report, mb_tests, singular, flags, ms)) => {
                    row.overall_f1 = Some(report.overall_f1);
                    row.shd = Some(report.shd);
                    row.pra_f1_loose = Some(report.pra_f1_loose);
                    row.pra_f1_strict = Some(report.pra_f1_strict);
                    row.bne_count = Some(report.bne_count);
                    row.ci_tests = Some(report.ci_tests);
                    row.ci_tests_mb = Some(mb_tests);
                    row.singular_tests = Some(singular);
                    row.flags = Some(flags);
                    (row, Some(ms))
                }
                Err(e) => {
                    row.error = e.to_string();
                    (row, None)
                }
            }
        })
        .collect();

    let mut out = ExperimentOutput::default();
    for (cell, (row, ms)) in results.into_iter().enumerate() {
        if let Some(ms) = ms {
            out.timings.push(TimingRow {
                cell,
                algorithm: row.algorithm,
                targets: row.targets.clone(),
                replicate: row.replicate,
                n: row.n,
                runtime_ms: ms,
            });
        }
        out.rows.push(row);
    }
    out.manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        network,
        network_nodes: g.p(),
        seed: cfg.seed,
        replicate_seeds: seeds[..reps].to_vec(),
        oracle: cfg.oracle,
        cells: out.rows.len(),
        failed_cells: out.rows.iter().filter(|r| !r.error.is_empty()).count(),
        data_hashes: datasets
            .iter()
            .map(|(&(r, n), d)| (format!("r{r}_n{n}"), d.content_hash()))
            .collect(),
        total_runtime_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    Ok(out)
}

fn run_cell(
    cfg: &ExperimentConfig,
    g: &Dag,
    t: &TargetSpec,
    c: &Cell,
    data: Option<&Dataset>,
) -> Result<(MetricsReport, u64, u64, usize, f64)> {
    let tester = match data {
        Some(d) => CiTester::from_dataset(d)?,
        None => CiTester::oracle(g.clone()),
    };
    let mb = MbConfig { alpha: c.setting.alpha_mb, lmax: c.setting.lmax };
    let dc = DiscoveryConfig {
        alpha_skel: c.setting.alpha_skel,
        lmax: c.setting.lmax,
        rules: cfg.settings.rules,
        seed: cfg.seed,
    };
    let result = run_algorithm(c.algorithm, &tester, t, &mb, &dc)?;
    let report = MetricsReport::evaluate(&result, g, t)?;
    let ms = result.runtime_ms();
    Ok((report, result.ci_tests_mb, result.singular_tests, result.flags.len(), ms))
}

const METRIC_COLUMNS: [&str; 20] = [
    "network", "targets", "target_size", "algorithm", "replicate", "seed", "n", "alpha_mb",
    "alpha_skel", "lmax", "overall_f1", "shd", "pra_f1_loose", "pra_f1_strict", "bne_count",
    "ci_tests", "ci_tests_mb", "singular_tests", "flags", "error",
];

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_path(path)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

/// Medians over successful cells grouped by network, target size and algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub network: String,
    pub target_size: usize,
    pub algorithm: Algorithm,
    pub cells: usize,
    pub median_overall_f1: Option<f64>,
    pub median_shd: Option<f64>,
    pub median_pra_f1_loose: Option<f64>,
    pub median_pra_f1_strict: Option<f64>,
    pub median_bne_count: Option<f64>,
    pub median_ci_tests: Option<f64>,
}

pub fn summarize(rows: &[MetricsRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, usize, Algorithm), Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_empty()) {
        groups.entry((r.network.clone(), r.target_size, r.algorithm)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((network, target_size, algorithm), g)| {
            let col = |f: &dyn Fn(&MetricsRow) -> Option<f64>| median(g.iter().filter_map(|r| f(r)).collect());
            SummaryRow {
                network,
                target_size,
                algorithm,
                cells: g.len(),
                median_overall_f1: col(&|r| r.overall_f1),
                median_shd: col(&|r| r.shd.map(|x| x as f64)),
                median_pra_f1_loose: col(&|r| r.pra_f1_loose),
                median_pra_f1_strict: col(&|r| r.pra_f1_strict),
                median_bne_count: col(&|r| r.bne_count.map(|x| x as f64)),
                median_ci_tests: col(&|r| r.ci_tests.map(|x| x as f64)),
            }
        })
        .collect()
}

/// Writes `metrics.csv`, `metrics.json`, `summary.csv`, `timings.csv` and
/// `manifest.json` into `dir`. The first three depend only on config and
/// seeds; timings and the manifest's runtime do not.
pub fn emit_report(out: &ExperimentOutput, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = ["metrics.csv", "metrics.json", "summary.csv", "timings.csv", "manifest.json"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    write_rows(&paths[0], &METRIC_COLUMNS, &out.rows)?;
    std::fs::write(&paths[1], serde_json::to_string_pretty(&out.rows)? + "\n")?;
    write_rows(
        &paths[2],
        &[
            "network", "target_size", "algorithm", "cells", "median_overall_f1", "median_shd",
            "median_pra_f1_loose", "median_pra_f1_strict", "median_bne_count", "median_ci_tests",
        ],
        &summarize(&out.rows),
    )?;
    write_rows(&paths[3], &["cell", "algorithm", "targets", "replicate", "n", "runtime_ms"], &out.timings)?;
    std::fs::write(&paths[4], serde_json::to_string_pretty(&out.manifest)? + "\n")?;
    Ok(paths)
}
