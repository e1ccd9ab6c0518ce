//! K-fold evaluation of estimated parent sets by held-out Gaussian log-likelihood.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci::{CiTester, Dataset};
use crate::discovery::{run_algorithm, Algorithm, DiscoveryConfig, MbConfig};
use crate::error::{Error, Result};
use crate::graph::{Mark, MixedGraph, TargetSpec};
use crate::metrics::EdgeStatus;
use crate::simgen::seeded_rng;
use crate::subsets::for_each_subset;

const STREAM_FOLDS: u64 = 5;

/// Residual variances below this are raised to it before taking logs.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Shuffles `0..n` and deals the rows round-robin into `k` folds. Each fold is
/// sorted; sizes differ by at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("cannot split {n} rows into {k} folds")));
    }
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut seeded_rng(seed, STREAM_FOLDS));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, r) in rows.into_iter().enumerate() {
        folds[pos % k].push(r);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParentMode {
    /// Directed parents only; bidirected edges count as undirected.
    Min,
    /// As many undirected edges oriented into the target as possible.
    Max,
}

impl ParentMode {
    pub fn name(self) -> &'static str {
        match self {
            ParentMode::Min => "min",
            ParentMode::Max => "max",
        }
    }
}

/// Nodes `v` with `v -> t` (circle marks read as in the metrics).
pub fn directed_parents(g: &MixedGraph, t: usize) -> BTreeSet<usize> {
    g.neighbors(t)
        .filter(|&v| EdgeStatus::of(g, v, t) == EdgeStatus::Forward)
        .collect()
}

fn unresolved_neighbors(g: &MixedGraph, t: usize) -> Vec<usize> {
    g.neighbors(t)
        .filter(|&v| matches!(EdgeStatus::of(g, v, t), EdgeStatus::Undirected | EdgeStatus::Bidirected))
        .collect()
}

fn orient_into(g: &mut MixedGraph, t: usize, from: &[usize]) {
    for &s in from {
        g.set_mark_at(s, t, Mark::Tail);
        g.set_mark_at(t, s, Mark::Arrow);
    }
}

/// True when two parents of the target are non-adjacent and at least one of them is in `added`.
fn new_collider(g: &MixedGraph, before: &BTreeSet<usize>, added: &[usize]) -> bool {
    added.iter().enumerate().any(|(x, &a)| {
        before.iter().any(|&b| !g.is_adjacent(a, b)) || added[x + 1..].iter().any(|&b| !g.is_adjacent(a, b))
    })
}

fn has_directed_cycle(g: &MixedGraph) -> bool {
    let mut d = MixedGraph::new(g.p());
    for (i, j, _, _) in g.edges() {
        match EdgeStatus::of(g, i, j) {
            EdgeStatus::Forward => d.add_directed(i, j),
            EdgeStatus::Backward => d.add_directed(j, i),
            _ => {}
        }
    }
    d.has_directed_cycle()
}

/// Largest set of undirected neighbors of `t` that can be oriented into `t`
/// without a new unshielded collider at `t` or a directed cycle, ties broken
/// lexicographically. `g` is updated with the chosen orientations and the
/// full parent set is returned.
pub fn orient_max_parents(g: &mut MixedGraph, t: usize) -> BTreeSet<usize> {
    let before = directed_parents(g, t);
    let cands = unresolved_neighbors(g, t);
    for size in (1..=cands.len()).rev() {
        let mut chosen = None;
        for_each_subset(&cands, size, |s| {
            if new_collider(g, &before, s) {
                return false;
            }
            let mut trial = g.clone();
            orient_into(&mut trial, t, s);
            if has_directed_cycle(&trial) {
                return false;
            }
            chosen = Some(s.to_vec());
            true
        });
        if let Some(s) = chosen {
            orient_into(g, t, &s);
            return directed_parents(g, t);
        }
    }
    before
}

/// [`orient_max_parents`] on a copy of `g`.
pub fn max_parent_set(g: &MixedGraph, t: usize) -> BTreeSet<usize> {
    orient_max_parents(&mut g.clone(), t)
}

/// Parent sets for every target in one output graph. In max mode targets are
/// processed in order on a single copy, so later choices see earlier ones.
pub fn parent_sets(g: &MixedGraph, targets: &TargetSpec, mode: ParentMode) -> BTreeMap<usize, BTreeSet<usize>> {
    let mut work = g.clone();
    targets
        .nodes()
        .iter()
        .map(|&t| {
            let pa = match mode {
                ParentMode::Min => directed_parents(g, t),
                ParentMode::Max => orient_max_parents(&mut work, t),
            };
            (t, pa)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Residual sum of squares over the number of rows.
    pub sigma2: f64,
}

/// Least squares of `y` on an intercept and the columns of `x`.
pub fn ols_fit(y: &[f64], x: &[Vec<f64>]) -> Result<OlsFit> {
    let n = y.len();
    if x.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch("predictor length differs from response".into()));
    }
    if n <= x.len() {
        return Err(Error::RankDeficient);
    }
    let design = DMatrix::from_fn(n, x.len() + 1, |r, c| if c == 0 { 1.0 } else { x[c - 1][r] });
    let yv = DVector::from_column_slice(y);
    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    if svd.singular_values.min() <= max_sv * 1e-12 {
        return Err(Error::RankDeficient);
    }
    let beta = svd
        .solve(&yv, 0.0)
        .map_err(|e| Error::InvalidQuery(e.to_string()))?;
    let resid = &yv - &design * &beta;
    Ok(OlsFit {
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        sigma2: resid.norm_squared() / n as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetModel {
    pub target: usize,
    pub parents: Vec<usize>,
    pub fit: OlsFit,
}

impl TargetModel {
    pub fn fit(train: &Dataset, target: usize, parents: &BTreeSet<usize>) -> Result<Self> {
        let x: Vec<Vec<f64>> = parents.iter().map(|&v| train.column(v)).collect();
        Ok(TargetModel {
            target,
            parents: parents.iter().copied().collect(),
            fit: ols_fit(&train.column(target), &x)?,
        })
    }

    fn rss(&self, test: &Dataset) -> f64 {
        let v = test.values();
        (0..test.n())
            .map(|r| {
                let pred = self.fit.intercept
                    + self
                        .parents
                        .iter()
                        .zip(&self.fit.coefficients)
                        .map(|(&c, b)| b * v[(r, c)])
                        .sum::<f64>();
                (v[(r, self.target)] - pred).powi(2)
            })
            .sum()
    }
}

/// Held-out log-likelihood normalised by row count and number of models:
/// `-(1/(n|T|)) Σ_m [(n/2) log(2π σ²_m) + RSS_m / (2σ²_m)]`.
pub fn test_loglik(test: &Dataset, models: &[TargetModel]) -> Result<f64> {
    if models.is_empty() {
        return Err(Error::InvalidParameter("no models to score".into()));
    }
    let n = test.n() as f64;
    let mut total = 0.0;
    for m in models {
        let s2 = m.fit.sigma2.max(VARIANCE_FLOOR);
        total += 0.5 * n * (2.0 * std::f64::consts::PI * s2).ln() + m.rss(test) / (2.0 * s2);
    }
    Ok(-total / (n * models.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvConfig {
    pub k: usize,
    pub seed: u64,
    pub modes: Vec<ParentMode>,
    pub algorithm: Algorithm,
    pub discovery: DiscoveryConfig,
    pub mb: MbConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            k: 10,
            seed: 0,
            modes: vec![ParentMode::Min, ParentMode::Max],
            algorithm: Algorithm::Cml,
            discovery: DiscoveryConfig::default(),
            mb: MbConfig::default(),
        }
    }
}

impl CvConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.k < 2 || self.k > n {
            return Err(Error::InvalidParameter(format!("fold count {} must lie in [2, {n}]", self.k)));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidParameter("no parent mode selected".into()));
        }
        self.discovery.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub fold: usize,
    pub targets: String,
    pub algorithm: Algorithm,
    pub mode: ParentMode,
    pub loglik: f64,
    pub models: Vec<TargetModel>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<Vec<usize>>,
    pub rows: Vec<CvRow>,
}

#[derive(Serialize)]
struct CvCsvRow<'a> {
    fold: usize,
    targets: &'a str,
    algorithm: &'a str,
    mode: &'a str,
    loglik: f64,
    parent_sets: String,
}

impl CvReport {
    /// One line per fold, target set and mode. `parent_sets` reads
    /// `t:p1 p2;t2:...` using column names.
    pub fn write_csv(&self, path: impl AsRef<Path>, names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        if self.rows.is_empty() {
            w.write_record(["fold", "targets", "algorithm", "mode", "loglik", "parent_sets"])?;
        }
        for r in &self.rows {
            let parent_sets = r
                .models
                .iter()
                .map(|m| {
                    let pa: Vec<&str> = m.parents.iter().map(|&v| names[v].as_str()).collect();
                    format!("{}:{}", names[m.target], pa.join(" "))
                })
                .collect::<Vec<_>>()
                .join(";");
            w.serialize(CvCsvRow {
                fold: r.fold,
                targets: &r.targets,
                algorithm: r.algorithm.name(),
                mode: r.mode.name(),
                loglik: r.loglik,
                parent_sets,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

fn run_fold(
    data: &Dataset,
    folds: &[Vec<usize>],
    j: usize,
    targets: &[TargetSpec],
    cfg: &CvConfig,
) -> Result<Vec<CvRow>> {
    let train_rows: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|&(x, _)| x != j)
        .flat_map(|(_, f)| f.iter().copied())
        .collect();
    let train = data.select_rows(&train_rows)?;
    let test = data.select_rows(&folds[j])?;
    let mut rows = Vec::new();
    for t in targets {
        let tester = CiTester::from_dataset(&train)?;
        let result = run_algorithm(cfg.algorithm, &tester, t, &cfg.mb, &cfg.discovery)?;
        for &mode in &cfg.modes {
            let models = parent_sets(&result.graph, t, mode)
                .iter()
                .map(|(&target, pa)| TargetModel::fit(&train, target, pa))
                .collect::<Result<Vec<_>>>()?;
            rows.push(CvRow {
                fold: j,
                targets: t.nodes().iter().map(|&v| data.names()[v].as_str()).collect::<Vec<_>>().join(","),
                algorithm: cfg.algorithm,
                mode,
                loglik: test_loglik(&test, &models)?,
                models,
            });
        }
    }
    Ok(rows)
}

/// Runs discovery on each fold's training rows, fits target models on the
/// parent sets of every mode and scores them on the held-out rows. Folds run
/// in parallel; rows come out in fold order.
pub fn run_cv(data: &Dataset, targets: &[TargetSpec], cfg: &CvConfig) -> Result<CvReport> {
    cfg.validate(data.n())?;
    let folds = kfold_split(data.n(), cfg.k, cfg.seed)?;
    let per_fold = (0..cfg.k)
        .into_par_iter()
        .map(|j| run_fold(data, &folds, j, targets, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(CvReport {
        folds,
        rows: per_fold.into_iter().flatten().collect(),
    })
}
