//! Gaussian linear SEM simulation on a known DAG, plus random DAGs and
//! target-set selection.
//!
//! All randomness comes from ChaCha8 seeded with a `u64`; each kind of draw
//! uses its own ChaCha stream so that, for instance, changing `n` never
//! changes the sampled coefficients.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::ci::{Covariance, Dataset};
use crate::error::{Error, Result};
use crate::graph::{cpdag, neighborhoods, Dag, MixedGraph, TargetSpec};

const STREAM_DAG: u64 = 1;
const STREAM_PARAMS: u64 = 2;
const STREAM_DATA: u64 = 3;
const STREAM_TARGETS: u64 = 4;

/// Seeded generator on a fixed stream.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Reads a network in graph JSON form; every edge must be directed and acyclic.
pub fn load_network(path: impl AsRef<Path>) -> Result<Dag> {
    network_from_json(&std::fs::read_to_string(path)?)
}

pub fn network_from_json(text: &str) -> Result<Dag> {
    let g = MixedGraph::from_json(text)?;
    Dag::new(g)
}

/// Random DAG: a uniform random order, and each forward pair joined with
/// probability `expected_degree / (p - 1)` (capped at 1).
pub fn random_dag(p: usize, expected_degree: f64, seed: u64) -> Result<Dag> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be at least 1".into()));
    }
    if !(expected_degree >= 0.0) {
        return Err(Error::InvalidParameter("expected degree must be non-negative".into()));
    }
    let mut rng = seeded_rng(seed, STREAM_DAG);
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(&mut rng);
    let prob = if p > 1 {
        (expected_degree / (p - 1) as f64).min(1.0)
    } else {
        0.0
    };
    let mut edges = Vec::new();
    for a in 0..p {
        for b in a + 1..p {
            if rng.random::<f64>() < prob {
                edges.push((order[a], order[b]));
            }
        }
    }
    Dag::from_edges(p, &edges)
}

/// Sampling settings. Defaults follow the usual simulation ranges:
/// `|beta| ~ U(0.4, 0.75)` with a random sign, `sigma ~ U(0.1, 0.5)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub n: usize,
    pub coef_lo: f64,
    pub coef_hi: f64,
    pub random_sign: bool,
    pub sd_lo: f64,
    pub sd_hi: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 1000,
            coef_lo: 0.4,
            coef_hi: 0.75,
            random_sign: true,
            sd_lo: 0.1,
            sd_hi: 0.5,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi;
        if !ok(self.coef_lo, self.coef_hi) {
            return Err(Error::InvalidParameter(format!(
                "coefficient range ({}, {}) must satisfy 0 < lo <= hi",
                self.coef_lo, self.coef_hi
            )));
        }
        if !ok(self.sd_lo, self.sd_hi) {
            return Err(Error::InvalidParameter(format!(
                "sd range ({}, {}) must satisfy 0 < lo <= hi",
                self.sd_lo, self.sd_hi
            )));
        }
        Ok(())
    }
}

/// Edge coefficients and noise standard deviations of a linear SEM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemParams {
    pub p: usize,
    /// `(from, to, beta)`, sorted by `(from, to)`.
    pub coefficients: Vec<(usize, usize, f64)>,
    pub sigma: Vec<f64>,
}

impl SemParams {
    pub fn beta(&self, from: usize, to: usize) -> f64 {
        self.coefficients
            .iter()
            .find(|&&(a, b, _)| a == from && b == to)
            .map_or(0.0, |&(_, _, v)| v)
    }

    /// `B[(i, j)] = beta_ij` for every edge `i -> j`.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.p, self.p);
        for &(i, j, v) in &self.coefficients {
            b[(i, j)] = v;
        }
        b
    }

    fn check_against(&self, g: &Dag) -> Result<()> {
        if self.p != g.p() || self.sigma.len() != g.p() {
            return Err(Error::DimensionMismatch(format!(
                "parameters for {} nodes, graph has {}",
                self.p,
                g.p()
            )));
        }
        if self.coefficients.len() != g.n_edges()
            || self.coefficients.iter().any(|&(i, j, _)| !g.is_directed(i, j))
        {
            return Err(Error::DimensionMismatch(
                "coefficients do not match the graph's edges".into(),
            ));
        }
        Ok(())
    }
}

fn directed_edges(g: &Dag) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .map(|(i, j, _, _)| if g.is_directed(i, j) { (i, j) } else { (j, i) })
        .collect();
    out.sort_unstable();
    out
}

/// Draws coefficients (edges in `(from, to)` order, magnitude then sign) and
/// then one noise sd per node in index order.
pub fn sample_params(g: &Dag, cfg: &SimConfig) -> Result<SemParams> {
    cfg.validate()?;
    let mut rng = seeded_rng(cfg.seed, STREAM_PARAMS);
    let coef = Uniform::new_inclusive(cfg.coef_lo, cfg.coef_hi)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let sd = Uniform::new_inclusive(cfg.sd_lo, cfg.sd_hi)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut coefficients = Vec::with_capacity(g.n_edges());
    for (i, j) in directed_edges(g) {
        let mut v = coef.sample(&mut rng);
        if cfg.random_sign && rng.random::<bool>() {
            v = -v;
        }
        coefficients.push((i, j, v));
    }
    let sigma = (0..g.p()).map(|_| sd.sample(&mut rng)).collect();
    Ok(SemParams {
        p: g.p(),
        coefficients,
        sigma,
    })
}

/// `n` samples from `X_j = sum_i beta_ij X_i + sigma_j * Z_j`, filled in
/// topological order with all noise for one node drawn before the next.
pub fn simulate_data(g: &Dag, params: &SemParams, n: usize, seed: u64) -> Result<Dataset> {
    params.check_against(g)?;
    if n == 0 {
        return Err(Error::TooFewSamples(0));
    }
    let p = g.p();
    let mut rng = seeded_rng(seed, STREAM_DATA);
    let mut x = DMatrix::<f64>::zeros(n, p);
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    for &(i, j, v) in &params.coefficients {
        incoming[j].push((i, v));
    }
    for &j in g.topological_order() {
        for r in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let mut v = params.sigma[j] * z;
            for &(i, b) in &incoming[j] {
                v += b * x[(r, i)];
            }
            x[(r, j)] = v;
        }
    }
    let names = (0..p).map(|i| g.name(i)).collect();
    Dataset::new(names, x)
}

/// Population covariance `(I - B)^-T diag(sigma^2) (I - B)^-1`.
///
/// The returned matrix carries `n = 0`: it is exact, not estimated.
pub fn implied_covariance(g: &Dag, params: &SemParams) -> Result<Covariance> {
    params.check_against(g)?;
    let p = g.p();
    let a = DMatrix::<f64>::identity(p, p) - params.coefficient_matrix();
    let inv = a.try_inverse().ok_or(Error::RankDeficient)?;
    let omega = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        p,
        params.sigma.iter().map(|s| s * s),
    ));
    let mut sigma = inv.transpose() * omega * inv;
    for i in 0..p {
        for j in 0..i {
            sigma[(i, j)] = sigma[(j, i)];
        }
    }
    Covariance::from_matrix(&sigma, 0)
}

/// Admission bounds (inclusive) on the CPDAG subgraph over a target set's
/// true neighborhoods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetFilter {
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub min_edges: usize,
    pub max_edges: usize,
    pub max_attempts: usize,
}

impl Default for TargetFilter {
    fn default() -> Self {
        TargetFilter {
            min_nodes: 8,
            max_nodes: 20,
            min_edges: 3,
            max_edges: 20,
            max_attempts: 10_000,
        }
    }
}

impl TargetFilter {
    /// Admits everything.
    pub fn open() -> Self {
        TargetFilter {
            min_nodes: 0,
            max_nodes: usize::MAX,
            min_edges: 0,
            max_edges: usize::MAX,
            ..TargetFilter::default()
        }
    }
}

/// Node and edge count of the CPDAG of `g` restricted to the union of true
/// neighborhoods of `t`.
pub fn truth_subgraph_size(cp: &MixedGraph, g: &Dag, t: &TargetSpec) -> Result<(usize, usize)> {
    let union: BTreeSet<usize> = neighborhoods(g, t)?.into_iter().flatten().collect();
    Ok((union.len(), cp.restrict(&union).n_edges()))
}

/// Draws `count` distinct admissible target sets for every size in `sizes`.
/// Sets are returned grouped by size, in draw order.
pub fn select_targets(
    g: &Dag,
    sizes: &[usize],
    count: usize,
    filter: &TargetFilter,
    seed: u64,
) -> Result<Vec<TargetSpec>> {
    let p = g.p();
    let cp = cpdag(g);
    let mut rng = seeded_rng(seed, STREAM_TARGETS);
    let mut out = Vec::new();
    for &k in sizes {
        if k == 0 || k > p {
            return Err(Error::InvalidTargets(format!("cannot draw {k} targets from {p} nodes")));
        }
        let mut chosen: Vec<TargetSpec> = Vec::new();
        let mut attempts = 0;
        while chosen.len() < count {
            if attempts == filter.max_attempts {
                return Err(Error::NoAdmissibleTargets { attempts });
            }
            attempts += 1;
            let t = TargetSpec::new(rand::seq::index::sample(&mut rng, p, k), p)?;
            if chosen.contains(&t) {
                continue;
            }
            let (nodes, edges) = truth_subgraph_size(&cp, g, &t)?;
            if (filter.min_nodes..=filter.max_nodes).contains(&nodes)
                && (filter.min_edges..=filter.max_edges).contains(&edges)
            {
                chosen.push(t);
            }
        }
        out.extend(chosen);
    }
    Ok(out)
}
