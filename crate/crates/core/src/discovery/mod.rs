//! Local structure discovery around target nodes (CML), with the
//! single-neighborhood (SNL) and global PC baselines.
//!
//! CML: estimate neighbor sets, learn one skeleton over the union `N` of all
//! neighborhoods (phase 1), prune within-neighborhood edges with tests drawn
//! from first-order neighbor sets (phase 2), then orient with R0, the FCI
//! rules and finally the neighborhood rules.

mod rules;
mod skeleton;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use rules::{
    apply_fci_rules, apply_rn, discriminating_path, orient_v_structures, rule_r1, rule_r10,
    rule_r2, rule_r3, rule_r4, rule_r8, rule_r9, RuleSet,
};

use crate::ci::{CachedTester, CiBackend, CiTester};
use crate::error::{Error, Result};
use crate::graph::{ancestor_mask, ground_truth_mag, meek_closure, Dag, GraphJson, Mark, MixedGraph, TargetSpec};
use crate::mb::{build_with, MbSearch, NeighborSets};
use skeleton::{adjacency_pools, stable_skeleton, union_pool};

/// Separating set per removed pair, keyed `(min, max)`; the first one stored wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SepsetMap(BTreeMap<(usize, usize), Vec<usize>>);

impl SepsetMap {
    /// Records `s` for the pair unless one is already stored. Returns whether it was stored.
    pub fn insert(&mut self, i: usize, j: usize, mut s: Vec<usize>) -> bool {
        s.sort_unstable();
        s.retain(|&k| k != i && k != j);
        let key = (i.min(j), i.max(j));
        if self.0.contains_key(&key) {
            return false;
        }
        self.0.insert(key, s);
        true
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&[usize]> {
        self.0.get(&(i.min(j), i.max(j))).map(Vec::as_slice)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.get(i, j).is_some()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &[usize])> {
        self.0.iter().map(|(&(i, j), s)| (i, j, s.as_slice()))
    }

    fn absorb(&mut self, other: &SepsetMap) {
        for (i, j, s) in other.iter() {
            self.insert(i, j, s.to_vec());
        }
    }
}

/// Markov blanket recovery settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MbConfig {
    pub alpha: f64,
    pub lmax: usize,
}

impl Default for MbConfig {
    fn default() -> Self {
        MbConfig { alpha: 0.01, lmax: 3 }
    }
}

/// Skeleton and orientation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscoveryConfig {
    pub alpha_skel: f64,
    pub lmax: usize,
    pub rules: RuleSet,
    /// Recorded for auditing; every stage is deterministic.
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            alpha_skel: 0.01,
            lmax: 3,
            rules: RuleSet::default(),
            seed: 0,
        }
    }
}

impl DiscoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_skel > 0.0 && self.alpha_skel < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha_skel {} outside (0, 1)",
                self.alpha_skel
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Cml,
    Snl,
    Pc,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cml => "cml",
            Algorithm::Snl => "snl",
            Algorithm::Pc => "pc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cml" => Ok(Algorithm::Cml),
            "snl" => Ok(Algorithm::Snl),
            "pc" => Ok(Algorithm::Pc),
            other => Err(Error::InvalidParameter(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    /// `i <-> j` left between two nodes of one neighborhood.
    BidirectedWithinNeighborhood,
    /// Local results disagreed on the direction of a shared edge.
    MergeConflict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flag {
    pub kind: FlagKind,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscoveryResult {
    pub algorithm: Algorithm,
    /// Indexed like the input; nodes outside `nodes` are isolated.
    pub graph: MixedGraph,
    pub nodes: BTreeSet<usize>,
    pub sepsets: SepsetMap,
    pub neighbor_sets: Option<NeighborSets>,
    /// All tests run, Markov blanket recovery included.
    pub ci_tests: u64,
    pub ci_tests_mb: u64,
    pub singular_tests: u64,
    pub flags: Vec<Flag>,
    pub timing_ms: BTreeMap<String, f64>,
}

impl DiscoveryResult {
    /// Within-neighborhood bidirected pairs.
    pub fn flagged_bidirected(&self) -> BTreeSet<(usize, usize)> {
        self.flags
            .iter()
            .filter(|f| f.kind == FlagKind::BidirectedWithinNeighborhood)
            .map(|f| (f.i, f.j))
            .collect()
    }

    /// Total wall time over all stages.
    pub fn runtime_ms(&self) -> f64 {
        self.timing_ms.values().sum()
    }

    /// Graph JSON plus sepsets, test counts and flags. Timing is included only
    /// on request since it varies between runs.
    pub fn to_json(&self, with_timing: bool) -> String {
        let doc = ResultJson {
            algorithm: self.algorithm,
            graph: GraphJson::from(&self.graph),
            nodes: self.nodes.iter().copied().collect(),
            sepsets: self.sepsets.iter().map(|(i, j, s)| (i, j, s.to_vec())).collect(),
            ci_tests: self.ci_tests,
            ci_tests_mb: self.ci_tests_mb,
            singular_tests: self.singular_tests,
            flags: self.flags.clone(),
            timing_ms: with_timing.then(|| self.timing_ms.clone()),
        };
        serde_json::to_string(&doc).expect("serialization cannot fail")
    }

    pub fn write_json(&self, path: impl AsRef<Path>, with_timing: bool) -> Result<()> {
        std::fs::write(path, self.to_json(with_timing) + "\n")?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ResultJson {
    algorithm: Algorithm,
    #[serde(flatten)]
    graph: GraphJson,
    nodes: Vec<usize>,
    sepsets: Vec<(usize, usize, Vec<usize>)>,
    ci_tests: u64,
    ci_tests_mb: u64,
    singular_tests: u64,
    flags: Vec<Flag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timing_ms: Option<BTreeMap<String, f64>>,
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn name_like(g: &mut MixedGraph, tester: &CiTester) {
    if let CiBackend::Oracle(dag) = tester.backend() {
        if let Some(names) = dag.names() {
            g.set_names(names.to_vec()).expect("names already validated");
        }
    }
}

/// Phase 1: start from the complete graph over `N` (circle marks) and remove
/// edges using conditioning sets drawn from `adj(i) ∪ adj(j)` within `N`.
pub fn phase1_union_skeleton(
    nbs: &NeighborSets,
    tests: &CachedTester<'_>,
    cfg: &DiscoveryConfig,
) -> Result<(MixedGraph, SepsetMap)> {
    cfg.validate()?;
    let mut g = MixedGraph::complete(tests.p(), &nbs.union(), Mark::Circle);
    let mut sepsets = SepsetMap::default();
    stable_skeleton(
        &mut g,
        &mut sepsets,
        tests,
        cfg.alpha_skel,
        cfg.lmax,
        |_, _| true,
        union_pool,
    )?;
    Ok((g, sepsets))
}

fn first_order_pools(nbs: &NeighborSets, i: usize, j: usize) -> Vec<Vec<usize>> {
    vec![
        nbs.n1(i).into_iter().filter(|&k| k != j).collect(),
        nbs.n1(j).into_iter().filter(|&k| k != i).collect(),
    ]
}

/// Phase 2: retest edges whose endpoints share a neighborhood, conditioning on
/// subsets of `N1[i] \ {j}` or `N1[j] \ {i}`. Between-neighborhood edges are
/// never touched.
pub fn phase2_local_prune(
    mut g: MixedGraph,
    mut sepsets: SepsetMap,
    nbs: &NeighborSets,
    tests: &CachedTester<'_>,
    cfg: &DiscoveryConfig,
) -> Result<(MixedGraph, SepsetMap)> {
    cfg.validate()?;
    stable_skeleton(
        &mut g,
        &mut sepsets,
        tests,
        cfg.alpha_skel,
        cfg.lmax,
        |i, j| nbs.share_neighborhood(i, j),
        |_, i, j| first_order_pools(nbs, i, j),
    )?;
    Ok((g, sepsets))
}

/// Turns every mark into a circle.
pub fn reset_to_circles(g: &mut MixedGraph) {
    for (i, j, _, _) in g.edges() {
        g.set_mark_at(i, j, Mark::Circle);
        g.set_mark_at(j, i, Mark::Circle);
    }
}

fn bidirected_flags(g: &MixedGraph, pairs: &[(usize, usize)]) -> Vec<Flag> {
    pairs
        .iter()
        .filter(|&&(i, j)| g.is_bidirected(i, j))
        .map(|&(i, j)| Flag {
            kind: FlagKind::BidirectedWithinNeighborhood,
            i,
            j,
        })
        .collect()
}

/// Coordinated multi-neighborhood learning.
pub fn run_cml(
    tester: &CiTester,
    targets: &TargetSpec,
    mb: &MbConfig,
    cfg: &DiscoveryConfig,
) -> Result<DiscoveryResult> {
    cfg.validate()?;
    let start_count = tester.count();
    let start_singular = tester.singular_count();
    let tests = CachedTester::new(tester);
    let mut timing = BTreeMap::new();

    let t = Instant::now();
    let nbs = build_with(&mut MbSearch::new(&tests, mb.alpha, mb.lmax)?, targets)?;
    timing.insert("mb".to_string(), elapsed_ms(t));
    let ci_tests_mb = tester.count() - start_count;

    let t = Instant::now();
    let (g, sepsets) = phase1_union_skeleton(&nbs, &tests, cfg)?;
    timing.insert("phase1".to_string(), elapsed_ms(t));

    let t = Instant::now();
    let (mut g, sepsets) = phase2_local_prune(g, sepsets, &nbs, &tests, cfg)?;
    timing.insert("phase2".to_string(), elapsed_ms(t));

    let t = Instant::now();
    reset_to_circles(&mut g);
    orient_v_structures(&mut g, &sepsets);
    apply_fci_rules(&mut g, &sepsets, &cfg.rules);
    let bidirected = apply_rn(&mut g, &nbs);
    timing.insert("orient".to_string(), elapsed_ms(t));

    name_like(&mut g, tester);
    Ok(DiscoveryResult {
        algorithm: Algorithm::Cml,
        flags: bidirected_flags(&g, &bidirected),
        graph: g,
        nodes: nbs.union(),
        sepsets,
        neighbor_sets: Some(nbs),
        ci_tests: tester.count() - start_count,
        ci_tests_mb,
        singular_tests: tester.singular_count() - start_singular,
        timing_ms: timing,
    })
}

/// Orients every unshielded `a - k - b` with `k` outside `sepset(a, b)` as
/// `a -> k <- b`. Arrowheads accumulate, so two triples disagreeing on an
/// edge leave it bidirected.
pub fn orient_colliders(g: &mut MixedGraph, sepsets: &SepsetMap) {
    let mut heads = BTreeSet::new();
    for k in 0..g.p() {
        let nb: Vec<usize> = g.neighbors(k).collect();
        for (x, &a) in nb.iter().enumerate() {
            for &b in &nb[x + 1..] {
                if !g.is_adjacent(a, b) && sepsets.get(a, b).is_some_and(|s| !s.contains(&k)) {
                    heads.insert((k, a));
                    heads.insert((k, b));
                }
            }
        }
    }
    for (k, a) in heads {
        g.set_mark_at(k, a, Mark::Arrow);
    }
}

/// Single-neighborhood learning: an independent PC-style run inside every
/// `NB[t]` (conditioning sets from first-order neighbor sets), merged.
///
/// Merge: a shared edge gets an arrowhead at an endpoint if any local result
/// has one there, so undirected plus directed gives directed and opposite
/// directions give `<->` (flagged as a conflict).
pub fn run_snl(
    tester: &CiTester,
    targets: &TargetSpec,
    mb: &MbConfig,
    cfg: &DiscoveryConfig,
) -> Result<DiscoveryResult> {
    cfg.validate()?;
    let start_count = tester.count();
    let start_singular = tester.singular_count();
    let tests = CachedTester::new(tester);
    let mut timing = BTreeMap::new();

    let t = Instant::now();
    let nbs = build_with(&mut MbSearch::new(&tests, mb.alpha, mb.lmax)?, targets)?;
    timing.insert("mb".to_string(), elapsed_ms(t));
    let ci_tests_mb = tester.count() - start_count;

    let t = Instant::now();
    let mut locals = Vec::new();
    let mut sepsets = SepsetMap::default();
    for &target in nbs.targets() {
        let nb = nbs.nb(target);
        let mut g = MixedGraph::complete(tester.p(), &nb, Mark::Tail);
        let mut local_seps = SepsetMap::default();
        stable_skeleton(
            &mut g,
            &mut local_seps,
            &tests,
            cfg.alpha_skel,
            cfg.lmax,
            |_, _| true,
            |_, i, j| first_order_pools(&nbs, i, j),
        )?;
        orient_colliders(&mut g, &local_seps);
        meek_closure(&mut g);
        sepsets.absorb(&local_seps);
        locals.push(g);
    }
    timing.insert("local".to_string(), elapsed_ms(t));

    let t = Instant::now();
    let mut merged = MixedGraph::new(tester.p());
    let mut flags = Vec::new();
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for local in &locals {
        pairs.extend(local.skeleton());
    }
    for (i, j) in pairs {
        let mut head_i = false;
        let mut head_j = false;
        let mut single_direction = BTreeSet::new();
        for local in &locals {
            if let Some((mi, mj)) = local.edge(i, j) {
                head_i |= mi == Mark::Arrow;
                head_j |= mj == Mark::Arrow;
                if (mi == Mark::Arrow) != (mj == Mark::Arrow) {
                    single_direction.insert(mj == Mark::Arrow);
                }
            }
        }
        let mark = |h: bool| if h { Mark::Arrow } else { Mark::Tail };
        merged.add_edge(i, j, mark(head_i), mark(head_j));
        if single_direction.len() == 2 {
            flags.push(Flag { kind: FlagKind::MergeConflict, i, j });
        }
        if head_i && head_j {
            flags.push(Flag { kind: FlagKind::BidirectedWithinNeighborhood, i, j });
        }
    }
    flags.sort();
    timing.insert("merge".to_string(), elapsed_ms(t));

    name_like(&mut merged, tester);
    Ok(DiscoveryResult {
        algorithm: Algorithm::Snl,
        graph: merged,
        nodes: nbs.union(),
        sepsets,
        neighbor_sets: Some(nbs),
        ci_tests: tester.count() - start_count,
        ci_tests_mb,
        singular_tests: tester.singular_count() - start_singular,
        flags,
        timing_ms: timing,
    })
}

/// Global stable PC over all variables: skeleton with conditioning sets from
/// `adj(i) \ {j}` or `adj(j) \ {i}`, colliders, Meek closure.
pub fn run_pc(tester: &CiTester, cfg: &DiscoveryConfig) -> Result<DiscoveryResult> {
    cfg.validate()?;
    let start_count = tester.count();
    let start_singular = tester.singular_count();
    let tests = CachedTester::new(tester);
    let mut timing = BTreeMap::new();
    let p = tester.p();
    let all: BTreeSet<usize> = (0..p).collect();

    let t = Instant::now();
    let mut g = MixedGraph::complete(p, &all, Mark::Tail);
    let mut sepsets = SepsetMap::default();
    stable_skeleton(
        &mut g,
        &mut sepsets,
        &tests,
        cfg.alpha_skel,
        cfg.lmax,
        |_, _| true,
        adjacency_pools,
    )?;
    timing.insert("skeleton".to_string(), elapsed_ms(t));

    let t = Instant::now();
    orient_colliders(&mut g, &sepsets);
    meek_closure(&mut g);
    timing.insert("orient".to_string(), elapsed_ms(t));

    let flags = g
        .edges()
        .into_iter()
        .filter(|&(_, _, mi, mj)| mi == Mark::Arrow && mj == Mark::Arrow)
        .map(|(i, j, _, _)| Flag { kind: FlagKind::BidirectedWithinNeighborhood, i, j })
        .collect();
    name_like(&mut g, tester);
    Ok(DiscoveryResult {
        algorithm: Algorithm::Pc,
        graph: g,
        nodes: all,
        sepsets,
        neighbor_sets: None,
        ci_tests: tester.count() - start_count,
        ci_tests_mb: 0,
        singular_tests: tester.singular_count() - start_singular,
        flags,
        timing_ms: timing,
    })
}

/// Runs one algorithm; `targets` is ignored by PC.
pub fn run_algorithm(
    alg: Algorithm,
    tester: &CiTester,
    targets: &TargetSpec,
    mb: &MbConfig,
    cfg: &DiscoveryConfig,
) -> Result<DiscoveryResult> {
    match alg {
        Algorithm::Cml => run_cml(tester, targets, mb, cfg),
        Algorithm::Snl => run_snl(tester, targets, mb, cfg),
        Algorithm::Pc => run_pc(tester, cfg),
    }
}

/// Reference output for the oracle: the skeleton of the ground-truth MAG over
/// `N`, separating sets `an({i, j}) \ {i, j}` read off that MAG, then R0, the
/// rule closure and the neighborhood rules with the true neighbor sets.
pub fn reference_pag(g: &Dag, targets: &TargetSpec) -> Result<MixedGraph> {
    let mag = ground_truth_mag(g, targets)?;
    let nbs = NeighborSets::from_dag(g, targets)?;
    let nodes: Vec<usize> = nbs.union().into_iter().collect();
    let mut sepsets = SepsetMap::default();
    for (x, &i) in nodes.iter().enumerate() {
        for &j in &nodes[x + 1..] {
            if mag.is_adjacent(i, j) {
                continue;
            }
            let an = ancestor_mask(&mag, &[i, j]);
            let s: Vec<usize> = nodes.iter().copied().filter(|&k| an[k] && k != i && k != j).collect();
            sepsets.insert(i, j, s);
        }
    }
    let mut pag = MixedGraph::new(g.p());
    for (i, j, _, _) in mag.edges() {
        pag.add_edge(i, j, Mark::Circle, Mark::Circle);
    }
    orient_v_structures(&mut pag, &sepsets);
    apply_fci_rules(&mut pag, &sepsets, &RuleSet::default());
    apply_rn(&mut pag, &nbs);
    if let Some(names) = g.names() {
        pag.set_names(names.to_vec())?;
    }
    Ok(pag)
}
