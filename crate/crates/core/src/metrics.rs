//! Scoring estimated graphs against the ground truth.
//!
//! Every unordered pair gets an [`EdgeStatus`] in each graph. Circle marks are
//! read as follows: circle-circle and circle-tail are undirected, circle-arrow
//! points at the arrow.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::discovery::DiscoveryResult;
use crate::error::{Error, Result};
use crate::graph::{cpdag, neighborhoods, Dag, Mark, MixedGraph, TargetSpec};
use crate::mb::NeighborSets;

/// Status of the pair `(i, j)`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStatus {
    Absent,
    Undirected,
    /// `i -> j`
    Forward,
    /// `i <- j`
    Backward,
    Bidirected,
}

impl EdgeStatus {
    pub fn of(g: &MixedGraph, i: usize, j: usize) -> EdgeStatus {
        let (i, j, flip) = if i < j { (i, j, false) } else { (j, i, true) };
        let status = match g.edge(i, j) {
            None => EdgeStatus::Absent,
            Some((mi, mj)) => match (mi == Mark::Arrow, mj == Mark::Arrow) {
                (false, false) => EdgeStatus::Undirected,
                (false, true) => EdgeStatus::Forward,
                (true, false) => EdgeStatus::Backward,
                (true, true) => EdgeStatus::Bidirected,
            },
        };
        match (flip, status) {
            (true, EdgeStatus::Forward) => EdgeStatus::Backward,
            (true, EdgeStatus::Backward) => EdgeStatus::Forward,
            _ => status,
        }
    }

    pub fn is_present(self) -> bool {
        self != EdgeStatus::Absent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PairClass {
    #[serde(rename = "TP")]
    TruePositive,
    #[serde(rename = "IO")]
    IncorrectOrientation,
    #[serde(rename = "FP")]
    FalsePositive,
    #[serde(rename = "FN")]
    FalseNegative,
    #[serde(rename = "TN")]
    TrueNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub estimated: EdgeStatus,
    pub truth: EdgeStatus,
    pub class: PairClass,
}

/// Per-pair classification, true negatives omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub rows: Vec<PairRow>,
}

impl Classification {
    pub fn count(&self, class: PairClass) -> usize {
        self.rows.iter().filter(|r| r.class == class).count()
    }

    /// `2TP / (2TP + FP + FN + IO)`, 1 when both graphs are empty.
    pub fn f1(&self) -> f64 {
        let tp = self.count(PairClass::TruePositive) as f64;
        let rest = (self.count(PairClass::FalsePositive)
            + self.count(PairClass::FalseNegative)
            + self.count(PairClass::IncorrectOrientation)) as f64;
        if tp == 0.0 && rest == 0.0 {
            1.0
        } else {
            2.0 * tp / (2.0 * tp + rest)
        }
    }

    /// Pairs whose status differs.
    pub fn shd(&self) -> usize {
        self.rows.iter().filter(|r| r.estimated != r.truth).count()
    }
}

fn same_universe(est: &MixedGraph, truth: &MixedGraph) -> Result<()> {
    if est.p() != truth.p() {
        return Err(Error::UniverseMismatch(format!(
            "estimate has {} nodes, truth has {}",
            est.p(),
            truth.p()
        )));
    }
    Ok(())
}

/// Classifies every pair adjacent in either graph.
pub fn classify(est: &MixedGraph, truth: &MixedGraph) -> Result<Classification> {
    same_universe(est, truth)?;
    let pairs: BTreeSet<(usize, usize)> = est.skeleton().union(&truth.skeleton()).copied().collect();
    let rows = pairs
        .into_iter()
        .map(|(i, j)| {
            let e = EdgeStatus::of(est, i, j);
            let t = EdgeStatus::of(truth, i, j);
            let class = match (e.is_present(), t.is_present()) {
                (true, true) if e == t => PairClass::TruePositive,
                (true, true) => PairClass::IncorrectOrientation,
                (true, false) => PairClass::FalsePositive,
                (false, true) => PairClass::FalseNegative,
                (false, false) => PairClass::TrueNegative,
            };
            PairRow { i, j, estimated: e, truth: t, class }
        })
        .collect();
    Ok(Classification { rows })
}

/// CPDAG of `g` restricted to the union of the true target neighborhoods.
pub fn truth_subgraph(g: &Dag, targets: &TargetSpec) -> Result<MixedGraph> {
    Ok(cpdag(g).restrict(&truth_nodes(g, targets)?))
}

/// Union of the true neighborhoods `mb(t) ∪ {t}`.
pub fn truth_nodes(g: &Dag, targets: &TargetSpec) -> Result<BTreeSet<usize>> {
    Ok(neighborhoods(g, targets)?.into_iter().flatten().collect())
}

/// Overall F1 with the incorrect-orientation term. Restrict `est` to the
/// truth's nodes beforehand.
pub fn overall_f1(est: &MixedGraph, truth: &MixedGraph) -> Result<f64> {
    Ok(classify(est, truth)?.f1())
}

/// Structural Hamming distance: one unit per pair whose status differs.
pub fn shd(est: &MixedGraph, truth: &MixedGraph) -> Result<usize> {
    Ok(classify(est, truth)?.shd())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PraMode {
    /// An undirected (or bidirected) edge from a true parent to the target counts as found.
    Loose,
    /// Such an edge counts as a missed parent and as a wrong claim.
    Strict,
}

/// Parent-recovery F1 pooled over all targets.
pub fn pra_f1(est: &MixedGraph, truth: &MixedGraph, targets: &TargetSpec, mode: PraMode) -> Result<f64> {
    same_universe(est, truth)?;
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for &t in targets.nodes() {
        est.check_node(t)?;
        let parents = truth.parents(t);
        let directed = est.parents(t);
        let unresolved: BTreeSet<usize> = est
            .neighbors(t)
            .filter(|&v| {
                matches!(EdgeStatus::of(est, t, v), EdgeStatus::Undirected | EdgeStatus::Bidirected)
            })
            .filter(|v| parents.contains(v))
            .collect();
        tp += directed.intersection(&parents).count();
        fp += directed.difference(&parents).count();
        let missed = parents.difference(&directed).count();
        match mode {
            PraMode::Loose => {
                tp += unresolved.len();
                fn_ += missed - unresolved.len();
            }
            PraMode::Strict => {
                fn_ += missed;
                fp += unresolved.len();
            }
        }
    }
    Ok(if tp + fp + fn_ == 0 {
        1.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    })
}

/// Edges of `g` whose endpoints both lie in the neighborhoods but share none.
pub fn bne_count(g: &MixedGraph, nbs: &NeighborSets) -> usize {
    let union = nbs.union();
    g.skeleton()
        .into_iter()
        .filter(|&(i, j)| union.contains(&i) && union.contains(&j) && !nbs.share_neighborhood(i, j))
        .count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall_f1: f64,
    pub shd: usize,
    pub pra_f1_loose: f64,
    pub pra_f1_strict: f64,
    pub bne_count: usize,
    pub ci_tests: u64,
    pub runtime_ms: u64,
    pub classification: Classification,
}

impl MetricsReport {
    /// Scores a discovery result against the CPDAG of `g` over the true
    /// neighborhoods of `targets`. Between-neighborhood edges are counted
    /// against the result's own neighbor sets when it has them, otherwise
    /// against the true ones.
    pub fn evaluate(result: &DiscoveryResult, g: &Dag, targets: &TargetSpec) -> Result<Self> {
        let nodes = truth_nodes(g, targets)?;
        let truth = cpdag(g).restrict(&nodes);
        let est = result.graph.restrict(&nodes);
        let classification = classify(&est, &truth)?;
        let bne = match &result.neighbor_sets {
            Some(nbs) => bne_count(&result.graph, nbs),
            None => bne_count(&result.graph, &NeighborSets::from_dag(g, targets)?),
        };
        Ok(MetricsReport {
            overall_f1: classification.f1(),
            shd: classification.shd(),
            pra_f1_loose: pra_f1(&est, &truth, targets, PraMode::Loose)?,
            pra_f1_strict: pra_f1(&est, &truth, targets, PraMode::Strict)?,
            bne_count: bne,
            ci_tests: result.ci_tests,
            runtime_ms: result.runtime_ms().round() as u64,
            classification,
        })
    }
}
