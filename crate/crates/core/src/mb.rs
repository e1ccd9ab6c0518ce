//! Markov blanket recovery: a forward-backward parents/children search with
//! max-p-value scoring, a collider test for spouses, and the first/second
//! order neighbor sets built from them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci::{CachedTester, CiDecision, CiTester};
use crate::error::{Error, Result};
use crate::graph::{Dag, TargetSpec};
use crate::subsets::for_each_subset;

/// Parents/children estimate of one node, with the separating set found for
/// every node that was ruled out.
#[derive(Debug, Clone, PartialEq)]
pub struct PcResult {
    pub pc: BTreeSet<usize>,
    pub sepsets: BTreeMap<usize, Vec<usize>>,
}

/// Blanket searches sharing one memoising tester, with per-node results cached.
pub struct MbSearch<'a> {
    tests: &'a CachedTester<'a>,
    alpha: f64,
    lmax: usize,
    candidate_cache: HashMap<usize, PcResult>,
    pc_cache: HashMap<usize, PcResult>,
    mb_cache: HashMap<usize, BTreeSet<usize>>,
}

impl<'a> MbSearch<'a> {
    pub fn new(tests: &'a CachedTester<'a>, alpha: f64, lmax: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
        }
        Ok(MbSearch {
            tests,
            alpha,
            lmax,
            candidate_cache: HashMap::new(),
            pc_cache: HashMap::new(),
            mb_cache: HashMap::new(),
        })
    }

    fn test(&self, i: usize, j: usize, s: &[usize]) -> Result<CiDecision> {
        self.tests.test(i, j, s, self.alpha)
    }

    /// Marginal tests of `t` against every candidate, run in parallel.
    fn marginal_tests(&self, t: usize, cands: &[usize]) -> Result<Vec<CiDecision>> {
        cands.par_iter().map(|&v| self.test(t, v, &[])).collect()
    }

    /// First subset of `pool` (size `<= lmax`, canonical order) that separates
    /// `t` and `v`, optionally restricted to subsets containing `must`.
    fn find_sepset(
        &self,
        t: usize,
        v: usize,
        pool: &[usize],
        must: Option<usize>,
        min_size: usize,
        max_p: &mut f64,
    ) -> Result<Option<Vec<usize>>> {
        let rest: Vec<usize> = pool.iter().copied().filter(|&x| Some(x) != must).collect();
        let extra = must.is_some() as usize;
        let top = self.lmax.min(rest.len() + extra);
        for size in min_size.max(extra)..=top {
            let mut found = None;
            let mut err = None;
            for_each_subset(&rest, size - extra, |r| {
                let mut s = r.to_vec();
                if let Some(m) = must {
                    s.push(m);
                    s.sort_unstable();
                }
                match self.test(t, v, &s) {
                    Ok(d) => {
                        *max_p = max_p.max(d.p_value);
                        if d.independent {
                            found = Some(s);
                            return true;
                        }
                        false
                    }
                    Err(e) => {
                        err = Some(e);
                        true
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }

    /// Parents/children of `t`: the candidate set below, kept symmetric by
    /// dropping any `x` whose own candidate set does not contain `t`.
    pub fn parents_children(&mut self, t: usize) -> Result<PcResult> {
        if let Some(r) = self.pc_cache.get(&t) {
            return Ok(r.clone());
        }
        let mut own = self.candidate_pc(t)?;
        for x in own.pc.clone() {
            let other = self.candidate_pc(x)?;
            if !other.pc.contains(&t) {
                own.pc.remove(&x);
                let sep = other.sepsets.get(&t).cloned().unwrap_or_default();
                own.sepsets.insert(x, sep);
            }
        }
        self.pc_cache.insert(t, own.clone());
        Ok(own)
    }

    /// Candidate parents/children of `t`.
    ///
    /// Forward: every candidate keeps the largest p-value seen against `t`;
    /// a candidate found independent given some subset of the current set is
    /// dropped for good, otherwise the candidate with the smallest score
    /// (lowest index on ties) joins. Backward: a member independent of `t`
    /// given some subset of the other members is removed.
    fn candidate_pc(&mut self, t: usize) -> Result<PcResult> {
        if let Some(r) = self.candidate_cache.get(&t) {
            return Ok(r.clone());
        }
        let p = self.tests.p();
        if t >= p {
            return Err(Error::InvalidNode { index: t, p });
        }
        let mut sepsets = BTreeMap::new();
        let all: Vec<usize> = (0..p).filter(|&v| v != t).collect();
        let first = self.marginal_tests(t, &all)?;
        let mut cands: Vec<(usize, f64)> = Vec::new();
        for (&v, d) in all.iter().zip(&first) {
            if d.independent {
                sepsets.insert(v, Vec::new());
            } else {
                cands.push((v, d.p_value));
            }
        }
        let mut cpc: Vec<usize> = Vec::new();
        while !cands.is_empty() {
            let best = (0..cands.len())
                .min_by(|&a, &b| cands[a].1.total_cmp(&cands[b].1).then(cands[a].0.cmp(&cands[b].0)))
                .expect("non-empty");
            let (x, _) = cands.remove(best);
            if self.lmax > 0 {
                let mut kept = Vec::with_capacity(cands.len());
                for (v, mut score) in std::mem::take(&mut cands) {
                    match self.find_sepset(t, v, &cpc, Some(x), 1, &mut score)? {
                        Some(s) => {
                            sepsets.insert(v, s);
                        }
                        None => kept.push((v, score)),
                    }
                }
                cands = kept;
            }
            cpc.push(x);
            cpc.sort_unstable();
        }
        for x in cpc.clone() {
            let others: Vec<usize> = cpc.iter().copied().filter(|&y| y != x).collect();
            let mut ignored = 0.0;
            if let Some(s) = self.find_sepset(t, x, &others, None, 0, &mut ignored)? {
                sepsets.insert(x, s);
                cpc.retain(|&y| y != x);
            }
        }
        let result = PcResult {
            pc: cpc.into_iter().collect(),
            sepsets,
        };
        self.candidate_cache.insert(t, result.clone());
        Ok(result)
    }

    /// Spouses of `t`: `s` in `pc(c) \ (pc(t) ∪ {t})` for some `c` in `pc(t)`
    /// such that `t` and `s` become dependent once `c` joins their separating set.
    pub fn spouses(&mut self, t: usize) -> Result<BTreeSet<usize>> {
        let own = self.parents_children(t)?;
        let mut out = BTreeSet::new();
        for &c in &own.pc {
            let around = self.parents_children(c)?;
            for &s in &around.pc {
                if s == t || own.pc.contains(&s) || out.contains(&s) {
                    continue;
                }
                let sep = match own.sepsets.get(&s) {
                    Some(sep) => Some(sep.clone()),
                    None => {
                        let pool: Vec<usize> = own.pc.iter().copied().collect();
                        let mut ignored = 0.0;
                        self.find_sepset(t, s, &pool, None, 0, &mut ignored)?
                    }
                };
                let Some(mut sep) = sep else { continue };
                if sep.contains(&c) {
                    continue;
                }
                sep.push(c);
                if !self.test(t, s, &sep)?.independent {
                    out.insert(s);
                }
            }
        }
        Ok(out)
    }

    /// Estimated Markov blanket of `t`.
    pub fn blanket(&mut self, t: usize) -> Result<BTreeSet<usize>> {
        if let Some(b) = self.mb_cache.get(&t) {
            return Ok(b.clone());
        }
        let mut b = self.parents_children(t)?.pc;
        b.extend(self.spouses(t)?);
        self.mb_cache.insert(t, b.clone());
        Ok(b)
    }
}

pub fn estimate_parents_children(
    t: usize,
    tester: &CiTester,
    alpha: f64,
    lmax: usize,
) -> Result<BTreeSet<usize>> {
    let tests = CachedTester::new(tester);
    Ok(MbSearch::new(&tests, alpha, lmax)?.parents_children(t)?.pc)
}

/// Spouses of `t` given its parents/children `pc` (supplied rather than re-estimated).
pub fn estimate_spouses(
    t: usize,
    pc: &BTreeSet<usize>,
    tester: &CiTester,
    alpha: f64,
    lmax: usize,
) -> Result<BTreeSet<usize>> {
    let tests = CachedTester::new(tester);
    let mut search = MbSearch::new(&tests, alpha, lmax)?;
    let mut own = search.parents_children(t)?;
    if own.pc != *pc {
        own.pc = pc.clone();
        own.sepsets.retain(|v, _| !pc.contains(v));
        search.pc_cache.insert(t, own);
    }
    search.spouses(t)
}

/// First- and second-order neighbor sets of a target set.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSets {
    targets: Vec<usize>,
    /// Estimated blanket of every target and of every member of a target's neighborhood.
    n1: BTreeMap<usize, BTreeSet<usize>>,
}

impl NeighborSets {
    /// Builds from precomputed blankets; `n1` must cover every target and
    /// every member of each target's neighborhood.
    pub fn new(targets: &TargetSpec, n1: BTreeMap<usize, BTreeSet<usize>>) -> Result<Self> {
        let ns = NeighborSets {
            targets: targets.nodes().to_vec(),
            n1,
        };
        for &t in &ns.targets {
            for v in ns.nb(t) {
                if !ns.n1.contains_key(&v) {
                    return Err(Error::InvalidParameter(format!("no blanket for node {v}")));
                }
            }
        }
        Ok(ns)
    }

    /// True blankets read off a DAG.
    pub fn from_dag(g: &Dag, targets: &TargetSpec) -> Result<Self> {
        let mut n1 = BTreeMap::new();
        for &t in targets.nodes() {
            let mb = g.markov_blanket(t)?;
            for v in mb.iter().copied().chain([t]) {
                if let std::collections::btree_map::Entry::Vacant(e) = n1.entry(v) {
                    e.insert(g.markov_blanket(v)?);
                }
            }
        }
        NeighborSets::new(targets, n1)
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// `N1[v]`, empty for nodes whose blanket was never computed.
    pub fn n1(&self, v: usize) -> BTreeSet<usize> {
        self.n1.get(&v).cloned().unwrap_or_default()
    }

    pub fn n1_map(&self) -> &BTreeMap<usize, BTreeSet<usize>> {
        &self.n1
    }

    /// `NB[t] = N1[t] ∪ {t}`.
    pub fn nb(&self, t: usize) -> BTreeSet<usize> {
        let mut s = self.n1(t);
        s.insert(t);
        s
    }

    /// `N2[t] = ∪_{j ∈ N1[t]} N1[j] \ NB[t]`.
    pub fn n2(&self, t: usize) -> BTreeSet<usize> {
        let nb = self.nb(t);
        self.n1(t)
            .iter()
            .flat_map(|&j| self.n1(j))
            .filter(|v| !nb.contains(v))
            .collect()
    }

    /// Neighborhoods in target order.
    pub fn neighborhoods(&self) -> Vec<BTreeSet<usize>> {
        self.targets.iter().map(|&t| self.nb(t)).collect()
    }

    /// `N = ∪ NB[t]`.
    pub fn union(&self) -> BTreeSet<usize> {
        self.targets.iter().flat_map(|&t| self.nb(t)).collect()
    }

    /// `N ∪ ∪ N2[t]`.
    pub fn union_with_second_order(&self) -> BTreeSet<usize> {
        let mut u = self.union();
        for &t in &self.targets {
            u.extend(self.n2(t));
        }
        u
    }

    /// Whether `i` and `j` lie in a common neighborhood.
    pub fn share_neighborhood(&self, i: usize, j: usize) -> bool {
        self.targets.iter().any(|&t| {
            let nb = self.nb(t);
            nb.contains(&i) && nb.contains(&j)
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&NeighborSetsJson::from(self)).expect("serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NeighborSetsJson = serde_json::from_str(text)?;
        let parse = |k: &str| {
            k.parse::<usize>()
                .map_err(|_| Error::Parse(format!("'{k}' is not a node index")))
        };
        let n1 = doc
            .n1
            .iter()
            .map(|(k, v)| Ok((parse(k)?, v.iter().copied().collect())))
            .collect::<Result<BTreeMap<_, _>>>()?;
        let targets: Vec<usize> = doc.targets.keys().map(|k| parse(k)).collect::<Result<_>>()?;
        let p = n1
            .iter()
            .flat_map(|(k, v): (&usize, &BTreeSet<usize>)| v.iter().chain([k]))
            .max()
            .map_or(1, |m| m + 1);
        NeighborSets::new(&TargetSpec::new(targets, p)?, n1)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetEntry {
    n1: Vec<usize>,
    n2: Vec<usize>,
}

/// `{"targets": {"3": {"n1": [...], "n2": [...]}}, "n1": {"v": [...]}}`, keyed by index.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeighborSetsJson {
    targets: BTreeMap<String, TargetEntry>,
    n1: BTreeMap<String, Vec<usize>>,
}

impl From<&NeighborSets> for NeighborSetsJson {
    fn from(ns: &NeighborSets) -> Self {
        NeighborSetsJson {
            targets: ns
                .targets
                .iter()
                .map(|&t| {
                    let entry = TargetEntry {
                        n1: ns.n1(t).into_iter().collect(),
                        n2: ns.n2(t).into_iter().collect(),
                    };
                    (t.to_string(), entry)
                })
                .collect(),
            n1: ns
                .n1
                .iter()
                .map(|(k, v)| (k.to_string(), v.iter().copied().collect()))
                .collect(),
        }
    }
}

/// Estimated blankets of every target and of every member of its neighborhood.
pub fn build_neighbor_sets(
    targets: &TargetSpec,
    tester: &CiTester,
    alpha: f64,
    lmax: usize,
) -> Result<NeighborSets> {
    let tests = CachedTester::new(tester);
    let mut search = MbSearch::new(&tests, alpha, lmax)?;
    build_with(&mut search, targets)
}

pub fn build_with(search: &mut MbSearch<'_>, targets: &TargetSpec) -> Result<NeighborSets> {
    if let Some(&bad) = targets.nodes().iter().find(|&&t| t >= search.tests.p()) {
        return Err(Error::InvalidNode { index: bad, p: search.tests.p() });
    }
    let mut n1 = BTreeMap::new();
    for &t in targets.nodes() {
        let mb = search.blanket(t)?;
        n1.insert(t, mb.clone());
        for v in mb {
            if !n1.contains_key(&v) {
                n1.insert(v, search.blanket(v)?);
            }
        }
    }
    NeighborSets::new(targets, n1)
}
