//! Ground-truth MAG over a union of target neighborhoods and MAG validity checks.

use std::collections::BTreeSet;

use super::separation::{ancestor_mask, inducing_path_exists};
use super::{Dag, Mark, MixedGraph, TargetSpec};
use crate::error::Result;

/// True neighborhoods `NB_t = mb(t) ∪ {t}`, in target order.
pub fn neighborhoods(g: &Dag, t: &TargetSpec) -> Result<Vec<BTreeSet<usize>>> {
    t.nodes()
        .iter()
        .map(|&target| {
            let mut nb = g.markov_blanket(target)?;
            nb.insert(target);
            Ok(nb)
        })
        .collect()
}

/// Unordered pairs `(i, j)`, `i < j`, of `N = ∪ NB` that share no neighborhood.
pub fn between_neighborhood_pairs(nbs: &[BTreeSet<usize>]) -> Vec<(usize, usize)> {
    let union: Vec<usize> = nbs
        .iter()
        .flatten()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut out = Vec::new();
    for (a, &i) in union.iter().enumerate() {
        for &j in &union[a + 1..] {
            if !nbs.iter().any(|nb| nb.contains(&i) && nb.contains(&j)) {
                out.push((i, j));
            }
        }
    }
    out
}

/// The induced subgraph of `g` over `N = NB_T`, plus one edge per
/// between-neighborhood pair joined by an inducing path relative to `V \ N`,
/// oriented by ancestry (bidirected when neither endpoint is an ancestor).
pub fn ground_truth_mag(g: &Dag, t: &TargetSpec) -> Result<MixedGraph> {
    let nbs = neighborhoods(g, t)?;
    let union: BTreeSet<usize> = nbs.iter().flatten().copied().collect();
    let latent: BTreeSet<usize> = (0..g.p()).filter(|k| !union.contains(k)).collect();
    let mut out = g.graph().restrict(&union);
    for (i, j) in between_neighborhood_pairs(&nbs) {
        if out.is_adjacent(i, j) || !inducing_path_exists(g, i, j, &latent)? {
            continue;
        }
        let an_j = ancestor_mask(g, &[j]);
        let an_i = ancestor_mask(g, &[i]);
        if an_j[i] {
            out.add_directed(i, j);
        } else if an_i[j] {
            out.add_directed(j, i);
        } else {
            out.add_bidirected(i, j);
        }
    }
    Ok(out)
}

/// True iff no inducing path relative to `L = V \ N` joins two nodes of one
/// neighborhood `NB_t` while passing through a node of `N \ NB_t`.
///
/// Exhaustive simple-path search; every observed intermediate node must be a
/// collider and an ancestor of an endpoint, which prunes most branches.
pub fn check_assumption_inp(g: &Dag, t: &TargetSpec) -> Result<bool> {
    let nbs = neighborhoods(g, t)?;
    let union: BTreeSet<usize> = nbs.iter().flatten().copied().collect();
    let p = g.p();
    let mut latent = vec![true; p];
    for &k in &union {
        latent[k] = false;
    }
    for nb in &nbs {
        let mut foreign = vec![false; p];
        for &k in union.difference(nb) {
            foreign[k] = true;
        }
        let members: Vec<usize> = nb.iter().copied().collect();
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                let an = ancestor_mask(g, &[a, b]);
                if !(0..p).any(|k| foreign[k] && an[k]) {
                    continue;
                }
                let search = PathSearch {
                    g,
                    target: b,
                    latent: &latent,
                    ancestor: &an,
                    foreign: &foreign,
                };
                let mut on_path = vec![false; p];
                on_path[a] = true;
                if search.extend(a, None, false, &mut on_path) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

struct PathSearch<'a> {
    g: &'a Dag,
    target: usize,
    latent: &'a [bool],
    ancestor: &'a [bool],
    foreign: &'a [bool],
}

impl PathSearch<'_> {
    /// Extends the simple path ending at `v` (reached from `prev`); returns true
    /// when an inducing path through a foreign node reaches the target.
    fn extend(&self, v: usize, prev: Option<usize>, via_foreign: bool, on_path: &mut [bool]) -> bool {
        for w in self.g.neighbors(v) {
            if on_path[w] {
                continue;
            }
            // v is intermediate when prev exists: check collider status at v
            if let Some(u) = prev {
                if !self.latent[v] {
                    let into_from_u = self.g.is_directed(u, v);
                    let into_from_w = self.g.is_directed(w, v);
                    if !(into_from_u && into_from_w) {
                        continue;
                    }
                }
            }
            if w == self.target {
                if via_foreign {
                    return true;
                }
                continue;
            }
            if !self.latent[w] && !self.ancestor[w] {
                continue;
            }
            on_path[w] = true;
            let found = self.extend(w, Some(v), via_foreign || self.foreign[w], on_path);
            on_path[w] = false;
            if found {
                return true;
            }
        }
        false
    }
}

/// MAG check: only directed/bidirected edges, no directed or almost directed
/// cycle, and no inducing path between non-adjacent nodes.
///
/// The maximality check walks collider chains (bidirected edges among
/// ancestors of the endpoints); intended for test-scale graphs.
pub fn validate_mag(g: &MixedGraph) -> bool {
    if !super::is_ancestral(g) {
        return false;
    }
    let p = g.p();
    for a in 0..p {
        for b in a + 1..p {
            if g.is_adjacent(a, b) {
                continue;
            }
            let an = ancestor_mask(g, &[a, b]);
            let mut seen = vec![false; p];
            let mut stack: Vec<usize> = g
                .neighbors(a)
                .filter(|&k| an[k] && g.mark_at(k, a) == Some(Mark::Arrow))
                .collect();
            for &k in &stack {
                seen[k] = true;
            }
            while let Some(k) = stack.pop() {
                if g.is_adjacent(k, b) && g.mark_at(k, b) == Some(Mark::Arrow) {
                    return false;
                }
                for m in g.neighbors(k) {
                    if !seen[m] && m != a && m != b && an[m] && g.is_bidirected(k, m) {
                        seen[m] = true;
                        stack.push(m);
                    }
                }
            }
        }
    }
    true
}
