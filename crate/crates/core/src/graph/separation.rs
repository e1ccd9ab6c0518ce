use std::collections::BTreeSet;

use super::{Dag, Mark, MixedGraph};
use crate::error::{Error, Result};

/// `i` with `i == j` or a directed path `i -> ... -> j`.
pub fn ancestors(g: &MixedGraph, j: usize) -> Result<BTreeSet<usize>> {
    g.check_node(j)?;
    let mask = ancestor_mask(g, &[j]);
    Ok((0..g.p()).filter(|&i| mask[i]).collect())
}

/// Membership mask of the ancestors of any node in `set` (the set included).
pub fn ancestor_mask(g: &MixedGraph, set: &[usize]) -> Vec<bool> {
    // walk backwards: from v to w when w -> v
    g.reach(set, |v, w| g.is_directed(w, v))
}

/// True when every edge is directed or bidirected and there is neither a
/// directed nor an almost directed cycle.
pub fn is_ancestral(g: &MixedGraph) -> bool {
    for (_, _, mi, mj) in g.edges() {
        let ok = matches!(
            (mi, mj),
            (Mark::Tail, Mark::Arrow) | (Mark::Arrow, Mark::Tail) | (Mark::Arrow, Mark::Arrow)
        );
        if !ok {
            return false;
        }
    }
    if g.has_directed_cycle() {
        return false;
    }
    for (i, j, _, _) in g.edges() {
        if g.is_bidirected(i, j) {
            let an_i = ancestor_mask(g, &[i]);
            let an_j = ancestor_mask(g, &[j]);
            if an_i[j] || an_j[i] {
                return false;
            }
        }
    }
    true
}

fn check_query(g: &MixedGraph, i: usize, j: usize, s: &BTreeSet<usize>) -> Result<()> {
    g.check_node(i)?;
    g.check_node(j)?;
    for &k in s {
        g.check_node(k)?;
    }
    if i == j {
        return Err(Error::InvalidQuery(format!("endpoints coincide ({i})")));
    }
    if s.contains(&i) || s.contains(&j) {
        return Err(Error::InvalidQuery(
            "conditioning set contains an endpoint".into(),
        ));
    }
    Ok(())
}

/// m-separation of `i` and `j` given `s` in an ancestral graph.
pub fn m_separated(g: &MixedGraph, i: usize, j: usize, s: &BTreeSet<usize>) -> Result<bool> {
    check_query(g, i, j, s)?;
    if !is_ancestral(g) {
        return Err(Error::NonAncestral);
    }
    Ok(!connected(g, i, j, &s.iter().copied().collect::<Vec<_>>()))
}

/// d-separation in a DAG.
pub fn d_separated(g: &Dag, i: usize, j: usize, s: &BTreeSet<usize>) -> Result<bool> {
    check_query(g, i, j, s)?;
    Ok(!connected(g, i, j, &s.iter().copied().collect::<Vec<_>>()))
}

/// Reachability over `(node, entered through an arrowhead)` states.
///
/// A collider may be passed only if it is an ancestor of `s`; a non-collider
/// only if it is outside `s`.
pub(crate) fn connected(g: &MixedGraph, i: usize, j: usize, s: &[usize]) -> bool {
    let p = g.p();
    let an_s = ancestor_mask(g, s);
    let mut in_s = vec![false; p];
    for &k in s {
        in_s[k] = true;
    }
    let mut seen = vec![false; 2 * p];
    let mut stack = Vec::new();
    for k in g.neighbors(i) {
        let into = g.mark_at(k, i) == Some(Mark::Arrow);
        let state = 2 * k + into as usize;
        if !seen[state] {
            seen[state] = true;
            stack.push((k, into));
        }
    }
    while let Some((k, into)) = stack.pop() {
        if k == j {
            return true;
        }
        for m in g.neighbors(k) {
            if m == i {
                continue;
            }
            let leaves_into_k = g.mark_at(k, m) == Some(Mark::Arrow);
            let collider = into && leaves_into_k;
            let pass = if collider { an_s[k] } else { !in_s[k] };
            if !pass {
                continue;
            }
            let next_into = g.mark_at(m, k) == Some(Mark::Arrow);
            let state = 2 * m + next_into as usize;
            if !seen[state] {
                seen[state] = true;
                stack.push((m, next_into));
            }
        }
    }
    false
}

/// Whether some path from `i` to `j` has every intermediate node outside `l`
/// be a collider on the path and an ancestor of `i` or `j`.
///
/// Decided through the equivalent separation criterion: such a path exists
/// iff `i` and `j` are d-connected given the observed ancestors of `{i, j}`.
pub fn inducing_path_exists(g: &Dag, i: usize, j: usize, l: &BTreeSet<usize>) -> Result<bool> {
    g.check_node(i)?;
    g.check_node(j)?;
    for &k in l {
        g.check_node(k)?;
    }
    if i == j || l.contains(&i) || l.contains(&j) {
        return Err(Error::InvalidQuery(
            "inducing path endpoints must be distinct and outside L".into(),
        ));
    }
    if g.is_adjacent(i, j) {
        return Ok(true);
    }
    let an = ancestor_mask(g, &[i, j]);
    let z: Vec<usize> = (0..g.p())
        .filter(|&k| an[k] && k != i && k != j && !l.contains(&k))
        .collect();
    Ok(connected(g, i, j, &z))
}
