//! Orientation rules on partial ancestral graphs.
//!
//! Notation follows the usual PAG conventions: `a *-> b` means an arrowhead at
//! `b` whatever the mark at `a`; `a o-> b` a circle at `a` and an arrowhead at
//! `b`. Rules only ever turn a circle into a tail or an arrowhead: an existing
//! tail or arrowhead is never overwritten.
//!
//! * R0: unshielded `a *-* k *-* b` with `k` outside `sepset(a, b)` becomes `a *-> k <-* b`.
//! * R1: `a *-> b o-* c`, `a`, `c` non-adjacent: `b -> c`.
//! * R2: `a -> b *-> c` or `a *-> b -> c`, with `a *-o c`: `a *-> c`.
//! * R3: `a *-> b <-* c`, `a *-o d o-* c`, `a`, `c` non-adjacent, `d *-o b`: `d *-> b`.
//! * R4: discriminating path `<d, ..., a, b, c>` for `b` with `b o-* c`: `b -> c` if
//!   `b` is in `sepset(d, c)`, else `a <-> b <-> c`.
//! * R8: `a -> b -> c` or `a -o b -> c`, with `a o-> c`: `a -> c`.
//! * R9: `a o-> c` and an uncovered potentially directed path `<a, b, d, ..., c>`
//!   with `b`, `c` non-adjacent: `a -> c`.
//! * R10: `a o-> c`, `b -> c <- d`, uncovered potentially directed paths from
//!   `a` to `b` and from `a` to `d` whose second nodes are distinct and
//!   non-adjacent: `a -> c`.
//! * Neighborhood rules: inside one neighborhood, `o-o` becomes `-` and `o->` becomes `->`.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::SepsetMap;
use crate::graph::{Mark, MixedGraph};
use crate::mb::NeighborSets;

/// Which rules run during the closure (all on by default).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuleSet {
    pub r1: bool,
    pub r2: bool,
    pub r3: bool,
    pub r4: bool,
    pub r8: bool,
    pub r9: bool,
    pub r10: bool,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet {
            r1: true,
            r2: true,
            r3: true,
            r4: true,
            r8: true,
            r9: true,
            r10: true,
        }
    }
}

fn mark(g: &MixedGraph, at: usize, other: usize) -> Option<Mark> {
    g.mark_at(at, other)
}

fn is(g: &MixedGraph, at: usize, other: usize, m: Mark) -> bool {
    g.mark_at(at, other) == Some(m)
}

/// Sets the mark at `at` on edge `at - other` if it is currently a circle.
fn resolve(g: &mut MixedGraph, at: usize, other: usize, m: Mark) -> bool {
    if is(g, at, other, Mark::Circle) {
        g.set_mark_at(at, other, m);
        true
    } else {
        false
    }
}

/// `a -> b`: tail at `a`, arrowhead at `b`.
fn directed(g: &MixedGraph, a: usize, b: usize) -> bool {
    is(g, a, b, Mark::Tail) && is(g, b, a, Mark::Arrow)
}

/// The edge `a - b` could be oriented `a -> b`: no arrowhead at `a`, no tail at `b`.
fn potentially_directed(g: &MixedGraph, a: usize, b: usize) -> bool {
    g.is_adjacent(a, b) && !is(g, a, b, Mark::Arrow) && !is(g, b, a, Mark::Tail)
}

fn edge_list(g: &MixedGraph) -> Vec<(usize, usize)> {
    g.edges()
        .into_iter()
        .flat_map(|(i, j, _, _)| [(i, j), (j, i)])
        .collect()
}

/// R0. Returns the number of arrowheads added.
pub fn orient_v_structures(g: &mut MixedGraph, sepsets: &SepsetMap) -> usize {
    let mut heads = BTreeSet::new();
    for k in 0..g.p() {
        let nb: Vec<usize> = g.neighbors(k).collect();
        for (x, &a) in nb.iter().enumerate() {
            for &b in &nb[x + 1..] {
                if g.is_adjacent(a, b) {
                    continue;
                }
                if let Some(s) = sepsets.get(a, b) {
                    if !s.contains(&k) {
                        heads.insert((k, a));
                        heads.insert((k, b));
                    }
                }
            }
        }
    }
    heads
        .into_iter()
        .filter(|&(k, a)| resolve(g, k, a, Mark::Arrow))
        .count()
}

pub fn rule_r1(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (b, c) in edge_list(g) {
        if !is(g, b, c, Mark::Circle) {
            continue;
        }
        let fires = g
            .neighbors(b)
            .any(|a| a != c && is(g, b, a, Mark::Arrow) && !g.is_adjacent(a, c));
        if fires {
            changed |= resolve(g, b, c, Mark::Tail);
            changed |= resolve(g, c, b, Mark::Arrow);
        }
    }
    changed
}

pub fn rule_r2(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in edge_list(g) {
        if !is(g, c, a, Mark::Circle) {
            continue;
        }
        let fires = g.neighbors(a).any(|b| {
            b != c
                && g.is_adjacent(b, c)
                && ((directed(g, a, b) && is(g, c, b, Mark::Arrow))
                    || (is(g, b, a, Mark::Arrow) && directed(g, b, c)))
        });
        if fires {
            changed |= resolve(g, c, a, Mark::Arrow);
        }
    }
    changed
}

pub fn rule_r3(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (d, b) in edge_list(g) {
        if !is(g, b, d, Mark::Circle) {
            continue;
        }
        let around: Vec<usize> = g
            .neighbors(d)
            .filter(|&x| x != b && is(g, d, x, Mark::Circle) && is(g, b, x, Mark::Arrow))
            .collect();
        let fires = around.iter().enumerate().any(|(i, &a)| {
            around[i + 1..].iter().any(|&c| !g.is_adjacent(a, c))
        });
        if fires {
            changed |= resolve(g, b, d, Mark::Arrow);
        }
    }
    changed
}

/// First node `d` ending a discriminating path `<d, ..., a, b, c>` for `b`
/// (breadth-first from `a`, neighbors in ascending order), together with `a`.
pub fn discriminating_path(g: &MixedGraph, b: usize, c: usize) -> Option<(usize, usize)> {
    for a in g.neighbors(b) {
        if a == c || !g.is_adjacent(a, c) || !directed(g, a, c) || !is(g, a, b, Mark::Arrow) {
            continue;
        }
        let mut seen = BTreeSet::from([a, b, c]);
        let mut queue = VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            for d in g.neighbors(v) {
                if seen.contains(&d) || !is(g, v, d, Mark::Arrow) {
                    continue;
                }
                if !g.is_adjacent(d, c) {
                    return Some((d, a));
                }
                // d extends the path only as a collider that is a parent of c
                if directed(g, d, c) && is(g, d, v, Mark::Arrow) {
                    seen.insert(d);
                    queue.push_back(d);
                }
            }
        }
    }
    None
}

pub fn rule_r4(g: &mut MixedGraph, sepsets: &SepsetMap) -> bool {
    let mut changed = false;
    for (b, c) in edge_list(g) {
        if !is(g, b, c, Mark::Circle) {
            continue;
        }
        let Some((d, a)) = discriminating_path(g, b, c) else {
            continue;
        };
        let Some(s) = sepsets.get(d, c) else { continue };
        if s.contains(&b) {
            changed |= resolve(g, b, c, Mark::Tail);
            changed |= resolve(g, c, b, Mark::Arrow);
        } else {
            changed |= resolve(g, b, a, Mark::Arrow);
            changed |= resolve(g, b, c, Mark::Arrow);
            changed |= resolve(g, c, b, Mark::Arrow);
        }
    }
    changed
}

pub fn rule_r8(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in edge_list(g) {
        if !(is(g, a, c, Mark::Circle) && is(g, c, a, Mark::Arrow)) {
            continue;
        }
        let fires = g.neighbors(a).any(|b| {
            b != c
                && directed(g, b, c)
                && is(g, a, b, Mark::Tail)
                && matches!(mark(g, b, a), Some(Mark::Arrow) | Some(Mark::Circle))
        });
        if fires {
            changed |= resolve(g, a, c, Mark::Tail);
        }
    }
    changed
}

/// Nodes reachable from `a` by uncovered potentially directed paths whose
/// second node is `first`, never passing through nodes in `avoid`.
/// `first` itself is included.
fn upd_reach(g: &MixedGraph, a: usize, first: usize, avoid: &[usize]) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    if !potentially_directed(g, a, first) || avoid.contains(&first) {
        return out;
    }
    out.insert(first);
    let mut seen = BTreeSet::from([(a, first)]);
    let mut queue = VecDeque::from([(a, first)]);
    while let Some((u, v)) = queue.pop_front() {
        for w in g.neighbors(v) {
            if w == u || w == a || avoid.contains(&w) || g.is_adjacent(u, w) {
                continue;
            }
            if potentially_directed(g, v, w) && seen.insert((v, w)) {
                out.insert(w);
                queue.push_back((v, w));
            }
        }
    }
    out
}

pub fn rule_r9(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in edge_list(g) {
        if !(is(g, a, c, Mark::Circle) && is(g, c, a, Mark::Arrow)) {
            continue;
        }
        let fires = g.neighbors(a).any(|b| {
            b != c && !g.is_adjacent(b, c) && upd_reach(g, a, b, &[]).contains(&c)
        });
        if fires {
            changed |= resolve(g, a, c, Mark::Tail);
        }
    }
    changed
}

pub fn rule_r10(g: &mut MixedGraph) -> bool {
    let mut changed = false;
    for (a, c) in edge_list(g) {
        if !(is(g, a, c, Mark::Circle) && is(g, c, a, Mark::Arrow)) {
            continue;
        }
        let parents: Vec<usize> = g.neighbors(c).filter(|&x| x != a && directed(g, x, c)).collect();
        if parents.len() < 2 {
            continue;
        }
        let starts: Vec<(usize, BTreeSet<usize>)> = g
            .neighbors(a)
            .filter(|&m| m != c)
            .map(|m| (m, upd_reach(g, a, m, &[c])))
            .filter(|(_, r)| !r.is_empty())
            .collect();
        let mut fires = false;
        'pairs: for (x, &b) in parents.iter().enumerate() {
            for &d in &parents[x + 1..] {
                for (mu, reach_mu) in &starts {
                    for (omega, reach_omega) in &starts {
                        if mu == omega || g.is_adjacent(*mu, *omega) {
                            continue;
                        }
                        if reach_mu.contains(&b) && reach_omega.contains(&d) {
                            fires = true;
                            break 'pairs;
                        }
                    }
                }
            }
        }
        if fires {
            changed |= resolve(g, a, c, Mark::Tail);
        }
    }
    changed
}

/// Applies the enabled rules until none changes a mark. Returns the number of
/// passes in which something changed.
pub fn apply_fci_rules(g: &mut MixedGraph, sepsets: &SepsetMap, rules: &RuleSet) -> usize {
    let mut passes = 0;
    loop {
        let mut changed = false;
        if rules.r1 {
            changed |= rule_r1(g);
        }
        if rules.r2 {
            changed |= rule_r2(g);
        }
        if rules.r3 {
            changed |= rule_r3(g);
        }
        if rules.r4 {
            changed |= rule_r4(g, sepsets);
        }
        if rules.r8 {
            changed |= rule_r8(g);
        }
        if rules.r9 {
            changed |= rule_r9(g);
        }
        if rules.r10 {
            changed |= rule_r10(g);
        }
        if !changed {
            return passes;
        }
        passes += 1;
    }
}

/// Neighborhood rules on pairs sharing a neighborhood. Returns the within-neighborhood
/// bidirected pairs left in place.
pub fn apply_rn(g: &mut MixedGraph, nbs: &NeighborSets) -> Vec<(usize, usize)> {
    let mut bidirected = Vec::new();
    for (i, j, mi, mj) in g.edges() {
        if !nbs.share_neighborhood(i, j) {
            continue;
        }
        match (mi, mj) {
            (Mark::Circle, Mark::Circle) => {
                g.set_mark_at(i, j, Mark::Tail);
                g.set_mark_at(j, i, Mark::Tail);
            }
            (Mark::Circle, Mark::Arrow) => g.set_mark_at(i, j, Mark::Tail),
            (Mark::Arrow, Mark::Circle) => g.set_mark_at(j, i, Mark::Tail),
            (Mark::Arrow, Mark::Arrow) => bidirected.push((i, j)),
            _ => {}
        }
    }
    bidirected
}
