//! Independent reference implementations used by the integration tests.
//! Nothing here calls the library's separation, MAG or regression code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use cml::graph::{Dag, Mark, MixedGraph};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random DAG over a random permutation; each forward pair kept with probability `prob`.
pub fn random_dag(p: usize, prob: f64, rng: &mut ChaCha8Rng) -> Dag {
    let mut order: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for a in 0..p {
        for b in a + 1..p {
            if rng.random_bool(prob) {
                edges.push((order[a], order[b]));
            }
        }
    }
    Dag::from_edges(p, &edges).unwrap()
}

/// Random mixed graph: a random DAG plus random bidirected edges between
/// non-adjacent pairs that are not ancestrally related, so the result is ancestral.
pub fn random_ancestral(p: usize, prob: f64, bi_prob: f64, rng: &mut ChaCha8Rng) -> MixedGraph {
    let dag = random_dag(p, prob, rng);
    let mut g = dag.graph().clone();
    for a in 0..p {
        for b in a + 1..p {
            if !g.is_adjacent(a, b) && rng.random_bool(bi_prob) {
                let anc = |x: usize, y: usize| is_ancestor(&g, x, y);
                if !anc(a, b) && !anc(b, a) {
                    g.add_bidirected(a, b);
                }
            }
        }
    }
    g
}

fn directed(g: &MixedGraph, a: usize, b: usize) -> bool {
    g.edge(a, b) == Some((Mark::Tail, Mark::Arrow))
}

/// `a` is an ancestor of `b` (or equal), by depth-first search over directed edges.
pub fn is_ancestor(g: &MixedGraph, a: usize, b: usize) -> bool {
    let mut seen = vec![false; g.p()];
    let mut stack = vec![a];
    while let Some(v) = stack.pop() {
        if v == b {
            return true;
        }
        if std::mem::replace(&mut seen[v], true) {
            continue;
        }
        for w in 0..g.p() {
            if g.is_adjacent(v, w) && directed(g, v, w) {
                stack.push(w);
            }
        }
    }
    false
}

fn in_ancestors_of(g: &MixedGraph, k: usize, set: &BTreeSet<usize>) -> bool {
    set.iter().any(|&s| is_ancestor(g, k, s))
}

/// Every simple path from `i` to `j`, as node sequences.
pub fn simple_paths(g: &MixedGraph, i: usize, j: usize) -> Vec<Vec<usize>> {
    fn go(g: &MixedGraph, path: &mut Vec<usize>, j: usize, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == j {
            out.push(path.clone());
            return;
        }
        for w in 0..g.p() {
            if g.is_adjacent(v, w) && !path.contains(&w) {
                path.push(w);
                go(g, path, j, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, &mut vec![i], j, &mut out);
    out
}

fn is_collider(g: &MixedGraph, a: usize, k: usize, b: usize) -> bool {
    g.mark_at(k, a) == Some(Mark::Arrow) && g.mark_at(k, b) == Some(Mark::Arrow)
}

/// Separation by enumerating every simple path: a path is open when each
/// collider is an ancestor of a member of `s` and no non-collider is in `s`.
pub fn separated_by_paths(g: &MixedGraph, i: usize, j: usize, s: &BTreeSet<usize>) -> bool {
    simple_paths(g, i, j).iter().all(|path| {
        path.windows(3).any(|w| {
            let (a, k, b) = (w[0], w[1], w[2]);
            if is_collider(g, a, k, b) {
                !in_ancestors_of(g, k, s)
            } else {
                s.contains(&k)
            }
        })
    })
}

/// Inducing path relative to `latent` between `i` and `j` in a DAG, by path
/// enumeration: every intermediate node is either latent and a non-collider,
/// or observed, a collider, and an ancestor of `i` or `j`.
pub fn inducing_path_by_paths(g: &Dag, i: usize, j: usize, latent: &BTreeSet<usize>) -> bool {
    let m = g.graph();
    simple_paths(m, i, j).iter().any(|path| {
        path.windows(3).all(|w| {
            let (a, k, b) = (w[0], w[1], w[2]);
            let collider = is_collider(m, a, k, b);
            if latent.contains(&k) {
                !collider
            } else {
                collider && (is_ancestor(m, k, i) || is_ancestor(m, k, j))
            }
        })
    })
}

/// MAG check from the definitions: directed and bidirected edges only, no
/// directed cycle, no bidirected edge between ancestrally related nodes, and
/// no path between non-adjacent nodes whose intermediates are all colliders
/// and ancestors of an endpoint.
pub fn is_mag_by_definition(g: &MixedGraph) -> bool {
    let p = g.p();
    for (i, j, mi, mj) in g.edges() {
        match (mi, mj) {
            (Mark::Tail, Mark::Arrow) | (Mark::Arrow, Mark::Tail) => {}
            (Mark::Arrow, Mark::Arrow) => {
                if is_ancestor(g, i, j) || is_ancestor(g, j, i) {
                    return false;
                }
            }
            _ => return false,
        }
    }
    for (i, j, _, _) in g.edges() {
        let (from, to) = if directed(g, i, j) { (i, j) } else if directed(g, j, i) { (j, i) } else { continue };
        if is_ancestor(g, to, from) {
            return false;
        }
    }
    for a in 0..p {
        for b in a + 1..p {
            if g.is_adjacent(a, b) {
                continue;
            }
            let inducing = simple_paths(g, a, b).iter().any(|path| {
                path.len() > 2
                    && path.windows(3).all(|w| {
                        is_collider(g, w[0], w[1], w[2]) && (is_ancestor(g, w[1], a) || is_ancestor(g, w[1], b))
                    })
            });
            if inducing {
                return false;
            }
        }
    }
    true
}

/// Partial correlation of columns `i` and `j` given `s`: regress both on the
/// conditioning columns (with intercept) and correlate the residuals.
pub fn partial_corr_by_regression(x: &DMatrix<f64>, i: usize, j: usize, s: &[usize]) -> f64 {
    let n = x.nrows();
    let design = DMatrix::from_fn(n, s.len() + 1, |r, c| if c == 0 { 1.0 } else { x[(r, s[c - 1])] });
    let resid = |col: usize| -> DVector<f64> {
        let y = x.column(col).into_owned();
        let qr = design.clone().qr();
        let beta = qr.r().solve_upper_triangular(&(qr.q().transpose() * &y)).unwrap();
        y - &design * beta
    };
    let (ri, rj) = (resid(i), resid(j));
    ri.dot(&rj) / (ri.norm() * rj.norm())
}

/// All subsets of `items`.
pub fn power_set(items: &[usize]) -> Vec<BTreeSet<usize>> {
    (0..1u32 << items.len())
        .map(|mask| items.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &v)| v).collect())
        .collect()
}

/// Population covariance of a linear SEM from its coefficient matrix and noise sds.
pub fn sem_covariance(b: &DMatrix<f64>, sigma: &[f64]) -> DMatrix<f64> {
    let p = sigma.len();
    let a = (DMatrix::identity(p, p) - b).try_inverse().unwrap();
    let omega = DMatrix::from_diagonal(&DVector::from_iterator(p, sigma.iter().map(|s| s * s)));
    a.transpose() * omega * a
}

/// Unshielded colliders `(a, k, b)` with `a < b` whose arrowheads at `k` are both `Tail -> Arrow` or `<->`.
pub fn unshielded_colliders_at(g: &MixedGraph, k: usize) -> BTreeSet<(usize, usize)> {
    let into: Vec<usize> = g.neighbors(k).filter(|&v| g.mark_at(k, v) == Some(Mark::Arrow)).collect();
    let mut out = BTreeSet::new();
    for (x, &a) in into.iter().enumerate() {
        for &b in &into[x + 1..] {
            if !g.is_adjacent(a, b) {
                out.insert((a.min(b), a.max(b)));
            }
        }
    }
    out
}
