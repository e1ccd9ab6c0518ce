//! Level-wise, order-independent edge removal.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::SepsetMap;
use crate::ci::CachedTester;
use crate::error::Result;
use crate::graph::MixedGraph;
use crate::subsets::for_each_subset;

/// Conditioning sets of size `k` drawn from any of `pools`, deduplicated and
/// in lexicographic order.
pub(crate) fn level_candidates(pools: &[Vec<usize>], k: usize) -> Vec<Vec<usize>> {
    let mut out = BTreeSet::new();
    for pool in pools {
        for_each_subset(pool, k, |s| {
            out.insert(s.to_vec());
            false
        });
    }
    out.into_iter().collect()
}

/// Removes edges level by level (`|S| = 0..=lmax`).
///
/// At each level the adjacency is frozen: `pools` sees the graph as it was at
/// the start of the level, edges are tested in parallel and removals applied
/// afterwards in edge order. Only edges accepted by `eligible` are tested.
/// Stops early once no tested edge has a pool large enough for the level.
pub(crate) fn stable_skeleton<E, P>(
    g: &mut MixedGraph,
    sepsets: &mut SepsetMap,
    tests: &CachedTester<'_>,
    alpha: f64,
    lmax: usize,
    eligible: E,
    pools: P,
) -> Result<()>
where
    E: Fn(usize, usize) -> bool + Sync,
    P: Fn(&MixedGraph, usize, usize) -> Vec<Vec<usize>> + Sync,
{
    for level in 0..=lmax {
        let snapshot = g.clone();
        let edges: Vec<(usize, usize)> = snapshot
            .edges()
            .into_iter()
            .map(|(i, j, _, _)| (i, j))
            .filter(|&(i, j)| eligible(i, j))
            .collect();
        let outcomes: Vec<(bool, Option<Vec<usize>>)> = edges
            .par_iter()
            .map(|&(i, j)| {
                let cands = level_candidates(&pools(&snapshot, i, j), level);
                if cands.is_empty() {
                    return Ok((false, None));
                }
                for s in cands {
                    if tests.test(i, j, &s, alpha)?.independent {
                        return Ok((true, Some(s)));
                    }
                }
                Ok((true, None))
            })
            .collect::<Result<_>>()?;
        let mut active = false;
        for (&(i, j), (tested, sep)) in edges.iter().zip(outcomes) {
            active |= tested;
            if let Some(s) = sep {
                g.remove_edge(i, j);
                sepsets.insert(i, j, s);
            }
        }
        if !active {
            break;
        }
    }
    Ok(())
}

/// `(adj(i) ∪ adj(j)) \ {i, j}` in `g`.
pub(crate) fn union_pool(g: &MixedGraph, i: usize, j: usize) -> Vec<Vec<usize>> {
    let u: BTreeSet<usize> = g
        .neighbors(i)
        .chain(g.neighbors(j))
        .filter(|&k| k != i && k != j)
        .collect();
    vec![u.into_iter().collect()]
}

/// `adj(i) \ {j}` and `adj(j) \ {i}` in `g`.
pub(crate) fn adjacency_pools(g: &MixedGraph, i: usize, j: usize) -> Vec<Vec<usize>> {
    vec![
        g.neighbors(i).filter(|&k| k != j).collect(),
        g.neighbors(j).filter(|&k| k != i).collect(),
    ]
}
