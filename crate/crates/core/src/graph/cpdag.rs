//! CPDAG construction: skeleton, v-structures, Meek closure.
//!
//! Directed edges are `Tail -> Arrow`, undirected edges `Tail - Tail`.
//! Edges with any other marks (for instance conflict-produced `<->`) are left
//! alone by the Meek rules.

use super::{Dag, MixedGraph};

/// CPDAG of a DAG: compelled edges directed, reversible edges undirected.
pub fn cpdag(g: &Dag) -> MixedGraph {
    let mut out = MixedGraph::new(g.p());
    if let Some(names) = g.names() {
        out.set_names(names.to_vec()).expect("names already validated");
    }
    for (i, j, _, _) in g.edges() {
        out.add_undirected(i, j);
    }
    orient_dag_v_structures(g, &mut out);
    meek_closure(&mut out);
    out
}

/// Orients every v-structure `a -> k <- b` of `g` in the undirected copy `out`.
pub fn orient_dag_v_structures(g: &Dag, out: &mut MixedGraph) {
    for k in 0..g.p() {
        let parents: Vec<usize> = g.parents(k).into_iter().collect();
        for (x, &a) in parents.iter().enumerate() {
            for &b in &parents[x + 1..] {
                if !g.is_adjacent(a, b) {
                    out.add_directed(a, k);
                    out.add_directed(b, k);
                }
            }
        }
    }
}

/// Applies Meek rules R1-R4 until none fires. Returns the number of edges oriented.
pub fn meek_closure(g: &mut MixedGraph) -> usize {
    let mut oriented = 0;
    loop {
        let mut changed = false;
        for (a, b, _, _) in g.edges() {
            for (x, y) in [(a, b), (b, a)] {
                if g.is_undirected(x, y) && meek_orients(g, x, y) {
                    g.add_directed(x, y);
                    oriented += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            return oriented;
        }
    }
}

/// Whether one of the four Meek rules orients the undirected edge `x - y` as `x -> y`.
fn meek_orients(g: &MixedGraph, x: usize, y: usize) -> bool {
    // R1: w -> x - y, w and y non-adjacent
    if g
        .neighbors(x)
        .any(|w| w != y && g.is_directed(w, x) && !g.is_adjacent(w, y))
    {
        return true;
    }
    // R2: x -> w -> y
    if g
        .neighbors(x)
        .any(|w| w != y && g.is_directed(x, w) && g.is_directed(w, y))
    {
        return true;
    }
    // R3: x - c -> y, x - d -> y, c and d non-adjacent
    let mids: Vec<usize> = g
        .neighbors(x)
        .filter(|&c| c != y && g.is_undirected(x, c) && g.is_directed(c, y))
        .collect();
    for (i, &c) in mids.iter().enumerate() {
        if mids[i + 1..].iter().any(|&d| !g.is_adjacent(c, d)) {
            return true;
        }
    }
    // R4: x - c -> d -> y, x adjacent to d, c and y non-adjacent
    for c in g.neighbors(x) {
        if c == y || !g.is_undirected(x, c) || g.is_adjacent(c, y) {
            continue;
        }
        for d in g.neighbors(c) {
            if d != x && d != y && g.is_directed(c, d) && g.is_directed(d, y) && g.is_adjacent(x, d)
            {
                return true;
            }
        }
    }
    false
}
