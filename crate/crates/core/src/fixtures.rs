//! Small reference networks used by tests, docs and the CLI.

use crate::graph::Dag;

/// Edge list of the 13-node two-neighborhood network, 1-based node labels.
pub const TWO_NEIGHBORHOOD_EDGES: [(usize, usize); 14] = [
    (1, 3),
    (2, 3),
    (3, 4),
    (3, 5),
    (4, 6),
    (6, 11),
    (8, 7),
    (8, 10),
    (9, 8),
    (11, 9),
    (12, 2),
    (12, 9),
    (13, 1),
    (13, 2),
];

/// The 13-node network with nodes named `"1"` to `"13"` (node `k` has index `k - 1`).
///
/// With targets `{3, 8}` the neighborhoods are `{1,2,3,4,5}` and `{7,8,9,10}`;
/// `{6,11,12,13}` are second-order neighbors.
pub fn two_neighborhood_dag() -> Dag {
    let edges: Vec<(usize, usize)> = TWO_NEIGHBORHOOD_EDGES
        .iter()
        .map(|&(a, b)| (a - 1, b - 1))
        .collect();
    Dag::from_edges(13, &edges)
        .and_then(|g| g.with_names((1..=13).map(|k| k.to_string()).collect()))
        .expect("fixture is a valid DAG")
}

/// Index of the node labelled `k` in [`two_neighborhood_dag`].
pub const fn node(k: usize) -> usize {
    k - 1
}
