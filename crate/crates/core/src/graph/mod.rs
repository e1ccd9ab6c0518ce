//! Endpoint-marked mixed graphs.
//!
//! A single [`MixedGraph`] type represents DAGs, MAGs, PAGs and CPDAGs: every
//! edge carries one [`Mark`] at each endpoint. Nodes are plain indices in
//! `0..p`; names are metadata only.

mod cpdag;
mod io;
mod mag;
mod separation;

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::ops::Deref;

use crate::error::{Error, Result};

pub use cpdag::{cpdag, meek_closure, orient_dag_v_structures};
pub use io::{GraphJson, MARK_ARROW, MARK_CIRCLE, MARK_TAIL};
pub use mag::{
    between_neighborhood_pairs, check_assumption_inp, ground_truth_mag, neighborhoods,
    validate_mag,
};
pub(crate) use separation::connected as separation_connected;
pub use separation::{
    ancestors, ancestor_mask, d_separated, inducing_path_exists, is_ancestral, m_separated,
};

/// Graphs with at most this many nodes keep a dense endpoint table.
pub const DENSE_NODE_LIMIT: usize = 2048;

/// Mark at one endpoint of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mark {
    Tail,
    Arrow,
    Circle,
}

impl Mark {
    fn code(self) -> u8 {
        match self {
            Mark::Tail => 1,
            Mark::Arrow => 2,
            Mark::Circle => 3,
        }
    }

    fn from_code(code: u8) -> Option<Mark> {
        match code {
            1 => Some(Mark::Tail),
            2 => Some(Mark::Arrow),
            3 => Some(Mark::Circle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum EndpointStore {
    /// `marks[i * p + j]` is the mark at `j` on the edge `i *-* j`, 0 when absent.
    Dense(Vec<u8>),
    /// `marks[i][j]` is the mark at `j` on the edge `i *-* j`.
    Sparse(Vec<HashMap<usize, Mark>>),
}

/// Mixed graph over nodes `0..p` with an endpoint mark on both ends of every edge.
///
/// Edge presence is symmetric and each unordered pair holds at most one edge.
/// Adjacency and mark lookups are O(1); neighbor iteration is in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixedGraph {
    p: usize,
    names: Option<Vec<String>>,
    store: EndpointStore,
    nbrs: Vec<BTreeSet<usize>>,
}

impl MixedGraph {
    pub fn new(p: usize) -> Self {
        let store = if p <= DENSE_NODE_LIMIT {
            EndpointStore::Dense(vec![0; p * p])
        } else {
            EndpointStore::Sparse(vec![HashMap::new(); p])
        };
        MixedGraph {
            p,
            names: None,
            store,
            nbrs: vec![BTreeSet::new(); p],
        }
    }

    /// Complete graph over `nodes` with the given mark at every endpoint.
    pub fn complete(p: usize, nodes: &BTreeSet<usize>, mark: Mark) -> Self {
        let mut g = MixedGraph::new(p);
        let nodes: Vec<usize> = nodes.iter().copied().collect();
        for (a, &i) in nodes.iter().enumerate() {
            for &j in &nodes[a + 1..] {
                g.add_edge(i, j, mark, mark);
            }
        }
        g
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Display name of node `i`, falling back to its index.
    pub fn name(&self, i: usize) -> String {
        match &self.names {
            Some(names) => names[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn set_names(&mut self, names: Vec<String>) -> Result<()> {
        if names.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} nodes",
                names.len(),
                self.p
            )));
        }
        let unique: BTreeSet<&String> = names.iter().collect();
        if unique.len() != names.len() {
            return Err(Error::Parse("node names must be unique".into()));
        }
        self.names = Some(names);
        Ok(())
    }

    pub fn clear_names(&mut self) {
        self.names = None;
    }

    /// Index of the node called `name`, if names are bound.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.as_ref()?.iter().position(|n| n == name)
    }

    pub fn check_node(&self, i: usize) -> Result<()> {
        if i < self.p {
            Ok(())
        } else {
            Err(Error::InvalidNode { index: i, p: self.p })
        }
    }

    /// Mark at node `at` on the edge between `at` and `other`.
    pub fn mark_at(&self, at: usize, other: usize) -> Option<Mark> {
        match &self.store {
            EndpointStore::Dense(m) => Mark::from_code(m[other * self.p + at]),
            EndpointStore::Sparse(m) => m[other].get(&at).copied(),
        }
    }

    /// Marks `(at i, at j)` of the edge between `i` and `j`.
    pub fn edge(&self, i: usize, j: usize) -> Option<(Mark, Mark)> {
        Some((self.mark_at(i, j)?, self.mark_at(j, i)?))
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.mark_at(j, i).is_some()
    }

    /// Adds (or replaces) the edge `i *-* j` with mark `mi` at `i` and `mj` at `j`.
    ///
    /// Panics on out-of-range indices or self-loops.
    pub fn add_edge(&mut self, i: usize, j: usize, mi: Mark, mj: Mark) {
        assert!(i < self.p && j < self.p, "node index out of range");
        assert_ne!(i, j, "self-loops are not allowed");
        self.write(i, j, Some(mj));
        self.write(j, i, Some(mi));
        self.nbrs[i].insert(j);
        self.nbrs[j].insert(i);
    }

    pub fn add_directed(&mut self, from: usize, to: usize) {
        self.add_edge(from, to, Mark::Tail, Mark::Arrow);
    }

    pub fn add_undirected(&mut self, i: usize, j: usize) {
        self.add_edge(i, j, Mark::Tail, Mark::Tail);
    }

    pub fn add_bidirected(&mut self, i: usize, j: usize) {
        self.add_edge(i, j, Mark::Arrow, Mark::Arrow);
    }

    /// Sets the mark at `at` on an existing edge. Panics if the edge is absent.
    pub fn set_mark_at(&mut self, at: usize, other: usize, mark: Mark) {
        assert!(self.is_adjacent(at, other), "edge {at}-{other} absent");
        self.write(other, at, Some(mark));
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> bool {
        if !self.is_adjacent(i, j) {
            return false;
        }
        self.write(i, j, None);
        self.write(j, i, None);
        self.nbrs[i].remove(&j);
        self.nbrs[j].remove(&i);
        true
    }

    // row `from`, column `at`
    fn write(&mut self, from: usize, at: usize, mark: Option<Mark>) {
        match &mut self.store {
            EndpointStore::Dense(m) => m[from * self.p + at] = mark.map_or(0, Mark::code),
            EndpointStore::Sparse(m) => match mark {
                Some(mark) => {
                    m[from].insert(at, mark);
                }
                None => {
                    m[from].remove(&at);
                }
            },
        }
    }

    /// Neighbors of `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.nbrs[i].iter().copied()
    }

    pub fn neighbor_set(&self, i: usize) -> &BTreeSet<usize> {
        &self.nbrs[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.nbrs[i].len()
    }

    /// True for `i -> j` (tail at `i`, arrowhead at `j`).
    pub fn is_directed(&self, i: usize, j: usize) -> bool {
        self.edge(i, j) == Some((Mark::Tail, Mark::Arrow))
    }

    pub fn is_undirected(&self, i: usize, j: usize) -> bool {
        self.edge(i, j) == Some((Mark::Tail, Mark::Tail))
    }

    pub fn is_bidirected(&self, i: usize, j: usize) -> bool {
        self.edge(i, j) == Some((Mark::Arrow, Mark::Arrow))
    }

    /// Nodes `j` with `j -> i`.
    pub fn parents(&self, i: usize) -> BTreeSet<usize> {
        self.neighbors(i).filter(|&j| self.is_directed(j, i)).collect()
    }

    /// Nodes `j` with `i -> j`.
    pub fn children(&self, i: usize) -> BTreeSet<usize> {
        self.neighbors(i).filter(|&j| self.is_directed(i, j)).collect()
    }

    /// All edges as `(i, j, mark at i, mark at j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, Mark, Mark)> {
        let mut out = Vec::new();
        for i in 0..self.p {
            for j in self.nbrs[i].range(i + 1..) {
                let (mi, mj) = self.edge(i, *j).expect("neighbor lists are consistent");
                out.push((i, *j, mi, mj));
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        self.nbrs.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Subgraph keeping only edges with both endpoints in `nodes`; indices are unchanged.
    pub fn restrict(&self, nodes: &BTreeSet<usize>) -> MixedGraph {
        let mut g = MixedGraph::new(self.p);
        g.names = self.names.clone();
        for (i, j, mi, mj) in self.edges() {
            if nodes.contains(&i) && nodes.contains(&j) {
                g.add_edge(i, j, mi, mj);
            }
        }
        g
    }

    /// Same node count, same edges with same marks (names ignored).
    pub fn same_edges(&self, other: &MixedGraph) -> bool {
        self.p == other.p && self.edges() == other.edges()
    }

    /// Unordered adjacent pairs `(i, j)`, `i < j`.
    pub fn skeleton(&self) -> BTreeSet<(usize, usize)> {
        self.edges().into_iter().map(|(i, j, _, _)| (i, j)).collect()
    }

    /// Nodes touched by at least one edge.
    pub fn non_isolated(&self) -> BTreeSet<usize> {
        (0..self.p).filter(|&i| !self.nbrs[i].is_empty()).collect()
    }

    /// True if the `Tail -> Arrow` edges contain a directed cycle.
    pub fn has_directed_cycle(&self) -> bool {
        self.topological_order().is_none()
    }

    /// Topological order of the directed part (Kahn, smallest index first).
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.p];
        for i in 0..self.p {
            indeg[i] = self.parents(i).len();
        }
        let mut ready: BTreeSet<usize> = (0..self.p).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(self.p);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for c in self.children(i) {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        (order.len() == self.p).then_some(order)
    }

    /// Nodes reachable from `start` along edges accepted by `step(from, to)`.
    pub(crate) fn reach(&self, start: &[usize], step: impl Fn(usize, usize) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.p];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &s in start {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if !seen[w] && step(v, w) {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }
}

/// A graph whose edges are all `Tail -> Arrow` and contain no directed cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    graph: MixedGraph,
    order: Vec<usize>,
}

impl Dag {
    pub fn new(graph: MixedGraph) -> Result<Self> {
        for (i, j, mi, mj) in graph.edges() {
            let directed = matches!((mi, mj), (Mark::Tail, Mark::Arrow) | (Mark::Arrow, Mark::Tail));
            if !directed {
                return Err(Error::NotADag(format!("edge {i}-{j} is not directed")));
            }
        }
        let order = graph.topological_order().ok_or(Error::CyclicInput)?;
        Ok(Dag { graph, order })
    }

    /// Builds a DAG from `(from, to)` pairs.
    pub fn from_edges(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = MixedGraph::new(p);
        for &(a, b) in edges {
            g.check_node(a)?;
            g.check_node(b)?;
            if a == b {
                return Err(Error::CyclicInput);
            }
            if g.is_adjacent(a, b) {
                if g.is_directed(b, a) {
                    return Err(Error::CyclicInput);
                }
                continue;
            }
            g.add_directed(a, b);
        }
        Dag::new(g)
    }

    pub fn graph(&self) -> &MixedGraph {
        &self.graph
    }

    pub fn into_graph(self) -> MixedGraph {
        self.graph
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        self.graph.set_names(names)?;
        Ok(self)
    }

    /// Parents, children and spouses of `i`.
    pub fn markov_blanket(&self, i: usize) -> Result<BTreeSet<usize>> {
        self.graph.check_node(i)?;
        let mut mb = self.graph.parents(i);
        for c in self.graph.children(i) {
            mb.insert(c);
            mb.extend(self.graph.parents(c));
        }
        mb.remove(&i);
        Ok(mb)
    }
}

impl Deref for Dag {
    type Target = MixedGraph;

    fn deref(&self) -> &MixedGraph {
        &self.graph
    }
}

/// Free-function form of [`Dag::markov_blanket`].
pub fn markov_blanket(g: &Dag, i: usize) -> Result<BTreeSet<usize>> {
    g.markov_blanket(i)
}

/// Non-empty set of distinct, valid target nodes (kept sorted).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TargetSpec(Vec<usize>);

impl TargetSpec {
    pub fn new(targets: impl IntoIterator<Item = usize>, p: usize) -> Result<Self> {
        let raw: Vec<usize> = targets.into_iter().collect();
        if raw.is_empty() {
            return Err(Error::InvalidTargets("target set is empty".into()));
        }
        let set: BTreeSet<usize> = raw.iter().copied().collect();
        if set.len() != raw.len() {
            return Err(Error::InvalidTargets("targets must be distinct".into()));
        }
        if let Some(&bad) = set.iter().find(|&&t| t >= p) {
            return Err(Error::InvalidTargets(format!(
                "target {bad} out of range for {p} nodes"
            )));
        }
        Ok(TargetSpec(set.into_iter().collect()))
    }

    /// Resolves comma-separated tokens: a token naming a node refers to it,
    /// otherwise it is read as a 0-based index.
    pub fn parse(text: &str, g: &MixedGraph) -> Result<Self> {
        let mut out = Vec::new();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let idx = match g.index_of(tok) {
                Some(i) => i,
                None => tok
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidTargets(format!("unknown target '{tok}'")))?,
            };
            out.push(idx);
        }
        TargetSpec::new(out, g.p())
    }

    pub fn nodes(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, t: usize) -> bool {
        self.0.binary_search(&t).is_ok()
    }

    /// Names joined by `;` for reports.
    pub fn label(&self, g: &MixedGraph) -> String {
        self.0.iter().map(|&t| g.name(t)).collect::<Vec<_>>().join(";")
    }
}
