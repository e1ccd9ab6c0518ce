//! JSON interchange: `{"p": 3, "names": [...], "edges": [[i, j, "t", "a"], ...]}`.
//!
//! Marks are `"t"` (tail), `"a"` (arrowhead) and `"c"` (circle). Edges are
//! written sorted by their unordered pair; a directed edge is always written
//! tail first so DAG files only contain `["t", "a"]` pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Mark, MixedGraph};
use crate::error::{Error, Result};

pub const MARK_TAIL: &str = "t";
pub const MARK_ARROW: &str = "a";
pub const MARK_CIRCLE: &str = "c";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub p: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub edges: Vec<(usize, usize, String, String)>,
}

fn mark_str(m: Mark) -> &'static str {
    match m {
        Mark::Tail => MARK_TAIL,
        Mark::Arrow => MARK_ARROW,
        Mark::Circle => MARK_CIRCLE,
    }
}

fn parse_mark(s: &str) -> Result<Mark> {
    match s {
        MARK_TAIL => Ok(Mark::Tail),
        MARK_ARROW => Ok(Mark::Arrow),
        MARK_CIRCLE => Ok(Mark::Circle),
        other => Err(Error::Parse(format!("unknown edge mark '{other}'"))),
    }
}

impl From<&MixedGraph> for GraphJson {
    fn from(g: &MixedGraph) -> Self {
        let edges = g
            .edges()
            .into_iter()
            .map(|(i, j, mi, mj)| {
                if (mi, mj) == (Mark::Arrow, Mark::Tail) {
                    (j, i, mark_str(mj).to_string(), mark_str(mi).to_string())
                } else {
                    (i, j, mark_str(mi).to_string(), mark_str(mj).to_string())
                }
            })
            .collect();
        GraphJson {
            p: g.p(),
            names: g.names().map(<[String]>::to_vec),
            edges,
        }
    }
}

impl TryFrom<GraphJson> for MixedGraph {
    type Error = Error;

    fn try_from(doc: GraphJson) -> Result<Self> {
        let mut g = MixedGraph::new(doc.p);
        if let Some(names) = doc.names {
            g.set_names(names)?;
        }
        for (i, j, mi, mj) in doc.edges {
            g.check_node(i)?;
            g.check_node(j)?;
            if i == j {
                return Err(Error::Parse(format!("self-loop at node {i}")));
            }
            if g.is_adjacent(i, j) {
                return Err(Error::Parse(format!("duplicate edge {i}-{j}")));
            }
            g.add_edge(i, j, parse_mark(&mi)?, parse_mark(&mj)?);
        }
        Ok(g)
    }
}

impl MixedGraph {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphJson::from(self)).expect("graph serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GraphJson = serde_json::from_str(text)?;
        MixedGraph::try_from(doc)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        MixedGraph::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn directed_edges_are_written_tail_first() {
        let mut g = MixedGraph::new(3);
        g.add_directed(2, 0);
        g.add_edge(0, 1, Mark::Circle, Mark::Arrow);
        assert_eq!(
            g.to_json(),
            r#"{"p":3,"edges":[[0,1,"c","a"],[2,0,"t","a"]]}"#
        );
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(MixedGraph::from_json(r#"{"p":2,"edges":[[0,0,"t","a"]]}"#).is_err());
        assert!(MixedGraph::from_json(r#"{"p":2,"edges":[[0,5,"t","a"]]}"#).is_err());
        assert!(MixedGraph::from_json(r#"{"p":2,"edges":[[0,1,"t","x"]]}"#).is_err());
        assert!(
            MixedGraph::from_json(r#"{"p":2,"edges":[[0,1,"t","a"],[1,0,"t","a"]]}"#).is_err()
        );
        assert!(MixedGraph::from_json(r#"{"p":2,"edges":[],"extra":1}"#).is_err());
    }

    fn mark_strategy() -> impl Strategy<Value = Mark> {
        prop_oneof![Just(Mark::Tail), Just(Mark::Arrow), Just(Mark::Circle)]
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(
            p in 1usize..9,
            raw in proptest::collection::vec((0usize..9, 0usize..9, mark_strategy(), mark_strategy()), 0..20),
            named in any::<bool>(),
        ) {
            let mut g = MixedGraph::new(p);
            if named {
                g.set_names((0..p).map(|i| format!("v{i}")).collect()).unwrap();
            }
            for (i, j, mi, mj) in raw {
                if i < p && j < p && i != j {
                    g.add_edge(i, j, mi, mj);
                }
            }
            let text = g.to_json();
            let back = MixedGraph::from_json(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(back.to_json(), text);
        }
    }
}
