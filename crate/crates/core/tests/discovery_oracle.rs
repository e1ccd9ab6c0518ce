mod common;

use cml::ci::CiTester;
use cml::discovery::{reference_pag, run_cml, run_pc, run_snl, DiscoveryConfig, MbConfig};
use cml::graph::{cpdag, TargetSpec};
use cml::mb::NeighborSets;
use cml::metrics::bne_count;
use rand::Rng;

fn deep(p: usize) -> (MbConfig, DiscoveryConfig) {
    (MbConfig { lmax: p, ..MbConfig::default() }, DiscoveryConfig { lmax: p, ..DiscoveryConfig::default() })
}

#[test]
fn oracle_pc_recovers_the_cpdag() {
    let mut rng = common::rng(41);
    for _ in 0..100 {
        let p = rng.random_range(3..=10);
        let dag = common::random_dag(p, rng.random_range(0.1..0.5), &mut rng);
        let r = run_pc(&CiTester::oracle(dag.clone()), &deep(p).1).unwrap();
        assert!(r.graph.same_edges(&cpdag(&dag)), "edges {:?}", dag.graph().edges());
    }
}

#[test]
fn all_nodes_as_targets_recovers_the_dag_skeleton() {
    let mut rng = common::rng(42);
    for _ in 0..40 {
        let p = rng.random_range(3..=8);
        let dag = common::random_dag(p, rng.random_range(0.2..0.5), &mut rng);
        let targets = TargetSpec::new(0..p, p).unwrap();
        let (mb, dc) = deep(p);
        let r = run_cml(&CiTester::oracle(dag.clone()), &targets, &mb, &dc).unwrap();
        assert_eq!(r.graph.skeleton(), dag.graph().skeleton());
        assert!(r.graph.same_edges(&reference_pag(&dag, &targets).unwrap()));
    }
}

#[test]
fn snl_has_no_within_neighborhood_bidirected_edges_when_neighborhoods_are_disjoint() {
    let mut rng = common::rng(43);
    let mut seen = 0;
    while seen < 40 {
        let p = rng.random_range(6..=12);
        let dag = common::random_dag(p, rng.random_range(0.1..0.3), &mut rng);
        let a = rng.random_range(0..p);
        let b = (a + rng.random_range(1..p)) % p;
        let targets = TargetSpec::new([a, b], p).unwrap();
        let nbs = NeighborSets::from_dag(&dag, &targets).unwrap();
        if !nbs.nb(a).is_disjoint(&nbs.nb(b)) {
            continue;
        }
        seen += 1;
        let (mb, dc) = deep(p);
        let r = run_snl(&CiTester::oracle(dag.clone()), &targets, &mb, &dc).unwrap();
        assert_eq!(bne_count(&r.graph, &nbs), 0, "edges {:?}", dag.graph().edges());
    }
}
