//! Seeded random graph family shared by the acceptance checks.

use mrp_core::rng::Rng;
use mrp_core::{GraphBuilder, MultiRelationalGraph, NodeValueMap, RelationParams};

pub struct Case {
    pub graph: MultiRelationalGraph,
    pub params: Vec<RelationParams>,
    pub labels: NodeValueMap,
}

fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_f64()
}

/// 10-30 nodes, 1-3 directed relations, about 1.5 edges per node,
/// `eta` in [0.5, 2], `tau` in [-5, 5], `omega` in [0.1, 10], roughly 40%
/// of nodes labeled and at least one label in every connected component.
pub fn random_case(seed: u64) -> Case {
    let mut rng = Rng::seed_from_u64(seed);
    let n = 10 + rng.below(21);
    let r = 1 + rng.below(3);
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_node(&format!("v{i}"));
    }
    for k in 0..r {
        b.add_relation(&format!("r{k}"), false);
    }
    for _ in 0..(3 * n / 2) {
        let (src, dst, rel) = (rng.below(n), rng.below(n), rng.below(r));
        if src != dst && !b.contains_edge(src, rel, dst) {
            b.add_edge_by_index(src, rel, dst).unwrap();
        }
    }
    let graph = b.build();
    let params = (0..r)
        .map(|_| {
            RelationParams::new(
                uniform(&mut rng, 0.5, 2.0),
                uniform(&mut rng, -5.0, 5.0),
                uniform(&mut rng, 0.1, 10.0),
            )
            .unwrap()
        })
        .collect();
    let mut labels = NodeValueMap::new(n);
    for i in 0..n {
        let value = uniform(&mut rng, -10.0, 10.0);
        if rng.next_f64() < 0.4 {
            labels.insert(i, value).unwrap();
        }
    }
    for comp in graph.components() {
        if !comp.iter().any(|&i| labels.contains(i)) {
            labels
                .insert(comp[0], uniform(&mut rng, -10.0, 10.0))
                .unwrap();
        }
    }
    Case {
        graph,
        params,
        labels,
    }
}
