#![allow(dead_code)]

use mrp_core::{GraphBuilder, MultiRelationalGraph, NodeValueMap, RelationParams};
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub struct Case {
    pub graph: MultiRelationalGraph,
    pub params: Vec<RelationParams>,
    pub labels: NodeValueMap,
}

/// Raw material for a case: node count, per-relation symmetry flags and
/// parameters, candidate edges, per-node optional label.
type Raw = (
    usize,
    Vec<(bool, f64, f64, f64)>,
    Vec<(usize, usize, usize)>,
    Vec<Option<f64>>,
);

fn raw(max_nodes: usize) -> impl Strategy<Value = Raw> {
    (2..=max_nodes, 1..=3usize).prop_flat_map(|(n, r)| {
        (
            Just(n),
            prop::collection::vec(
                (
                    prop::bool::weighted(0.3),
                    0.5..2.0f64,
                    -5.0..5.0f64,
                    0.1..10.0f64,
                ),
                r,
            ),
            prop::collection::vec((0..n, 0..n, 0..r), 1..3 * n),
            prop::collection::vec(prop::option::weighted(0.4, -10.0..10.0f64), n),
        )
    })
}

fn build(raw: Raw, label_every_component: bool) -> Case {
    let (n, rels, edges, values) = raw;
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_node(&format!("v{i}"));
    }
    for (k, (symmetric, ..)) in rels.iter().enumerate() {
        b.add_relation(&format!("r{k}"), *symmetric);
    }
    for (src, dst, rel) in edges {
        if src != dst && !b.contains_edge(src, rel, dst) {
            b.add_edge_by_index(src, rel, dst).unwrap();
        }
    }
    let graph = b.build();
    let params = rels
        .iter()
        .map(|&(symmetric, eta, tau, omega)| {
            // a symmetric relation only makes sense as a pure noise model
            if symmetric {
                RelationParams::new(1.0, 0.0, omega).unwrap()
            } else {
                RelationParams::new(eta, tau, omega).unwrap()
            }
        })
        .collect();
    let mut labels = NodeValueMap::new(n);
    for (i, v) in values.iter().enumerate() {
        if let Some(v) = v {
            labels.insert(i, *v).unwrap();
        }
    }
    if label_every_component || labels.is_empty() {
        for comp in graph.components() {
            if label_every_component && !comp.iter().any(|&i| labels.contains(i)) {
                labels.insert(comp[0], 1.0 + comp[0] as f64).unwrap();
            }
        }
        if labels.is_empty() {
            labels.insert(0, 1.0).unwrap();
        }
    }
    Case {
        graph,
        params,
        labels,
    }
}

/// Random case with at least one label somewhere.
pub fn arb_case(max_nodes: usize) -> impl Strategy<Value = Case> {
    raw(max_nodes).prop_map(|r| build(r, false))
}

/// Random case with a label in every connected component.
pub fn arb_covered_case(max_nodes: usize) -> impl Strategy<Value = Case> {
    raw(max_nodes).prop_map(|r| build(r, true))
}
