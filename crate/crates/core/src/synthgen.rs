//! Synthetic multi-relational graphs whose node values follow the relational
//! generative model exactly on a spanning tree.
//!
//! Sampling order, all from one [`Rng`] seeded with `spec.seed`:
//!
//! 1. a Prüfer sequence of `node_count - 2` draws `below(node_count)`,
//!    decoded (smallest leaf first) into a uniformly random labeled tree;
//! 2. breadth-first traversal from node 0, neighbors in ascending order;
//!    each discovered `(parent, child)` is a tree edge oriented
//!    `parent -> child`;
//! 3. root value `root_value_mean + root_value_std * normal()`;
//! 4. for each tree edge in discovery order: relation `below(R)`, then
//!    `x_child = eta * x_parent + tau + sigma * normal()`;
//! 5. for each relation in order, `extra_edge_count` non-tree edges, each
//!    drawn as `src = below(N)`, `dst = below(N)` and redrawn while it is a
//!    self-loop or already present.
//!
//! The model is exact on tree edges only; the extra edges close loops and
//! the model holds there only approximately.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, MultiRelationalGraph, NodeValueMap};
use crate::relparams::{RelationParams, OMEGA_MAX, OMEGA_MIN};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRelation {
    pub name: String,
    pub eta: f64,
    pub tau: f64,
    pub sigma: f64,
    #[serde(default)]
    pub extra_edge_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub node_count: usize,
    pub relations: Vec<SynthRelation>,
    #[serde(default)]
    pub root_value_mean: f64,
    #[serde(default)]
    pub root_value_std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.node_count < 2 {
            return bad(format!(
                "node_count must be at least 2, got {}",
                self.node_count
            ));
        }
        if self.relations.is_empty() {
            return bad("at least one relation is required".into());
        }
        if !self.root_value_mean.is_finite()
            || !(self.root_value_std.is_finite() && self.root_value_std >= 0.0)
        {
            return bad("root value mean/std must be finite, std non-negative".into());
        }
        for (k, r) in self.relations.iter().enumerate() {
            if r.name.is_empty() || r.name.contains(['\t', ',', '\n']) {
                return bad(format!("relation #{k}: invalid name `{}`", r.name));
            }
            if self.relations[..k].iter().any(|o| o.name == r.name) {
                return bad(format!("duplicate relation name `{}`", r.name));
            }
            if !(r.eta.is_finite() && r.eta > 0.0) {
                return bad(format!("relation `{}`: eta must be positive", r.name));
            }
            if !r.tau.is_finite() {
                return bad(format!("relation `{}`: tau must be finite", r.name));
            }
            if !(r.sigma.is_finite() && r.sigma >= 0.0) {
                return bad(format!(
                    "relation `{}`: sigma must be finite and >= 0",
                    r.name
                ));
            }
        }
        Ok(())
    }

    /// Generating parameters as a relation-indexed parameter set; `omega`
    /// is `1 / sigma^2`, clamped to the admissible range.
    pub fn truth_params(&self) -> Vec<RelationParams> {
        self.relations
            .iter()
            .map(|r| RelationParams {
                eta: r.eta,
                tau: r.tau,
                omega: (1.0 / (r.sigma * r.sigma)).clamp(OMEGA_MIN, OMEGA_MAX),
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub graph: MultiRelationalGraph,
    /// Every node valued.
    pub values: NodeValueMap,
    /// The first `tree_edge_count` stored edges form the spanning tree.
    pub tree_edge_count: usize,
}

/// Undirected edges of the tree encoded by a Prüfer sequence.
fn prufer_decode(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &v in seq {
        degree[v] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &v in seq {
        let Reverse(leaf) = leaves.pop().expect("a tree always has a leaf");
        edges.push((leaf, v));
        degree[v] -= 1;
        if degree[v] == 1 {
            leaves.push(Reverse(v));
        }
    }
    let Reverse(a) = leaves.pop().expect("two leaves remain");
    let Reverse(b) = leaves.pop().expect("two leaves remain");
    edges.push((a, b));
    edges
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let n = spec.node_count;
    let mut rng = Rng::seed_from_u64(spec.seed);

    let seq: Vec<usize> = (0..n - 2).map(|_| rng.below(n)).collect();
    let mut adjacency = vec![Vec::new(); n];
    for (a, b) in prufer_decode(&seq, n) {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    let mut tree = Vec::with_capacity(n - 1);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                tree.push((v, w));
                queue.push_back(w);
            }
        }
    }

    let mut x = vec![0.0; n];
    x[0] = spec.root_value_mean + spec.root_value_std * rng.normal();

    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_node(&format!("n{i}"));
    }
    for r in &spec.relations {
        b.add_relation(&r.name, false);
    }
    for &(parent, child) in &tree {
        let rel = rng.below(spec.relations.len());
        let r = &spec.relations[rel];
        x[child] = r.eta * x[parent] + r.tau + r.sigma * rng.normal();
        b.add_edge_by_index(parent, rel, child)?;
    }

    for (rel, r) in spec.relations.iter().enumerate() {
        for _ in 0..r.extra_edge_count {
            let mut attempts = 0usize;
            loop {
                attempts += 1;
                if attempts > 10_000 {
                    return Err(Error::InvalidParameter(format!(
                        "relation `{}`: could not place {} extra edges",
                        r.name, r.extra_edge_count
                    )));
                }
                let src = rng.below(n);
                let dst = rng.below(n);
                if src != dst && !b.contains_edge(src, rel, dst) {
                    b.add_edge_by_index(src, rel, dst)?;
                    break;
                }
            }
        }
    }

    Ok(SynthOutput {
        graph: b.build(),
        values: NodeValueMap::from_dense(&x)?,
        tree_edge_count: tree.len(),
    })
}
