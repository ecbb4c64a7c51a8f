//! Label propagation for continuous values on the union of all edges,
//! ignoring relation types and directions. Kept independent of the
//! multi-relational operator so the two can be checked against each other.

use crate::error::{Error, Result};
use crate::graph::{MultiRelationalGraph, NodeValueMap};

use super::{max_abs_diff, PropagationConfig, PropagationResult, PropagationState};

#[derive(Debug, Clone)]
pub struct LabelPropagation {
    /// Neighbor lists in incidence order; a symmetric edge appears twice.
    neighbors: Vec<Vec<usize>>,
    labels: NodeValueMap,
    config: PropagationConfig,
}

impl LabelPropagation {
    pub fn new(
        graph: &MultiRelationalGraph,
        labels: &NodeValueMap,
        config: &PropagationConfig,
    ) -> Result<Self> {
        config.validate()?;
        if labels.node_count() != graph.node_count() {
            return Err(Error::DimensionMismatch {
                expected: graph.node_count(),
                got: labels.node_count(),
            });
        }
        if labels.is_empty() {
            return Err(Error::NoLabels);
        }
        let neighbors = (0..graph.node_count())
            .map(|i| graph.incident(i).iter().map(|inc| inc.neighbor).collect())
            .collect();
        Ok(Self {
            neighbors,
            labels: labels.clone(),
            config: *config,
        })
    }

    pub fn init_state(&self) -> PropagationState {
        let n = self.neighbors.len();
        let mut state = PropagationState {
            x: vec![0.0; n],
            u: vec![false; n],
            iteration: 0,
        };
        for (i, v) in self.labels.labeled() {
            state.x[i] = v;
            state.u[i] = true;
        }
        state
    }

    pub fn step(&self, prev: &PropagationState) -> (PropagationState, f64) {
        let n = self.neighbors.len();
        let xi = self.config.xi;
        let mut next = PropagationState {
            x: prev.x.clone(),
            u: prev.u.clone(),
            iteration: prev.iteration + 1,
        };
        for i in 0..n {
            let mut sum = 0.0;
            let mut count = 0.0;
            for &j in &self.neighbors[i] {
                if prev.u[j] {
                    sum += prev.x[j];
                    count += 1.0;
                }
            }
            if count > 0.0 {
                let mean = sum / count;
                next.x[i] = if prev.u[i] {
                    (1.0 - xi) * prev.x[i] + xi * mean
                } else {
                    mean
                };
                next.u[i] = true;
            }
            if let Some(label) = self.labels.get(i) {
                next.x[i] = label;
            }
        }
        let delta = max_abs_diff(&next.x, &prev.x);
        (next, delta)
    }

    fn reachable(&self) -> Vec<bool> {
        let mut reached = vec![false; self.neighbors.len()];
        let mut stack = self.labels.labeled_set();
        for &i in &stack {
            reached[i] = true;
        }
        while let Some(j) = stack.pop() {
            for &i in &self.neighbors[j] {
                if !reached[i] {
                    reached[i] = true;
                    stack.push(i);
                }
            }
        }
        reached
    }

    pub fn run(&self) -> PropagationResult {
        let epsilon = self.config.epsilon_for(&self.labels);
        let reachable = self.reachable();
        let unreached: Vec<usize> = (0..reachable.len()).filter(|&i| !reachable[i]).collect();
        let mut state = self.init_state();
        let mut converged = false;
        let mut last_delta = f64::INFINITY;
        while state.iteration < self.config.max_iterations {
            let (next, delta) = self.step(&state);
            state = next;
            last_delta = delta;
            let all_reached = (0..reachable.len()).all(|i| !reachable[i] || state.u[i]);
            if all_reached && delta < epsilon {
                converged = true;
                break;
            }
        }
        PropagationResult {
            values: state.x,
            propagated: state.u,
            iterations_run: state.iteration,
            converged,
            epsilon,
            last_delta,
            unreached,
        }
    }
}

/// Label propagation over the union of edges.
pub fn lp_run(
    graph: &MultiRelationalGraph,
    labels: &NodeValueMap,
    config: &PropagationConfig,
) -> Result<PropagationResult> {
    Ok(LabelPropagation::new(graph, labels, config)?.run())
}
