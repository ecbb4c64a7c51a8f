//! Multi-relational propagation.
//!
//! Each iteration is a synchronous (Jacobi-style) sweep: every node reads
//! only the previous state. Per node `i`:
//!
//! ```text
//! z_i = sum over propagated neighbors j of  t_ij * x_j + s_ij
//! r_i = sum over propagated neighbors j of  h_ij
//! ```
//!
//! where for a forward neighbor (`r(i, j) = p`) `t = w*eta`, `s = w*tau`,
//! `h = w`, and for a reverse neighbor (`r(i, j) = p^-1`) `t = w*eta`,
//! `s = -w*eta*tau`, `h = w*eta^2`, with `w` the relation precision. The
//! node then keeps its value (`r_i = 0`), takes `z_i / r_i` (first time
//! reached) or blends `(1 - xi) x_i + xi z_i / r_i`. Labeled nodes are
//! clamped back to their label after every sweep.

mod lp;

pub use lp::{lp_run, LabelPropagation};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{MultiRelationalGraph, NodeValueMap, Orientation};
use crate::relparams::RelationParams;

/// Above this node count a sweep is split across the rayon pool.
const PARALLEL_MIN_NODES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    /// Damping factor in `[0, 1]`: weight of the fresh neighborhood estimate.
    pub xi: f64,
    /// Stopping threshold as a fraction of the label range.
    pub epsilon_fraction: f64,
    pub max_iterations: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            xi: 0.5,
            epsilon_fraction: 0.001,
            max_iterations: 1000,
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.xi) {
            return Err(Error::InvalidParameter(format!(
                "xi must lie in [0, 1], got {}",
                self.xi
            )));
        }
        if !(self.epsilon_fraction > 0.0 && self.epsilon_fraction.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon_fraction must be positive, got {}",
                self.epsilon_fraction
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Absolute stopping threshold for a label set, fixed for the whole run.
    ///
    /// When every label is equal the range is zero; the threshold then falls
    /// back to the fraction of the largest label magnitude, or of 1.
    pub fn epsilon_for(&self, labels: &NodeValueMap) -> f64 {
        let Some((lo, hi)) = labels.range() else {
            return self.epsilon_fraction;
        };
        let scale = if hi > lo {
            hi - lo
        } else if lo != 0.0 {
            lo.abs()
        } else {
            1.0
        };
        self.epsilon_fraction * scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationState {
    pub x: Vec<f64>,
    /// Propagated indicator; once set it stays set.
    pub u: Vec<bool>,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub values: Vec<f64>,
    pub propagated: Vec<bool>,
    pub iterations_run: usize,
    pub converged: bool,
    pub epsilon: f64,
    /// Largest absolute change in the last sweep.
    pub last_delta: f64,
    /// Nodes no label can ever reach; they keep the value 0.
    pub unreached: Vec<usize>,
}

impl PropagationResult {
    /// Values of propagated nodes only.
    pub fn to_value_map(&self) -> NodeValueMap {
        let mut m = NodeValueMap::new(self.values.len());
        for (i, (&v, &p)) in self.values.iter().zip(&self.propagated).enumerate() {
            if p {
                m.insert(i, v).expect("propagated values are finite");
            }
        }
        m
    }
}

/// Zero-padded labels and the indicator of the labeled set.
pub fn init_state(graph: &MultiRelationalGraph, labels: &NodeValueMap) -> Result<PropagationState> {
    check_labels(graph, labels)?;
    let n = graph.node_count();
    let mut x = vec![0.0; n];
    let mut u = vec![false; n];
    for (i, v) in labels.labeled() {
        x[i] = v;
        u[i] = true;
    }
    Ok(PropagationState { x, u, iteration: 0 })
}

fn check_labels(graph: &MultiRelationalGraph, labels: &NodeValueMap) -> Result<()> {
    if labels.node_count() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            got: labels.node_count(),
        });
    }
    if labels.is_empty() {
        return Err(Error::NoLabels);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct Term {
    neighbor: usize,
    scale: f64,
    shift: f64,
    weight: f64,
}

/// Row-compressed `T`, `S` and `H`: one row of terms per node, in incidence
/// order.
#[derive(Debug, Clone)]
struct Operator {
    offsets: Vec<usize>,
    terms: Vec<Term>,
}

impl Operator {
    fn new(graph: &MultiRelationalGraph, params: &[RelationParams]) -> Result<Self> {
        if params.len() != graph.relation_count() {
            return Err(Error::DimensionMismatch {
                expected: graph.relation_count(),
                got: params.len(),
            });
        }
        for p in params {
            p.validate()?;
        }
        let n = graph.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut terms = Vec::new();
        offsets.push(0);
        for i in 0..n {
            for inc in graph.incident(i) {
                let p = &params[inc.relation];
                let term = match inc.orientation {
                    Orientation::Forward => Term {
                        neighbor: inc.neighbor,
                        scale: p.omega * p.eta,
                        shift: p.omega * p.tau,
                        weight: p.omega,
                    },
                    Orientation::Reverse => Term {
                        neighbor: inc.neighbor,
                        scale: p.omega * p.eta,
                        shift: -(p.omega * p.eta * p.tau),
                        weight: p.omega * p.eta * p.eta,
                    },
                };
                terms.push(term);
            }
            offsets.push(terms.len());
        }
        Ok(Self { offsets, terms })
    }

    fn row(&self, i: usize) -> &[Term] {
        &self.terms[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Nodes that can ever be propagated from `seeds`: a node is reached
    /// once it has a reached neighbor with positive weight.
    fn reachable(&self, graph: &MultiRelationalGraph, seeds: &[bool]) -> Vec<bool> {
        let mut reached = seeds.to_vec();
        let mut frontier: Vec<usize> = (0..seeds.len()).filter(|&i| seeds[i]).collect();
        while let Some(j) = frontier.pop() {
            for inc in graph.incident(j) {
                let i = inc.neighbor;
                if reached[i] {
                    continue;
                }
                if self
                    .row(i)
                    .iter()
                    .any(|t| reached[t.neighbor] && t.weight > 0.0)
                {
                    reached[i] = true;
                    frontier.push(i);
                }
            }
        }
        reached
    }
}

/// A configured propagation run over one graph, parameter set and label set.
#[derive(Debug, Clone)]
pub struct Propagator<'g> {
    graph: &'g MultiRelationalGraph,
    operator: Operator,
    labels: NodeValueMap,
    config: PropagationConfig,
}

impl<'g> Propagator<'g> {
    pub fn new(
        graph: &'g MultiRelationalGraph,
        params: &[RelationParams],
        labels: &NodeValueMap,
        config: &PropagationConfig,
    ) -> Result<Self> {
        config.validate()?;
        check_labels(graph, labels)?;
        Ok(Self {
            graph,
            operator: Operator::new(graph, params)?,
            labels: labels.clone(),
            config: *config,
        })
    }

    pub fn init_state(&self) -> PropagationState {
        init_state(self.graph, &self.labels).expect("labels validated in Propagator::new")
    }

    fn update_node(&self, prev: &PropagationState, i: usize) -> (f64, bool) {
        let mut z = 0.0;
        let mut r = 0.0;
        for t in self.operator.row(i) {
            if prev.u[t.neighbor] {
                z += t.scale * prev.x[t.neighbor] + t.shift;
                r += t.weight;
            }
        }
        let xi = self.config.xi;
        let x = if r > 0.0 {
            let z = z / r;
            if prev.u[i] {
                (1.0 - xi) * prev.x[i] + xi * z
            } else {
                z
            }
        } else {
            prev.x[i]
        };
        let u = prev.u[i] || r > 0.0;
        match self.labels.get(i) {
            Some(label) => (label, u),
            None => (x, u),
        }
    }

    /// One synchronous sweep. Returns the next state and the largest
    /// absolute change.
    pub fn step(&self, prev: &PropagationState) -> (PropagationState, f64) {
        let n = prev.x.len();
        let mut x = vec![0.0; n];
        let mut u = vec![false; n];
        if n >= PARALLEL_MIN_NODES {
            x.par_iter_mut()
                .zip(u.par_iter_mut())
                .enumerate()
                .for_each(|(i, (xo, uo))| (*xo, *uo) = self.update_node(prev, i));
        } else {
            for i in 0..n {
                (x[i], u[i]) = self.update_node(prev, i);
            }
        }
        let delta = max_abs_diff(&x, &prev.x);
        (
            PropagationState {
                x,
                u,
                iteration: prev.iteration + 1,
            },
            delta,
        )
    }

    pub fn run(&self) -> PropagationResult {
        let epsilon = self.config.epsilon_for(&self.labels);
        let mut state = self.init_state();
        let reachable = self.operator.reachable(self.graph, &state.u);
        let unreached: Vec<usize> = (0..reachable.len()).filter(|&i| !reachable[i]).collect();
        let target = reachable.len() - unreached.len();

        let mut converged = false;
        let mut last_delta = f64::INFINITY;
        while state.iteration < self.config.max_iterations {
            let (next, delta) = self.step(&state);
            state = next;
            last_delta = delta;
            let covered = state.u.iter().filter(|&&u| u).count() == target;
            if covered && delta < epsilon {
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

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// One sweep from `state`; see [`Propagator::step`].
pub fn step(
    state: &PropagationState,
    graph: &MultiRelationalGraph,
    params: &[RelationParams],
    labels: &NodeValueMap,
    config: &PropagationConfig,
) -> Result<PropagationState> {
    if state.x.len() != graph.node_count() || state.u.len() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            got: state.x.len(),
        });
    }
    Ok(Propagator::new(graph, params, labels, config)?
        .step(state)
        .0)
}

/// Iterates until every reachable node is propagated and the largest change
/// drops below `epsilon`, or until `max_iterations`.
pub fn run(
    graph: &MultiRelationalGraph,
    params: &[RelationParams],
    labels: &NodeValueMap,
    config: &PropagationConfig,
) -> Result<PropagationResult> {
    Ok(Propagator::new(graph, params, labels, config)?.run())
}
