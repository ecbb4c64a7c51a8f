//! Exact small-graph reference solution.
//!
//! With labels clamped, the unlabeled values minimizing
//!
//! ```text
//! L(x) = sum over directed edges j -> i of  w_p / 2 * (x_i - eta_p x_j - tau_p)^2
//! ```
//!
//! solve a symmetric linear system whose rows are exactly the per-node
//! stationarity conditions the propagation iterates toward. The system is
//! assembled densely and factorized, so this is for verification only.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{MultiRelationalGraph, NodeValueMap, Orientation};
use crate::relparams::RelationParams;

pub const DEFAULT_UNKNOWN_CAP: usize = 2000;
const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Row `k` belongs to node `index_map[k]`.
    pub index_map: Vec<usize>,
}

impl LinearSystem {
    pub fn row_of(&self, node: usize) -> Option<usize> {
        self.index_map.iter().position(|&n| n == node)
    }
}

fn check_inputs(
    graph: &MultiRelationalGraph,
    params: &[RelationParams],
    labels: &NodeValueMap,
) -> Result<()> {
    if params.len() != graph.relation_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.relation_count(),
            got: params.len(),
        });
    }
    if labels.node_count() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            got: labels.node_count(),
        });
    }
    Ok(())
}

/// Stationarity system restricted to `unknowns` (unlabeled nodes). Edges to
/// nodes outside `unknowns` must end at labeled nodes.
fn assemble_over(
    graph: &MultiRelationalGraph,
    params: &[RelationParams],
    labels: &NodeValueMap,
    unknowns: &[usize],
) -> LinearSystem {
    let mut row = vec![None; graph.node_count()];
    for (k, &node) in unknowns.iter().enumerate() {
        row[node] = Some(k);
    }
    let m = unknowns.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for e in graph.directed_edges() {
        let (i, j) = (e.dst, e.src);
        let (ri, rj) = (row[i], row[j]);
        if ri.is_none() && rj.is_none() {
            continue;
        }
        let RelationParams { eta, tau, omega } = params[e.relation];
        if let Some(ri) = ri {
            a[(ri, ri)] += omega;
            b[ri] += omega * tau;
            match rj {
                Some(rj) => a[(ri, rj)] -= omega * eta,
                None => b[ri] += omega * eta * labels.get(j).unwrap_or(0.0),
            }
        }
        if let Some(rj) = rj {
            a[(rj, rj)] += omega * eta * eta;
            b[rj] -= omega * eta * tau;
            match ri {
                Some(ri) => a[(rj, ri)] -= omega * eta,
                None => b[rj] += omega * eta * labels.get(i).unwrap_or(0.0),
            }
        }
    }
    LinearSystem {
        matrix: a,
        rhs: b,
        index_map: unknowns.to_vec(),
    }
}

/// Stationarity system over every unlabeled node, rows in node order.
pub fn assemble(
    graph: &MultiRelationalGraph,
    params: &[RelationParams],
    labels: &NodeValueMap,
) -> Result<LinearSystem> {
    check_inputs(graph, params, labels)?;
    let unknowns: Vec<usize> = (0..graph.node_count())
        .filter(|&i| !labels.contains(i))
        .collect();
    Ok(assemble_over(graph, params, labels, &unknowns))
}

/// [`solve_exact_with_cap`] with [`DEFAULT_UNKNOWN_CAP`].
pub fn solve_exact(
    graph: &MultiRelationalGraph,
    params: &[RelationParams],
    labels: &NodeValueMap,
) -> Result<NodeValueMap> {
    solve_exact_with_cap(graph, params, labels, DEFAULT_UNKNOWN_CAP)
}

/// Unique minimizer of the global loss with labels clamped; all nodes
/// valued. Each connected component is factorized on its own.
pub fn solve_exact_with_cap(
    graph: &MultiRelationalGraph,
    params: &[RelationParams],
    labels: &NodeValueMap,
    cap: usize,
) -> Result<NodeValueMap> {
    check_inputs(graph, params, labels)?;
    for (r, p) in params.iter().enumerate() {
        p.validate()?;
        if p.eta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "relation `{}`: exact solve requires eta > 0, got {}",
                graph.relation(r).name,
                p.eta
            )));
        }
    }
    let unknown_count = graph.node_count() - labels.labeled_count();
    if unknown_count > cap {
        return Err(Error::OracleCapExceeded {
            unknowns: unknown_count,
            cap,
        });
    }

    let mut out = labels.clone();
    for component in graph.components() {
        let unknowns: Vec<usize> = component
            .iter()
            .copied()
            .filter(|&i| !labels.contains(i))
            .collect();
        if unknowns.is_empty() {
            continue;
        }
        let singular = || Error::SingularSystem {
            component: component
                .iter()
                .map(|&i| graph.node(i).label.clone())
                .collect(),
        };
        if unknowns.len() == component.len() {
            return Err(singular());
        }
        let sys = assemble_over(graph, params, labels, &unknowns);
        let chol = sys.matrix.clone().cholesky().ok_or_else(singular)?;
        let x = chol.solve(&sys.rhs);
        let residual = (&sys.matrix * &x - &sys.rhs).norm();
        let scale = sys.rhs.norm().max(sys.matrix.norm() * x.norm());
        if !x.iter().all(|v| v.is_finite()) || residual > RESIDUAL_TOLERANCE * scale.max(1e-300) {
            return Err(singular());
        }
        for (k, &node) in sys.index_map.iter().enumerate() {
            out.insert(node, x[k])?;
        }
    }
    Ok(out)
}

/// Global loss `sum w/2 (x_i - eta x_j - tau)^2` over directed edges.
pub fn global_loss(graph: &MultiRelationalGraph, params: &[RelationParams], x: &[f64]) -> f64 {
    graph
        .directed_edges()
        .map(|e| {
            let p = &params[e.relation];
            let r = x[e.dst] - p.eta * x[e.src] - p.tau;
            0.5 * p.omega * r * r
        })
        .sum()
}

/// Local weighted estimate of `node` from all of its neighbors at values
/// `x`, or `None` for a node without weighted neighbors.
pub fn local_estimate(
    graph: &MultiRelationalGraph,
    params: &[RelationParams],
    x: &[f64],
    node: usize,
) -> Option<f64> {
    local_estimate_masked(graph, params, x, node, |_| true)
}

/// [`local_estimate`] restricted to neighbors for which `include` holds.
pub fn local_estimate_masked(
    graph: &MultiRelationalGraph,
    params: &[RelationParams],
    x: &[f64],
    node: usize,
    include: impl Fn(usize) -> bool,
) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for inc in graph.incident(node) {
        if !include(inc.neighbor) {
            continue;
        }
        let RelationParams { eta, tau, omega } = params[inc.relation];
        let xj = x[inc.neighbor];
        match inc.orientation {
            Orientation::Forward => {
                num += omega * (eta * xj + tau);
                den += omega;
            }
            Orientation::Reverse => {
                num += omega * eta * eta * (xj / eta - tau / eta);
                den += omega * eta * eta;
            }
        }
    }
    (den > 0.0).then(|| num / den)
}
