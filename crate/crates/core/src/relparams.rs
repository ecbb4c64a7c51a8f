//! Per-relation parameters of the relational local generative model
//! `x_i = eta * x_j + tau + noise`, `noise ~ N(0, 1 / omega)`, along an edge
//! pointed from `j` to `i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{MultiRelationalGraph, NodeValueMap};

pub const OMEGA_MIN: f64 = 1e-12;
pub const OMEGA_MAX: f64 = 1e12;
/// Smallest `|eta|` for which the reverse transform is defined.
pub const MIN_INVERTIBLE_ETA: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationParams {
    pub eta: f64,
    pub tau: f64,
    pub omega: f64,
}

impl Default for RelationParams {
    /// `(eta, tau, omega) = (1, 0, 1)`; with these everywhere propagation is
    /// plain label propagation.
    fn default() -> Self {
        Self {
            eta: 1.0,
            tau: 0.0,
            omega: 1.0,
        }
    }
}

impl RelationParams {
    pub fn new(eta: f64, tau: f64, omega: f64) -> Result<Self> {
        let p = Self { eta, tau, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || !self.tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "eta and tau must be finite (eta={}, tau={})",
                self.eta, self.tau
            )));
        }
        if !(OMEGA_MIN..=OMEGA_MAX).contains(&self.omega) {
            return Err(Error::InvalidParameter(format!(
                "omega={} outside [{OMEGA_MIN:e}, {OMEGA_MAX:e}]",
                self.omega
            )));
        }
        Ok(())
    }

    /// `f(x) = eta * x + tau`.
    pub fn transform(&self, x: f64) -> f64 {
        self.eta * x + self.tau
    }

    /// Parameters of the reversed relation, expressed in the same forward
    /// form `f(x) = eta' * x + tau'`: `eta' = 1/eta`, `tau' = -tau/eta`,
    /// `omega' = eta^2 * omega`.
    pub fn reverse(&self) -> Result<Self> {
        if self.eta.is_nan() || self.eta.abs() < MIN_INVERTIBLE_ETA {
            return Err(Error::NonInvertibleScaling { eta: self.eta });
        }
        Ok(Self {
            eta: 1.0 / self.eta,
            tau: -self.tau / self.eta,
            omega: self.eta * self.eta * self.omega,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationOptions {
    /// Force `eta = 1` and estimate only `tau` and `omega`.
    pub fix_eta: bool,
    /// Below this many labeled pairs the defaults are returned.
    pub min_pairs: usize,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self {
            fix_eta: true,
            min_pairs: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub params: RelationParams,
    pub pair_count: usize,
    /// Set when too few labeled pairs were available and defaults were used.
    pub warning: Option<String>,
}

/// `(x_i, x_j)` for every directed edge `j -> i` of `relation` whose two
/// endpoints are labeled. Symmetric relations contribute both orientations,
/// adjacent to each other.
pub fn labeled_pairs(
    graph: &MultiRelationalGraph,
    values: &NodeValueMap,
    relation: usize,
) -> Vec<(f64, f64)> {
    graph
        .directed_edges_of(relation)
        .filter_map(|e| Some((values.get(e.dst)?, values.get(e.src)?)))
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// Maximum-likelihood `(eta, tau, omega)` for one relation over the pairs
/// whose endpoints are both labeled.
///
/// `eta` centers both sides on the mean of *all* labeled values rather than
/// on the pair means, so it is not the ordinary least-squares slope.
pub fn estimate(
    graph: &MultiRelationalGraph,
    values: &NodeValueMap,
    relation: usize,
    options: &EstimationOptions,
) -> Result<Estimate> {
    if options.min_pairs == 0 {
        return Err(Error::InvalidParameter(
            "min_pairs must be at least 1".into(),
        ));
    }
    let pairs = labeled_pairs(graph, values, relation);
    if pairs.len() < options.min_pairs {
        return Ok(Estimate {
            params: RelationParams::default(),
            pair_count: pairs.len(),
            warning: Some(format!(
                "relation `{}`: {} labeled pair(s), fewer than {}; using defaults",
                graph.relation(relation).name,
                pairs.len(),
                options.min_pairs
            )),
        });
    }

    let eta = if options.fix_eta {
        1.0
    } else {
        let mu = mean(values.labeled().map(|(_, v)| v));
        let mut num = 0.0;
        let mut den = 0.0;
        for &(xi, xj) in &pairs {
            num += (xi - mu) * (xj - mu);
            den += (xj - mu) * (xj - mu);
        }
        if den == 0.0 {
            return Err(Error::DegenerateNeighborValues {
                relation: graph.relation(relation).name.clone(),
            });
        }
        num / den
    };
    let tau = mean(pairs.iter().map(|&(xi, xj)| xi - eta * xj));
    let mse = mean(pairs.iter().map(|&(xi, xj)| {
        let r = xi - eta * xj - tau;
        r * r
    }));
    let omega = (1.0 / mse).clamp(OMEGA_MIN, OMEGA_MAX);
    Ok(Estimate {
        params: RelationParams { eta, tau, omega },
        pair_count: pairs.len(),
        warning: None,
    })
}

/// [`estimate`] for every relation, indexed by relation.
pub fn estimate_all(
    graph: &MultiRelationalGraph,
    values: &NodeValueMap,
    options: &EstimationOptions,
) -> Result<Vec<Estimate>> {
    (0..graph.relation_count())
        .into_par_iter()
        .map(|r| estimate(graph, values, r, options))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` bin boundaries.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    pub count: usize,
    pub mean: f64,
    /// Population variance; together with `mean` this is the Gaussian fit.
    pub variance: f64,
    pub histogram: Histogram,
}

/// Distribution of `x_i - eta * x_j` over the labeled pairs of `relation`.
/// `tau` is not subtracted, so with `eta = 1` these are raw differences.
pub fn residual_stats(
    graph: &MultiRelationalGraph,
    values: &NodeValueMap,
    relation: usize,
    params: &RelationParams,
    bin_count: usize,
) -> Result<ResidualStats> {
    if bin_count == 0 {
        return Err(Error::InvalidParameter(
            "bin_count must be at least 1".into(),
        ));
    }
    let residuals: Vec<f64> = labeled_pairs(graph, values, relation)
        .into_iter()
        .map(|(xi, xj)| xi - params.eta * xj)
        .collect();
    if residuals.is_empty() {
        return Err(Error::NoLabeledPairs {
            relation: graph.relation(relation).name.clone(),
        });
    }
    let m = mean(residuals.iter().copied());
    let variance = mean(residuals.iter().map(|r| (r - m) * (r - m)));
    Ok(ResidualStats {
        count: residuals.len(),
        mean: m,
        variance,
        histogram: histogram(&residuals, bin_count),
    })
}

fn histogram(xs: &[f64], bin_count: usize) -> Histogram {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bin_count as f64;
    let edges = (0..=bin_count)
        .map(|k| {
            if k == bin_count {
                hi
            } else {
                lo + width * k as f64
            }
        })
        .collect();
    let mut counts = vec![0usize; bin_count];
    for &x in xs {
        let bin = if width > 0.0 {
            (((x - lo) / width) as usize).min(bin_count - 1)
        } else {
            0
        };
        counts[bin] += 1;
    }
    Histogram { edges, counts }
}
