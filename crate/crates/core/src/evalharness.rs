//! Error metrics, random label masking and the Monte-Carlo comparison of
//! MrP against label-propagation baselines.

use std::fmt;

use rayon::prelude::*;

use crate::engine::{lp_run, run, PropagationConfig, PropagationResult};
use crate::error::{Error, Result};
use crate::graph::{MultiRelationalGraph, NodeValueMap};
use crate::relparams::{estimate_all, EstimationOptions, RelationParams};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    pub mape: f64,
    /// `None` when the ground truth is constant over the evaluation set.
    pub nrmse: Option<f64>,
    pub eval_count: usize,
    /// Nodes left out of MAPE because their ground truth is zero.
    pub mape_excluded: usize,
}

/// RMSE, MAPE and range-normalized RMSE of `predicted` against `truth` over
/// `eval_set`.
pub fn compute_metrics(
    predicted: &NodeValueMap,
    truth: &NodeValueMap,
    eval_set: &[usize],
) -> Result<MetricsReport> {
    if eval_set.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let mut sq = 0.0;
    let mut ape = 0.0;
    let mut ape_count = 0usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &i in eval_set {
        let missing = |what: &str| {
            Error::InvalidParameter(format!(
                "node {i} in the evaluation set has no {what} value"
            ))
        };
        let t = truth.get(i).ok_or_else(|| missing("ground-truth"))?;
        let p = predicted.get(i).ok_or_else(|| missing("predicted"))?;
        let err = p - t;
        sq += err * err;
        if t != 0.0 {
            ape += (err / t).abs();
            ape_count += 1;
        }
        lo = lo.min(t);
        hi = hi.max(t);
    }
    if ape_count == 0 {
        return Err(Error::MapeUndefined);
    }
    let rmse = (sq / eval_set.len() as f64).sqrt();
    let range = hi - lo;
    Ok(MetricsReport {
        rmse,
        mape: ape / ape_count as f64,
        nrmse: (range > 0.0).then(|| rmse / range),
        eval_count: eval_set.len(),
        mape_excluded: eval_set.len() - ape_count,
    })
}

/// Uniform sample without replacement of `round(ratio * |nodes|)` nodes,
/// returned in ascending order. A partial Fisher-Yates shuffle over a copy
/// of `nodes` driven by [`Rng::below`].
pub fn sample_labeled(nodes: &[usize], ratio: f64, seed: u64) -> Result<Vec<usize>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "label ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let total = nodes.len();
    let size = (ratio * total as f64).round() as usize;
    if size == 0 || size >= total {
        return Err(Error::DegenerateSample { size, total });
    }
    let mut pool = nodes.to_vec();
    let mut rng = Rng::seed_from_u64(seed);
    for k in 0..size {
        let pick = k + rng.below(total - k);
        pool.swap(k, pick);
    }
    let mut out = pool[..size].to_vec();
    out.sort_unstable();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Method {
    Mrp,
    LpUnion,
    /// Label propagation over the edges of one relation only.
    LpRelation(String),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mrp => "MrP",
            Method::LpUnion => "LP",
            Method::LpRelation(_) => "LP",
        }
    }

    /// `union` for LP over all edges, the relation name for per-relation LP,
    /// empty for MrP.
    pub fn relation_label(&self) -> &str {
        match self {
            Method::Mrp => "",
            Method::LpUnion => "union",
            Method::LpRelation(r) => r,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mrp => write!(f, "MrP"),
            Method::LpUnion => write!(f, "LP-union"),
            Method::LpRelation(r) => write!(f, "LP-{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub label_ratio: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub estimation: EstimationOptions,
    pub propagation: PropagationConfig,
}

impl ExperimentSpec {
    /// MrP, LP on the union, and LP on each relation of `graph`.
    pub fn all_methods(graph: &MultiRelationalGraph) -> Vec<Method> {
        let mut m: Vec<Method> = graph
            .relations()
            .iter()
            .map(|r| Method::LpRelation(r.name.clone()))
            .collect();
        m.push(Method::LpUnion);
        m.push(Method::Mrp);
        m
    }

    fn validate(&self, graph: &MultiRelationalGraph) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        for m in &self.methods {
            if let Method::LpRelation(r) = m {
                graph
                    .relation_index(r)
                    .ok_or_else(|| Error::UnknownRelation(r.clone()))?;
            }
        }
        self.propagation.validate()
    }
}

/// Outcome of one method in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub method: Method,
    pub metrics: Result<MetricsReport>,
    pub converged: bool,
    /// Unlabeled nodes the method never reached.
    pub unreached: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub rmse: f64,
    pub mape: f64,
    /// Mean over the trials where nRMSE was defined.
    pub nrmse: Option<f64>,
    pub trials_used: usize,
    pub trials_failed: usize,
    pub mean_unreached: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub summaries: Vec<MethodSummary>,
    pub trials: Vec<Vec<TrialOutcome>>,
}

fn score(
    result: &PropagationResult,
    truth: &NodeValueMap,
    labeled: &[usize],
) -> (Result<MetricsReport>, usize) {
    let mut is_labeled = vec![false; truth.node_count()];
    for &i in labeled {
        is_labeled[i] = true;
    }
    let unlabeled = (0..truth.node_count()).filter(|&i| !is_labeled[i] && truth.contains(i));
    let (eval, missed): (Vec<usize>, Vec<usize>) = unlabeled.partition(|&i| result.propagated[i]);
    (
        compute_metrics(&result.to_value_map(), truth, &eval),
        missed.len(),
    )
}

/// One masking trial: labels drawn with seed `spec.seed + trial`,
/// parameters estimated on the labeled nodes, every method scored on the
/// unlabeled nodes it reached.
pub fn run_trial(
    graph: &MultiRelationalGraph,
    truth: &NodeValueMap,
    spec: &ExperimentSpec,
    trial: usize,
) -> Result<Vec<TrialOutcome>> {
    let nodes = truth.labeled_set();
    let labeled = sample_labeled(
        &nodes,
        spec.label_ratio,
        spec.seed.wrapping_add(trial as u64),
    )?;
    let labels = truth.restrict(&labeled);

    let mut estimated: Option<Result<Vec<RelationParams>>> = None;
    let mut outcomes = Vec::with_capacity(spec.methods.len());
    for method in &spec.methods {
        let result = match method {
            Method::Mrp => {
                let params = estimated.get_or_insert_with(|| {
                    estimate_all(graph, &labels, &spec.estimation)
                        .map(|v| v.into_iter().map(|e| e.params).collect())
                });
                match params {
                    Ok(p) => run(graph, p, &labels, &spec.propagation),
                    Err(e) => Err(e.clone()),
                }
            }
            Method::LpUnion => lp_run(graph, &labels, &spec.propagation),
            Method::LpRelation(name) => {
                let r = graph
                    .relation_index(name)
                    .ok_or_else(|| Error::UnknownRelation(name.clone()))?;
                lp_run(&graph.restrict_to_relation(r), &labels, &spec.propagation)
            }
        };
        let outcome = match result {
            Ok(res) => {
                let (metrics, unreached) = score(&res, truth, &labeled);
                TrialOutcome {
                    trial,
                    method: method.clone(),
                    metrics,
                    converged: res.converged,
                    unreached,
                }
            }
            Err(e) => TrialOutcome {
                trial,
                method: method.clone(),
                metrics: Err(e),
                converged: false,
                unreached: 0,
            },
        };
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// Runs `spec.trials` independent trials (concurrently) and averages each
/// method's metrics over the trials where it could be scored. Sums are taken
/// in trial order, so the report does not depend on scheduling.
pub fn run_monte_carlo(
    graph: &MultiRelationalGraph,
    truth: &NodeValueMap,
    spec: &ExperimentSpec,
) -> Result<ExperimentReport> {
    spec.validate(graph)?;
    if truth.node_count() != graph.node_count() {
        return Err(Error::DimensionMismatch {
            expected: graph.node_count(),
            got: truth.node_count(),
        });
    }
    let trials: Vec<Vec<TrialOutcome>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(graph, truth, spec, t))
        .collect::<Result<_>>()?;

    let summaries = spec
        .methods
        .iter()
        .enumerate()
        .map(|(k, method)| {
            let mut rmse = 0.0;
            let mut mape = 0.0;
            let mut nrmse = 0.0;
            let mut nrmse_count = 0usize;
            let mut used = 0usize;
            let mut unreached = 0usize;
            for trial in &trials {
                let o = &trial[k];
                if let Ok(m) = &o.metrics {
                    rmse += m.rmse;
                    mape += m.mape;
                    if let Some(v) = m.nrmse {
                        nrmse += v;
                        nrmse_count += 1;
                    }
                    used += 1;
                    unreached += o.unreached;
                }
            }
            let denom = used.max(1) as f64;
            MethodSummary {
                method: method.clone(),
                rmse: if used > 0 { rmse / denom } else { f64::NAN },
                mape: if used > 0 { mape / denom } else { f64::NAN },
                nrmse: (nrmse_count > 0).then(|| nrmse / nrmse_count as f64),
                trials_used: used,
                trials_failed: spec.trials - used,
                mean_unreached: unreached as f64 / denom,
            }
        })
        .collect();
    Ok(ExperimentReport { summaries, trials })
}
