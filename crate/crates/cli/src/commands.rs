//! Subcommand implementations. Each writes its documents into the output
//! directory together with `effective_config.toml`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use mrp_core::oracle::{global_loss, solve_exact_with_cap};
use mrp_core::{
    compute_metrics, estimate_all, generate, lp_run, residual_stats, run, run_monte_carlo,
    sample_labeled, Error, ExperimentSpec, MultiRelationalGraph, NodeValueMap, RelationParams,
    SynthSpec,
};
use serde::Serialize;

use crate::config::{require, RunConfig};
use crate::io::{self, num, opt_num, ParamsFile};

pub enum Outcome {
    Done,
    NotConverged,
}

/// Where propagation and the exact solve take their parameters from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSource {
    File,
    Estimate,
    Defaults,
}

fn out_dir(cfg: &RunConfig) -> anyhow::Result<&Path> {
    require(&cfg.paths.out, "output directory", "--out")
}

fn write_config(cfg: &RunConfig) -> anyhow::Result<()> {
    io::write(
        out_dir(cfg)?,
        "effective_config.toml",
        &format!("{}\n{}", cfg.header(), cfg.to_toml()),
    )
}

fn graph(cfg: &RunConfig) -> anyhow::Result<MultiRelationalGraph> {
    let edges = require(&cfg.paths.edges, "edges file", "--edges")?;
    io::load_graph(edges, cfg.paths.relations.as_deref())
}

fn labels(cfg: &RunConfig, graph: &MultiRelationalGraph) -> anyhow::Result<NodeValueMap> {
    let path = require(&cfg.paths.values, "values file", "--values")?;
    io::load_values(path, "values", graph)
}

fn truth(cfg: &RunConfig, graph: &MultiRelationalGraph) -> anyhow::Result<NodeValueMap> {
    let path = require(&cfg.paths.truth, "truth file", "--truth")?;
    io::load_values(path, "truth", graph)
}

fn report_warnings(file: &ParamsFile) {
    for rec in &file.relation {
        if let Some(w) = &rec.warning {
            eprintln!("warning: {w}");
        }
    }
}

/// Parameters for `source`. Estimated parameters are also written out as
/// `params.toml`.
fn params(
    cfg: &RunConfig,
    graph: &MultiRelationalGraph,
    labels: &NodeValueMap,
    source: ParamSource,
) -> anyhow::Result<Vec<RelationParams>> {
    match source {
        ParamSource::File => {
            let path = require(
                &cfg.paths.params,
                "params file",
                "--params, --estimate or --lp",
            )?;
            io::load_params(path, graph)
        }
        ParamSource::Estimate => {
            let est =
                estimate_all(graph, labels, &cfg.estimation()).context("estimating parameters")?;
            let file = ParamsFile::from_estimates(graph, &est);
            report_warnings(&file);
            io::write(out_dir(cfg)?, "params.toml", &io::toml_doc(cfg, &file))?;
            Ok(est.into_iter().map(|e| e.params).collect())
        }
        ParamSource::Defaults => Ok(vec![RelationParams::default(); graph.relation_count()]),
    }
}

pub fn estimate(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let g = graph(cfg)?;
    let l = labels(cfg, &g)?;
    write_config(cfg)?;
    params(cfg, &g, &l, ParamSource::Estimate)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct RunSummary {
    method: &'static str,
    iterations: usize,
    converged: bool,
    epsilon: f64,
    last_delta: f64,
    unreached_count: usize,
    unreached: Vec<String>,
}

pub fn propagate(cfg: &RunConfig, source: ParamSource) -> anyhow::Result<Outcome> {
    let g = graph(cfg)?;
    let l = labels(cfg, &g)?;
    let out = out_dir(cfg)?;
    write_config(cfg)?;
    let (method, result) = if source == ParamSource::Defaults {
        ("lp", lp_run(&g, &l, &cfg.propagation())?)
    } else {
        let p = params(cfg, &g, &l, source)?;
        ("mrp", run(&g, &p, &l, &cfg.propagation())?)
    };
    io::write(
        out,
        "results.csv",
        &io::results_csv(cfg, &g, &result.values, &result.propagated),
    )?;
    let summary = RunSummary {
        method,
        iterations: result.iterations_run,
        converged: result.converged,
        epsilon: result.epsilon,
        last_delta: result.last_delta,
        unreached_count: result.unreached.len(),
        unreached: result
            .unreached
            .iter()
            .map(|&i| g.node(i).label.clone())
            .collect(),
    };
    io::write(out, "summary.toml", &io::toml_doc(cfg, &summary))?;
    if !summary.unreached.is_empty() {
        eprintln!(
            "warning: {} node(s) have no path to a labeled node",
            summary.unreached_count
        );
    }
    if result.converged {
        Ok(Outcome::Done)
    } else {
        eprintln!(
            "error: no convergence after {} iterations (last change {}, threshold {})",
            result.iterations_run, result.last_delta, result.epsilon
        );
        Ok(Outcome::NotConverged)
    }
}

#[derive(Serialize)]
struct SolveSummary {
    unknowns: usize,
    loss: f64,
}

pub fn solve_exact(cfg: &RunConfig, source: ParamSource) -> anyhow::Result<Outcome> {
    let g = graph(cfg)?;
    let l = labels(cfg, &g)?;
    let out = out_dir(cfg)?;
    write_config(cfg)?;
    let p = params(cfg, &g, &l, source)?;
    let sol = solve_exact_with_cap(&g, &p, &l, cfg.oracle.cap)?;
    let x: Vec<f64> = (0..g.node_count())
        .map(|i| sol.get(i).unwrap_or(0.0))
        .collect();
    let all = vec![true; g.node_count()];
    io::write(out, "results.csv", &io::results_csv(cfg, &g, &x, &all))?;
    let summary = SolveSummary {
        unknowns: g.node_count() - l.labeled_count(),
        loss: global_loss(&g, &p, &x),
    };
    io::write(out, "summary.toml", &io::toml_doc(cfg, &summary))?;
    Ok(Outcome::Done)
}

/// Residuals use the params file when one is configured, `eta = 1` otherwise.
pub fn stats(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let g = graph(cfg)?;
    let l = labels(cfg, &g)?;
    let out = out_dir(cfg)?;
    write_config(cfg)?;
    let p = if cfg.paths.params.is_some() {
        params(cfg, &g, &l, ParamSource::File)?
    } else {
        vec![RelationParams::default(); g.relation_count()]
    };
    let mut table = format!(
        "{}\nrelation,symmetric,edges,pairs,mean,variance\n",
        cfg.header()
    );
    let mut hist = format!("{}\nrelation,bin_lo,bin_hi,count\n", cfg.header());
    for (r, rel) in g.relations().iter().enumerate() {
        let edges = g.edges_of(r).count();
        match residual_stats(&g, &l, r, &p[r], cfg.stats.bins) {
            Ok(s) => {
                writeln!(
                    table,
                    "{},{},{},{},{},{}",
                    rel.name,
                    rel.symmetric,
                    edges,
                    s.count,
                    num(s.mean),
                    num(s.variance)
                )?;
                let h = &s.histogram;
                for (k, c) in h.counts.iter().enumerate() {
                    writeln!(
                        hist,
                        "{},{},{},{}",
                        rel.name,
                        num(h.edges[k]),
                        num(h.edges[k + 1]),
                        c
                    )?;
                }
            }
            Err(Error::NoLabeledPairs { .. }) => {
                writeln!(table, "{},{},{},0,,", rel.name, rel.symmetric, edges)?;
                writeln!(hist, "{},,,0", rel.name)?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    io::write(out, "stats.csv", &table)?;
    io::write(out, "histogram.csv", &hist)?;
    Ok(Outcome::Done)
}

#[derive(Serialize)]
struct EvalSummary {
    rmse: f64,
    mape: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nrmse: Option<f64>,
    eval_count: usize,
    mape_excluded: usize,
    unpredicted: usize,
}

pub fn evaluate(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let g = graph(cfg)?;
    let t = truth(cfg, &g)?;
    let pred_path = require(&cfg.paths.predictions, "predictions file", "--predictions")?;
    let pred = io::load_predictions(pred_path, &g)?;
    let labeled = match &cfg.paths.values {
        Some(p) => io::load_values(p, "values", &g)?,
        None => NodeValueMap::new(g.node_count()),
    };
    let out = out_dir(cfg)?;
    write_config(cfg)?;
    let candidates: Vec<usize> = t
        .labeled_set()
        .into_iter()
        .filter(|&i| !labeled.contains(i))
        .collect();
    let (eval, missed): (Vec<usize>, Vec<usize>) =
        candidates.into_iter().partition(|&i| pred.contains(i));
    let m = compute_metrics(&pred, &t, &eval)?;
    let summary = EvalSummary {
        rmse: m.rmse,
        mape: m.mape,
        nrmse: m.nrmse,
        eval_count: m.eval_count,
        mape_excluded: m.mape_excluded,
        unpredicted: missed.len(),
    };
    io::write(out, "metrics.toml", &io::toml_doc(cfg, &summary))?;
    Ok(Outcome::Done)
}

pub fn mc(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let g = graph(cfg)?;
    let t = truth(cfg, &g)?;
    let out = out_dir(cfg)?;
    write_config(cfg)?;
    let spec = ExperimentSpec {
        label_ratio: cfg.experiment.ratio,
        trials: cfg.experiment.trials,
        seed: cfg.experiment.seed,
        methods: cfg.methods(&g)?,
        estimation: cfg.estimation(),
        propagation: cfg.propagation(),
    };
    let report = run_monte_carlo(&g, &t, &spec)?;

    let mut table = format!(
        "{}\nmethod,relation,rmse,mape,nrmse,trials_used\n",
        cfg.header()
    );
    let mut text = format!(
        "{}\nlabel ratio {}, {} trials, seed {}\n\n{:<16} {:>14} {:>14} {:>14} {:>6} {:>6} {:>10}\n",
        cfg.header(),
        spec.label_ratio,
        spec.trials,
        spec.seed,
        "method",
        "rmse",
        "mape",
        "nrmse",
        "used",
        "failed",
        "unreached"
    );
    for s in &report.summaries {
        let mean = |v: f64| if v.is_nan() { String::new() } else { num(v) };
        writeln!(
            table,
            "{},{},{},{},{},{}",
            s.method.name(),
            s.method.relation_label(),
            mean(s.rmse),
            mean(s.mape),
            opt_num(s.nrmse),
            s.trials_used
        )?;
        let fixed = |v: f64| {
            if v.is_nan() {
                "-".to_owned()
            } else {
                format!("{v:.6}")
            }
        };
        writeln!(
            text,
            "{:<16} {:>14} {:>14} {:>14} {:>6} {:>6} {:>10.2}",
            s.method.to_string(),
            fixed(s.rmse),
            fixed(s.mape),
            s.nrmse.map_or("-".to_owned(), |v| format!("{v:.6}")),
            s.trials_used,
            s.trials_failed,
            s.mean_unreached
        )?;
    }
    io::write(out, "mc.csv", &table)?;
    io::write(out, "mc_summary.txt", &text)?;
    print!("{}", text.split_once('\n').map_or("", |(_, rest)| rest));
    Ok(Outcome::Done)
}

/// `seed` and `label_ratio` come from flags only; the spec file holds the
/// rest.
pub fn synth(
    cfg: &RunConfig,
    seed: Option<u64>,
    label_ratio: Option<f64>,
) -> anyhow::Result<Outcome> {
    let path = require(&cfg.paths.spec, "synth spec file", "--spec")?;
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading synth spec `{}`", path.display()))?;
    let mut spec: SynthSpec = toml::from_str(&text)
        .with_context(|| format!("parsing synth spec `{}`", path.display()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let out = out_dir(cfg)?;
    let data = generate(&spec)?;
    write_config(cfg)?;
    let g = &data.graph;
    let header = cfg.header();
    let lines = |body: Vec<String>, column_header: &str| {
        let mut s = format!("{header}\n{column_header}");
        for l in body {
            s.push_str(&l);
            s.push('\n');
        }
        s
    };
    io::write(out, "edges.tsv", &lines(g.to_edge_lines(), ""))?;
    io::write(
        out,
        "relations.csv",
        &lines(g.relation_decl_lines(), "relation,symmetric\n"),
    )?;
    let value_lines = |m: &NodeValueMap| {
        m.labeled()
            .map(|(i, v)| format!("{},{}", g.node(i).label, num(v)))
            .collect::<Vec<_>>()
    };
    io::write(
        out,
        "values.csv",
        &lines(value_lines(&data.values), "node,value\n"),
    )?;
    let truth = ParamsFile::from_params(
        spec.relations.iter().map(|r| r.name.as_str()),
        &spec.truth_params(),
    );
    io::write(out, "truth_params.toml", &io::toml_doc(cfg, &truth))?;
    if let Some(ratio) = label_ratio {
        let all: Vec<usize> = (0..g.node_count()).collect();
        let keep = sample_labeled(&all, ratio, spec.seed)?;
        io::write(
            out,
            "labels.csv",
            &lines(value_lines(&data.values.restrict(&keep)), "node,value\n"),
        )?;
    }
    Ok(Outcome::Done)
}
