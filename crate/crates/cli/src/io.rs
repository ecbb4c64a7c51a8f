//! Reading input files and writing the output documents.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use mrp_core::{
    parse_edges, parse_relation_decls, parse_values, Estimate, MultiRelationalGraph, NodeValueMap,
    RelationParams,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub fn read_lines(path: &Path, what: &str) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {what} file `{}`", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

pub fn load_graph(edges: &Path, relations: Option<&Path>) -> anyhow::Result<MultiRelationalGraph> {
    let decls = match relations {
        Some(p) => parse_relation_decls(read_lines(p, "relations")?)
            .with_context(|| format!("in relations file `{}`", p.display()))?,
        None => Vec::new(),
    };
    parse_edges(read_lines(edges, "edges")?, &decls)
        .with_context(|| format!("in edges file `{}`", edges.display()))
}

pub fn load_values(
    path: &Path,
    what: &str,
    graph: &MultiRelationalGraph,
) -> anyhow::Result<NodeValueMap> {
    parse_values(read_lines(path, what)?, graph)
        .with_context(|| format!("in {what} file `{}`", path.display()))
}

/// One `[[relation]]` entry of a parameter report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRecord {
    pub name: String,
    pub eta: f64,
    pub tau: f64,
    pub omega: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    #[serde(default)]
    pub relation: Vec<ParamRecord>,
}

impl ParamsFile {
    pub fn from_estimates(graph: &MultiRelationalGraph, estimates: &[Estimate]) -> Self {
        Self {
            relation: estimates
                .iter()
                .enumerate()
                .map(|(r, e)| ParamRecord {
                    name: graph.relation(r).name.clone(),
                    eta: e.params.eta,
                    tau: e.params.tau,
                    omega: e.params.omega,
                    pair_count: Some(e.pair_count),
                    warning: e.warning.clone(),
                })
                .collect(),
        }
    }

    pub fn from_params<'a>(
        names: impl IntoIterator<Item = &'a str>,
        params: &[RelationParams],
    ) -> Self {
        Self {
            relation: names
                .into_iter()
                .zip(params)
                .map(|(name, p)| ParamRecord {
                    name: name.to_owned(),
                    eta: p.eta,
                    tau: p.tau,
                    omega: p.omega,
                    pair_count: None,
                    warning: None,
                })
                .collect(),
        }
    }

    /// Relation-indexed parameters; every relation of `graph` needs exactly
    /// one record and every record must name a relation of `graph`.
    pub fn to_params(&self, graph: &MultiRelationalGraph) -> anyhow::Result<Vec<RelationParams>> {
        let mut by_name: HashMap<&str, &ParamRecord> = HashMap::new();
        for rec in &self.relation {
            if by_name.insert(rec.name.as_str(), rec).is_some() {
                bail!("relation `{}` listed twice", rec.name);
            }
            if graph.relation_index(&rec.name).is_none() {
                bail!("relation `{}` does not occur in the graph", rec.name);
            }
        }
        graph
            .relations()
            .iter()
            .map(|r| {
                let rec = by_name
                    .get(r.name.as_str())
                    .with_context(|| format!("no parameters for relation `{}`", r.name))?;
                RelationParams::new(rec.eta, rec.tau, rec.omega)
                    .with_context(|| format!("relation `{}`", r.name))
            })
            .collect()
    }
}

pub fn load_params(
    path: &Path,
    graph: &MultiRelationalGraph,
) -> anyhow::Result<Vec<RelationParams>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading params file `{}`", path.display()))?;
    let file: ParamsFile = toml::from_str(&text)
        .with_context(|| format!("parsing params file `{}`", path.display()))?;
    file.to_params(graph)
        .with_context(|| format!("in params file `{}`", path.display()))
}

/// Shortest decimal text that parses back to `v`, always with a decimal
/// point or exponent.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// `node,value,propagated` rows in node order; unreached nodes have an
/// empty value.
pub fn results_csv(
    cfg: &RunConfig,
    graph: &MultiRelationalGraph,
    values: &[f64],
    propagated: &[bool],
) -> String {
    let mut s = format!("{}\nnode,value,propagated\n", cfg.header());
    for (i, node) in graph.nodes().iter().enumerate() {
        let v = if propagated[i] {
            num(values[i])
        } else {
            String::new()
        };
        writeln!(s, "{},{},{}", node.label, v, propagated[i]).unwrap();
    }
    s
}

/// Predicted values from a results CSV; rows with `propagated = false` are
/// skipped.
pub fn load_predictions(path: &Path, graph: &MultiRelationalGraph) -> anyhow::Result<NodeValueMap> {
    let mut map = NodeValueMap::new(graph.node_count());
    for (i, raw) in read_lines(path, "predictions")?.iter().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line == "node,value,propagated" {
            continue;
        }
        let ctx = || format!("predictions file `{}`, line {}", path.display(), i + 1);
        let mut it = line.rsplitn(3, ',');
        let (Some(flag), Some(value), Some(label)) = (it.next(), it.next(), it.next()) else {
            bail!("{}: expected `node,value,propagated`", ctx());
        };
        let node = graph
            .node_index(label.trim())
            .with_context(|| format!("{}: unknown node `{label}`", ctx()))?;
        match flag.trim() {
            "true" => {
                let v: f64 = value
                    .trim()
                    .parse()
                    .with_context(|| format!("{}: invalid value `{value}`", ctx()))?;
                map.insert(node, v).with_context(ctx)?;
            }
            "false" => {}
            other => bail!(
                "{}: propagated flag must be true or false, got `{other}`",
                ctx()
            ),
        }
    }
    Ok(map)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory `{}`", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing `{}`", path.display()))
}

/// A TOML document preceded by the output header.
pub fn toml_doc<T: Serialize>(cfg: &RunConfig, value: &T) -> String {
    format!(
        "{}\n{}",
        cfg.header(),
        toml::to_string(value).expect("output documents are representable as TOML")
    )
}
