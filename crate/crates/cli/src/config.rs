//! Run configuration: built-in defaults, overlaid by an optional TOML file,
//! overlaid by command-line flags.
//!
//! ```toml
//! [paths]
//! edges = "graph.tsv"          # src<TAB>relation<TAB>dst
//! relations = "relations.csv"  # relation,symmetric
//! values = "labels.csv"        # node,value (the labeled nodes)
//! truth = "truth.csv"          # node,value (ground truth)
//! params = "params.toml"       # parameter report
//! predictions = "results.csv"  # node,value,propagated
//! spec = "synth.toml"          # synthetic graph spec
//! out = "out"                  # output directory
//!
//! [engine]
//! xi = 0.5
//! epsilon_fraction = 0.001
//! max_iterations = 1000
//!
//! [estimation]
//! fix_eta = true
//! min_pairs = 2
//!
//! [experiment]
//! ratio = 0.8
//! trials = 50
//! seed = 0
//! methods = ["all"]            # "mrp", "lp", "lp:<relation>", "all"
//!
//! [stats]
//! bins = 20
//!
//! [oracle]
//! cap = 2000
//! ```
//!
//! Relative paths in a config file are resolved against the file's
//! directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use mrp_core::evalharness::Method;
use mrp_core::oracle::DEFAULT_UNKNOWN_CAP;
use mrp_core::{EstimationOptions, MultiRelationalGraph, PropagationConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relations: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineSection {
    pub xi: f64,
    pub epsilon_fraction: f64,
    pub max_iterations: usize,
}

impl Default for EngineSection {
    fn default() -> Self {
        let d = PropagationConfig::default();
        Self {
            xi: d.xi,
            epsilon_fraction: d.epsilon_fraction,
            max_iterations: d.max_iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSection {
    pub fix_eta: bool,
    pub min_pairs: usize,
}

impl Default for EstimationSection {
    fn default() -> Self {
        let d = EstimationOptions::default();
        Self {
            fix_eta: d.fix_eta,
            min_pairs: d.min_pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub ratio: f64,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<String>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            ratio: 0.8,
            trials: 50,
            seed: 0,
            methods: vec!["all".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub bins: usize,
}

impl Default for StatsSection {
    fn default() -> Self {
        Self { bins: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub cap: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            cap: DEFAULT_UNKNOWN_CAP,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub engine: EngineSection,
    pub estimation: EstimationSection,
    pub experiment: ExperimentSection,
    pub stats: StatsSection,
    pub oracle: OracleSection,
}

/// Flag values; `None` leaves the config value untouched.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub paths: Paths,
    pub xi: Option<f64>,
    pub epsilon_fraction: Option<f64>,
    pub max_iterations: Option<usize>,
    pub fix_eta: Option<bool>,
    pub min_pairs: Option<usize>,
    pub ratio: Option<f64>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<String>>,
    pub bins: Option<usize>,
    pub cap: Option<usize>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<PathBuf>, value: Option<PathBuf>) {
    if value.is_some() {
        *slot = value;
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file `{}`", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config file `{}`", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.edges,
            &mut p.relations,
            &mut p.values,
            &mut p.truth,
            &mut p.params,
            &mut p.predictions,
            &mut p.spec,
            &mut p.out,
        ] {
            if let Some(rel) = slot.as_ref().filter(|p| p.is_relative()) {
                *slot = Some(base.join(rel));
            }
        }
        Ok(cfg)
    }

    /// Defaults, then `file` if given, then `overrides`.
    pub fn resolve(file: Option<&Path>, overrides: Overrides) -> anyhow::Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        let o = overrides;
        let p = &mut cfg.paths;
        set_path(&mut p.edges, o.paths.edges);
        set_path(&mut p.relations, o.paths.relations);
        set_path(&mut p.values, o.paths.values);
        set_path(&mut p.truth, o.paths.truth);
        set_path(&mut p.params, o.paths.params);
        set_path(&mut p.predictions, o.paths.predictions);
        set_path(&mut p.spec, o.paths.spec);
        set_path(&mut p.out, o.paths.out);
        set(&mut cfg.engine.xi, o.xi);
        set(&mut cfg.engine.epsilon_fraction, o.epsilon_fraction);
        set(&mut cfg.engine.max_iterations, o.max_iterations);
        set(&mut cfg.estimation.fix_eta, o.fix_eta);
        set(&mut cfg.estimation.min_pairs, o.min_pairs);
        set(&mut cfg.experiment.ratio, o.ratio);
        set(&mut cfg.experiment.trials, o.trials);
        set(&mut cfg.experiment.seed, o.seed);
        set(&mut cfg.experiment.methods, o.methods);
        set(&mut cfg.stats.bins, o.bins);
        set(&mut cfg.oracle.cap, o.cap);
        cfg.propagation().validate()?;
        Ok(cfg)
    }

    pub fn propagation(&self) -> PropagationConfig {
        PropagationConfig {
            xi: self.engine.xi,
            epsilon_fraction: self.engine.epsilon_fraction,
            max_iterations: self.engine.max_iterations,
        }
    }

    pub fn estimation(&self) -> EstimationOptions {
        EstimationOptions {
            fix_eta: self.estimation.fix_eta,
            min_pairs: self.estimation.min_pairs,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// First 16 hex digits of the SHA-256 of the effective config.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// First line of every output file.
    pub fn header(&self) -> String {
        format!("# mrp {} config={}", env!("CARGO_PKG_VERSION"), self.hash())
    }

    pub fn methods(&self, graph: &MultiRelationalGraph) -> anyhow::Result<Vec<Method>> {
        let mut out: Vec<Method> = Vec::new();
        for name in &self.experiment.methods {
            let parsed = match name.as_str() {
                "all" => mrp_core::ExperimentSpec::all_methods(graph),
                "mrp" => vec![Method::Mrp],
                "lp" => vec![Method::LpUnion],
                other => match other.strip_prefix("lp:") {
                    Some(rel) if graph.relation_index(rel).is_some() => {
                        vec![Method::LpRelation(rel.to_owned())]
                    }
                    Some(rel) => bail!("method `{other}`: unknown relation `{rel}`"),
                    None => {
                        bail!("unknown method `{other}` (expected mrp, lp, lp:<relation> or all)")
                    }
                },
            };
            for m in parsed {
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        if out.is_empty() {
            bail!("no methods selected");
        }
        Ok(out)
    }
}

pub fn require<'a>(path: &'a Option<PathBuf>, what: &str, flag: &str) -> anyhow::Result<&'a Path> {
    path.as_deref()
        .with_context(|| format!("no {what} given (use {flag} or the config file)"))
}
