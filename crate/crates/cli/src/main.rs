//! `mrp`: estimate relation parameters, propagate values over a
//! multi-relational graph and evaluate the results.
//!
//! Exit codes: 0 success, 1 input or usage error, 2 no convergence within
//! the iteration cap.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Outcome, ParamSource};
use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "mrp",
    version,
    about = "Multi-relational propagation for node regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate per-relation parameters from the labeled nodes
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        values: Option<PathBuf>,
        #[command(flatten)]
        estimation: EstimationArgs,
    },
    /// Fill in unlabeled node values by propagation
    Propagate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        values: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        estimation: EstimationArgs,
    },
    /// Per-relation statistics of the labeled-pair differences
    Stats {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        values: Option<PathBuf>,
        /// Residuals `x_i - eta x_j` use these eta values instead of 1
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Error metrics of a results file against ground truth
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Results CSV to score
        #[arg(long)]
        predictions: Option<PathBuf>,
        /// Labeled nodes, excluded from scoring
        #[arg(long)]
        values: Option<PathBuf>,
    },
    /// Monte-Carlo comparison of MrP against label propagation
    Mc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        truth: Option<PathBuf>,
        #[command(flatten)]
        experiment: ExperimentArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        estimation: EstimationArgs,
    },
    /// Generate a synthetic graph with known parameters
    Synth {
        #[command(flatten)]
        common: Common,
        /// Synthetic graph spec (TOML)
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Overrides the seed in the spec
        #[arg(long)]
        seed: Option<u64>,
        /// Also write `labels.csv` holding this fraction of the nodes
        #[arg(long)]
        label_ratio: Option<f64>,
    },
    /// Exact minimizer of the global loss (small graphs)
    SolveExact {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        values: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        estimation: EstimationArgs,
        /// Largest number of unlabeled nodes accepted
        #[arg(long)]
        cap: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags take precedence over it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list, `src<TAB>relation<TAB>dst` per line
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Relation declarations, `relation,symmetric` per line
    #[arg(long)]
    relations: Option<PathBuf>,
}

#[derive(Args)]
struct SourceArgs {
    /// Parameter report to propagate with
    #[arg(long, conflicts_with_all = ["estimate", "lp"])]
    params: Option<PathBuf>,
    /// Estimate parameters from the labels first
    #[arg(long, conflicts_with = "lp")]
    estimate: bool,
    /// Plain label propagation (every relation at eta = 1, tau = 0, omega = 1)
    #[arg(long)]
    lp: bool,
}

impl SourceArgs {
    fn source(&self) -> ParamSource {
        if self.lp {
            ParamSource::Defaults
        } else if self.estimate {
            ParamSource::Estimate
        } else {
            ParamSource::File
        }
    }
}

#[derive(Args)]
struct EngineArgs {
    /// Damping factor in (0, 1]
    #[arg(long)]
    xi: Option<f64>,
    /// Convergence threshold as a fraction of the label range
    #[arg(long)]
    epsilon_fraction: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

#[derive(Args)]
struct EstimationArgs {
    /// Keep eta at 1 instead of fitting it
    #[arg(long)]
    fix_eta: Option<bool>,
    /// Fewest labeled pairs needed to estimate a relation
    #[arg(long)]
    min_pairs: Option<usize>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Fraction of nodes labeled in each trial
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated: mrp, lp, lp:<relation>, all
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

impl GraphArgs {
    fn apply(self, o: &mut Overrides) {
        o.paths.edges = self.edges;
        o.paths.relations = self.relations;
    }
}

impl EngineArgs {
    fn apply(self, o: &mut Overrides) {
        o.xi = self.xi;
        o.epsilon_fraction = self.epsilon_fraction;
        o.max_iterations = self.max_iterations;
    }
}

impl EstimationArgs {
    fn apply(self, o: &mut Overrides) {
        o.fix_eta = self.fix_eta;
        o.min_pairs = self.min_pairs;
    }
}

impl ExperimentArgs {
    fn apply(self, o: &mut Overrides) {
        o.ratio = self.ratio;
        o.trials = self.trials;
        o.seed = self.seed;
        o.methods = self.methods;
    }
}

fn resolve(common: Common, o: Overrides) -> anyhow::Result<RunConfig> {
    let mut o = o;
    o.paths.out = common.out;
    RunConfig::resolve(common.config.as_deref(), o)
}

fn execute(command: Command) -> anyhow::Result<Outcome> {
    let mut o = Overrides::default();
    match command {
        Command::Estimate {
            common,
            graph,
            values,
            estimation,
        } => {
            graph.apply(&mut o);
            estimation.apply(&mut o);
            o.paths.values = values;
            commands::estimate(&resolve(common, o)?)
        }
        Command::Propagate {
            common,
            graph,
            values,
            source,
            engine,
            estimation,
        } => {
            graph.apply(&mut o);
            engine.apply(&mut o);
            estimation.apply(&mut o);
            o.paths.values = values;
            let src = source.source();
            o.paths.params = source.params;
            commands::propagate(&resolve(common, o)?, src)
        }
        Command::Stats {
            common,
            graph,
            values,
            params,
            bins,
        } => {
            graph.apply(&mut o);
            o.paths.values = values;
            o.paths.params = params;
            o.bins = bins;
            commands::stats(&resolve(common, o)?)
        }
        Command::Evaluate {
            common,
            graph,
            truth,
            predictions,
            values,
        } => {
            graph.apply(&mut o);
            o.paths.truth = truth;
            o.paths.predictions = predictions;
            o.paths.values = values;
            commands::evaluate(&resolve(common, o)?)
        }
        Command::Mc {
            common,
            graph,
            truth,
            experiment,
            engine,
            estimation,
        } => {
            graph.apply(&mut o);
            experiment.apply(&mut o);
            engine.apply(&mut o);
            estimation.apply(&mut o);
            o.paths.truth = truth;
            commands::mc(&resolve(common, o)?)
        }
        Command::Synth {
            common,
            spec,
            seed,
            label_ratio,
        } => {
            o.paths.spec = spec;
            o.seed = seed;
            o.ratio = label_ratio;
            commands::synth(&resolve(common, o)?, seed, label_ratio)
        }
        Command::SolveExact {
            common,
            graph,
            values,
            source,
            estimation,
            cap,
        } => {
            graph.apply(&mut o);
            estimation.apply(&mut o);
            o.paths.values = values;
            o.cap = cap;
            let src = source.source();
            o.paths.params = source.params;
            commands::solve_exact(&resolve(common, o)?, src)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
