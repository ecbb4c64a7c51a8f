//! Multi-relational propagation (MrP) for regression of continuous node
//! values on directed multi-relational graphs.
//!
//! * [`graph`]: graph and label ingestion
//! * [`relparams`]: per-relation `(eta, tau, omega)` estimation
//! * [`engine`]: the propagation iterations and the plain LP baseline
//! * [`oracle`]: exact dense solve of the same stationarity conditions
//! * [`synthgen`]: synthetic graphs with known generating parameters
//! * [`evalharness`]: metrics and Monte-Carlo masking experiments

pub mod engine;
pub mod error;
pub mod evalharness;
pub mod graph;
pub mod oracle;
pub mod relparams;
pub mod rng;
pub mod synthgen;

pub use engine::{
    init_state, lp_run, run, step, LabelPropagation, PropagationConfig, PropagationResult,
    PropagationState, Propagator,
};
pub use error::{Error, Result};
pub use evalharness::{
    compute_metrics, run_monte_carlo, sample_labeled, ExperimentReport, ExperimentSpec, Method,
    MetricsReport,
};
pub use graph::{
    parse_edges, parse_relation_decls, parse_values, GraphBuilder, Incident, MultiRelationalGraph,
    NodeValueMap, Orientation, RelationDecl,
};
pub use oracle::{assemble, solve_exact, LinearSystem};
pub use relparams::{
    estimate, estimate_all, residual_stats, Estimate, EstimationOptions, RelationParams,
    ResidualStats,
};
pub use synthgen::{generate, SynthOutput, SynthRelation, SynthSpec};
