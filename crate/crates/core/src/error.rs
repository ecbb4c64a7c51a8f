use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("line {line}: self-loop on node `{node}`")]
    SelfLoop { line: usize, node: String },

    #[error("line {line}: duplicate edge `{src}` -[{relation}]-> `{dst}`")]
    DuplicateEdge {
        line: usize,
        src: String,
        relation: String,
        dst: String,
    },

    #[error("empty input: no edges")]
    EmptyInput,

    #[error("line {line}: unknown node `{node}`")]
    UnknownNode { line: usize, node: String },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("line {line}: duplicate relation declaration `{relation}`")]
    DuplicateRelation { line: usize, relation: String },

    #[error("line {line}: invalid value `{raw}` (must be a finite real)")]
    InvalidValue { line: usize, raw: String },

    #[error("line {line}: duplicate entry for node `{node}`")]
    DuplicateValue { line: usize, node: String },

    #[error("no labeled nodes")]
    NoLabels,

    #[error("relation `{relation}`: degenerate neighbor values (zero spread around the mean)")]
    DegenerateNeighborValues { relation: String },

    #[error("non-invertible scaling: |eta| = {eta} is below 1e-9")]
    NonInvertibleScaling { eta: f64 },

    #[error("relation `{relation}`: no labeled pairs")]
    NoLabeledPairs { relation: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear system is singular or indefinite on component {component:?}")]
    SingularSystem { component: Vec<String> },

    #[error("exact solve needs {unknowns} unknowns, above the cap of {cap}")]
    OracleCapExceeded { unknowns: usize, cap: usize },

    #[error("evaluation set is empty")]
    EmptyEvalSet,

    #[error("MAPE undefined: every ground-truth value in the evaluation set is zero")]
    MapeUndefined,

    #[error("labeled sample of size {size} out of {total} nodes is empty or full")]
    DegenerateSample { size: usize, total: usize },
}
