use thiserror::Error;

use crate::sem_graph::Var;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {key}: {message}")]
    InvalidConfig { key: &'static str, message: String },

    #[error("config {}: {message}", describe_location(.key, *.line))]
    ConfigParse { key: Option<String>, line: Option<usize>, message: String },

    #[error("cycle detected: {}", format_cycle(.0))]
    Cycle(Vec<Var>),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("unknown simulation set `{0}` (expected 1.1, 1.2, 2.1 or 2.2)")]
    UnknownSimulationSet(String),

    #[error("variable {0} is not part of the model")]
    MissingVariable(Var),

    #[error("invalid structural model: {0}")]
    InvalidModel(String),

    #[error("collinear regressors (condition number {condition:.3e})")]
    CollinearRegressors { condition: f64 },

    #[error("collinear design: column `{column}` is linearly dependent on earlier columns")]
    CollinearDesign { column: String },

    #[error("need more than {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("column length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("degenerate denominator: |chi * gamma| = 1")]
    DegenerateDenominator,

    #[error("matrix inversion failed: {0}")]
    Singular(&'static str),

    #[error("replication {run} failed: {source}")]
    Replication {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mismatched aggregates: {0}")]
    MismatchedAggregates(String),

    #[error("failed to build thread pool: {0}")]
    ThreadPool(String),
}

fn format_cycle(vars: &[Var]) -> String {
    let mut s: Vec<String> = vars.iter().map(|v| v.to_string()).collect();
    if let Some(first) = vars.first() {
        s.push(first.to_string());
    }
    s.join(" -> ")
}

fn describe_location(key: &Option<String>, line: Option<usize>) -> String {
    match (key, line) {
        (Some(k), Some(l)) => format!("key `{k}` (line {l})"),
        (Some(k), None) => format!("key `{k}`"),
        (None, Some(l)) => format!("line {l}"),
        (None, None) => "input".into(),
    }
}
