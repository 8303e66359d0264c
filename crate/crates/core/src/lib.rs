//! Simulation and path-analytic study of a gain-score robustness test for
//! outcome-to-outcome interference between siblings.
//!
//! * [`sem_graph`] builds the structural models and checks their wiring.
//! * [`analytic`] enumerates treks and computes population covariances and
//!   partial regression coefficients.
//! * [`dgp`] draws sibling-pair samples from a model.
//! * [`ols`] fits the gain-score regressions.
//! * [`harness`] runs Monte Carlo cells and full result grids.
//! * [`config`] and [`report`] handle scenario files and table output.

pub mod analytic;
pub mod config;
pub mod dgp;
pub mod error;
pub mod harness;
pub mod ols;
pub mod report;
pub mod sem_graph;

pub use analytic::{
    closed_form_b1_b2, enumerate_treks, implied_covariance_matrix, partial_coefficients, trek_covariance, CovMatrix,
    PartialRegression, Trek,
};
pub use config::{apply_override, config_hash, parse_config, to_toml};
pub use dgp::{generate, generate_replication, replication_rng, PairSample};
pub use error::{Error, Result};
pub use harness::{
    classify_validity, run_cell, run_table, with_threads, AggregateResult, RegressorSummary, ResultTable,
    SimulationSet, TableKind, ValidityRule, ValidityVerdict,
};
pub use ols::{fit, gain_score_regression, Estimate, FitResult};
pub use report::{Format, Provenance};
pub use sem_graph::{
    build_scenario, topological_order, validate, BidirectedEdge, DirectedEdge, ScenarioConfig, ScenarioId,
    StructuralModel, Var,
};
