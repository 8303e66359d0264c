//! Monte Carlo grids over scenarios and simulation sets.
//!
//! A cell is `n_runs` independent replications of one scenario under one
//! simulation set. Replication `r` always uses the random stream keyed by
//! `(seed, r)`, and per-run results are reduced in run order, so a cell's
//! output does not depend on the number of worker threads. Every cell of a
//! grid shares the same streams, as the original design used one seed for all
//! models.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::dgp::generate_replication;
use crate::error::{Error, Result};
use crate::ols::{gain_score_regression, FitResult};
use crate::sem_graph::{ScenarioConfig, ScenarioId};

/// The four `(eta, pi)` combinations of the simulation design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SimulationSet {
    /// No interference, `C` associated with `U'`.
    S11,
    /// Interference, `C` associated with `U'`.
    S12,
    /// No interference, `C` independent of `U'`.
    S21,
    /// Interference, `C` independent of `U'`.
    S22,
}

impl SimulationSet {
    pub const ALL: [SimulationSet; 4] =
        [SimulationSet::S11, SimulationSet::S12, SimulationSet::S21, SimulationSet::S22];

    pub fn eta(self) -> f64 {
        match self {
            SimulationSet::S11 | SimulationSet::S21 => 0.0,
            SimulationSet::S12 | SimulationSet::S22 => 0.3,
        }
    }

    pub fn pi(self) -> f64 {
        match self {
            SimulationSet::S11 | SimulationSet::S12 => 0.5,
            SimulationSet::S21 | SimulationSet::S22 => 0.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SimulationSet::S11 => "1.1",
            SimulationSet::S12 => "1.2",
            SimulationSet::S21 => "2.1",
            SimulationSet::S22 => "2.2",
        }
    }

    /// Set pair (1 or 2) sharing the same `pi`.
    pub fn pair(self) -> u8 {
        match self {
            SimulationSet::S11 | SimulationSet::S12 => 1,
            SimulationSet::S21 | SimulationSet::S22 => 2,
        }
    }

    /// Overwrites `eta` and `pi` in `config`.
    pub fn apply(self, config: &mut ScenarioConfig) {
        config.eta = self.eta();
        config.pi = self.pi();
    }
}

impl Serialize for SimulationSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl fmt::Display for SimulationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SimulationSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SimulationSet::ALL
            .into_iter()
            .find(|set| set.label() == s.trim())
            .ok_or_else(|| Error::UnknownSimulationSet(s.to_string()))
    }
}

/// Across-replication summary of one regressor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressorSummary {
    pub label: String,
    pub mean_coefficient: f64,
    pub mean_ci_low: f64,
    pub mean_ci_high: f64,
    pub mean_standard_error: f64,
    /// Sample standard deviation of the coefficient across runs.
    pub sd_coefficient: f64,
    /// Percent of runs whose 95% CI contains zero.
    pub coverage_pct: f64,
}

impl RegressorSummary {
    /// Monte Carlo standard error of `mean_coefficient`.
    pub fn mc_standard_error(&self, n_runs: usize) -> f64 {
        self.sd_coefficient / (n_runs as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    pub scenario: ScenarioId,
    pub set: Option<SimulationSet>,
    pub eta: f64,
    pub pi: f64,
    pub n_runs: usize,
    pub n_obs: usize,
    pub regressors: Vec<RegressorSummary>,
}

impl AggregateResult {
    pub fn get(&self, label: &str) -> Option<&RegressorSummary> {
        self.regressors.iter().find(|r| r.label == label)
    }

    /// The robustness-test coefficient `b_C`, when the model has `C`.
    pub fn focal(&self) -> Option<&RegressorSummary> {
        self.get("c")
    }

    pub fn coverage_pct(&self) -> Option<f64> {
        self.focal().map(|r| r.coverage_pct)
    }
}

/// Reduces per-run fits (in run order) to per-regressor summaries.
pub fn summarize(fits: &[FitResult]) -> Vec<RegressorSummary> {
    let Some(first) = fits.first() else {
        return Vec::new();
    };
    let runs = fits.len() as f64;
    first
        .labels
        .iter()
        .enumerate()
        .map(|(j, label)| {
            let mut sum = [0.0; 4];
            let mut covered = 0usize;
            for fit in fits {
                let e = &fit.estimates[j];
                sum[0] += e.coefficient;
                sum[1] += e.ci_low;
                sum[2] += e.ci_high;
                sum[3] += e.standard_error;
                covered += e.ci_covers_zero() as usize;
            }
            let mean = sum[0] / runs;
            let ss: f64 = fits.iter().map(|f| (f.estimates[j].coefficient - mean).powi(2)).sum();
            let sd = if fits.len() > 1 { (ss / (runs - 1.0)).sqrt() } else { 0.0 };
            RegressorSummary {
                label: label.clone(),
                mean_coefficient: mean,
                mean_ci_low: sum[1] / runs,
                mean_ci_high: sum[2] / runs,
                mean_standard_error: sum[3] / runs,
                sd_coefficient: sd,
                coverage_pct: 100.0 * covered as f64 / runs,
            }
        })
        .collect()
}

/// Runs the replications of `id` with `config` as given (no set override).
pub fn run_replications(id: ScenarioId, config: &ScenarioConfig) -> Result<AggregateResult> {
    config.validate()?;
    let results: Vec<Result<FitResult>> = (0..config.n_runs)
        .into_par_iter()
        .map(|run| {
            generate_replication(config, id, run)
                .and_then(|sample| gain_score_regression(&sample, id.has_c(), false))
                .map_err(|e| Error::Replication { run, source: Box::new(e) })
        })
        .collect();
    let fits = results.into_iter().collect::<Result<Vec<_>>>()?;

    Ok(AggregateResult {
        scenario: id,
        set: None,
        eta: config.eta,
        pi: config.pi,
        n_runs: config.n_runs,
        n_obs: config.n_obs,
        regressors: summarize(&fits),
    })
}

/// One table cell: `config` with `eta` and `pi` taken from `set`.
pub fn run_cell(id: ScenarioId, set: SimulationSet, config: &ScenarioConfig) -> Result<AggregateResult> {
    let mut cfg = config.clone();
    set.apply(&mut cfg);
    let mut agg = run_replications(id, &cfg)?;
    agg.set = Some(set);
    Ok(agg)
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Coverage thresholds for calling the robustness test valid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityRule {
    /// Minimum `b_C` coverage (%) without interference.
    pub min_null_coverage: f64,
    /// Maximum `b_C` coverage (%) with interference.
    pub max_signal_coverage: f64,
}

impl Default for ValidityRule {
    /// The null floor sits 2.5 points below the nominal 95%: about 3.6 Monte
    /// Carlo standard errors at 1,000 runs.
    fn default() -> Self {
        Self { min_null_coverage: 92.5, max_signal_coverage: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityVerdict {
    pub scenario: ScenarioId,
    pub set_pair: u8,
    pub valid: bool,
    pub null_coverage: f64,
    pub signal_coverage: f64,
    pub rationale: String,
}

/// Whether `b_C` stays null without interference and flags it with interference.
pub fn classify_validity(agg_eta0: &AggregateResult, agg_eta03: &AggregateResult) -> Result<ValidityVerdict> {
    classify_validity_with(ValidityRule::default(), agg_eta0, agg_eta03)
}

pub fn classify_validity_with(
    rule: ValidityRule,
    agg_eta0: &AggregateResult,
    agg_eta03: &AggregateResult,
) -> Result<ValidityVerdict> {
    if agg_eta0.scenario != agg_eta03.scenario {
        return Err(Error::MismatchedAggregates(format!("scenarios {} and {}", agg_eta0.scenario, agg_eta03.scenario)));
    }
    if agg_eta0.pi != agg_eta03.pi {
        return Err(Error::MismatchedAggregates(format!("pi {} and {}", agg_eta0.pi, agg_eta03.pi)));
    }
    if agg_eta0.eta != 0.0 || agg_eta03.eta == 0.0 {
        return Err(Error::MismatchedAggregates(format!(
            "expected eta = 0 then eta != 0, got {} and {}",
            agg_eta0.eta, agg_eta03.eta
        )));
    }
    let (Some(null), Some(signal)) = (agg_eta0.coverage_pct(), agg_eta03.coverage_pct()) else {
        return Err(Error::MismatchedAggregates(format!("scenario {} has no C", agg_eta0.scenario)));
    };

    let null_ok = null >= rule.min_null_coverage;
    let signal_ok = signal <= rule.max_signal_coverage;
    let set_pair = match agg_eta0.set {
        Some(set) => set.pair(),
        None if agg_eta0.pi != 0.0 => 1,
        None => 2,
    };
    let rationale = format!(
        "coverage {null:.1}% without interference ({} {:.1}%), {signal:.1}% with interference ({} {:.1}%)",
        if null_ok { ">=" } else { "<" },
        rule.min_null_coverage,
        if signal_ok { "<=" } else { ">" },
        rule.max_signal_coverage,
    );
    Ok(ValidityVerdict {
        scenario: agg_eta0.scenario,
        set_pair,
        valid: null_ok && signal_ok,
        null_coverage: null,
        signal_coverage: signal,
        rationale,
    })
}

/// The reproducible result grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TableKind {
    /// `b_C` for the seven main models across the four sets.
    Table1,
    /// Same grid, reporting `b1`, `b2` and `b_C`.
    Appendix1,
    /// Single-treatment `C` associations across the four sets.
    Appendix2,
}

impl TableKind {
    pub fn name(self) -> &'static str {
        match self {
            TableKind::Table1 => "table1",
            TableKind::Appendix1 => "appendix1",
            TableKind::Appendix2 => "appendix2",
        }
    }

    pub fn scenarios(self) -> &'static [ScenarioId] {
        match self {
            TableKind::Table1 | TableKind::Appendix1 => &[
                ScenarioId::Fig1D,
                ScenarioId::Fig2A,
                ScenarioId::Fig2B,
                ScenarioId::Fig2C,
                ScenarioId::Fig2D,
                ScenarioId::Fig2E,
                ScenarioId::Fig2F,
            ],
            TableKind::Appendix2 => &[ScenarioId::PostHocNuOnly, ScenarioId::PostHocTauOnly],
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `base` with the additional parameters the grids use for `id`.
pub fn grid_config(id: ScenarioId, base: &ScenarioConfig) -> ScenarioConfig {
    let mut cfg = base.clone();
    match id {
        ScenarioId::Fig2A => cfg.phi = 0.9,
        ScenarioId::Fig2B => {
            cfg.tau = 0.7;
            cfg.nu = 1.5;
        }
        ScenarioId::Fig2C => cfg.lambda = 2.5,
        ScenarioId::Fig2D => {
            cfg.theta = 1.2;
            cfg.kappa = 0.6;
        }
        ScenarioId::Fig2E => {
            cfg.lambda = 2.5;
            cfg.omega = 2.8;
        }
        ScenarioId::Fig2F => cfg.mu = 0.4,
        ScenarioId::PostHocNuOnly => {
            cfg.tau = 0.0;
            cfg.nu = 1.5;
        }
        ScenarioId::PostHocTauOnly => {
            cfg.tau = 0.7;
            cfg.nu = 0.0;
        }
        _ => {}
    }
    cfg
}

/// Human-readable additional parameters of `id` under `config`.
pub fn describe_parameters(id: ScenarioId, config: &ScenarioConfig) -> String {
    let names: &[&str] = match id {
        ScenarioId::PostHocNuOnly | ScenarioId::PostHocTauOnly => &["tau", "nu"],
        _ => id.extra_parameters(),
    };
    if names.is_empty() {
        return "none".into();
    }
    let coefficients = config.coefficients();
    names
        .iter()
        .map(|name| {
            let value = coefficients.iter().find(|(k, _)| k == name).map_or(0.0, |(_, v)| *v);
            format!("{name}={value}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub scenario: ScenarioId,
    pub set: Option<SimulationSet>,
    pub extra_params: String,
    pub aggregate: AggregateResult,
    /// Verdict of the row's set pair, if one was classified.
    pub valid: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultTable {
    pub name: String,
    pub rows: Vec<TableRow>,
    pub verdicts: Vec<ValidityVerdict>,
}

impl ResultTable {
    pub fn row(&self, id: ScenarioId, set: SimulationSet) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.scenario == id && r.set == Some(set))
    }

    pub fn verdict(&self, id: ScenarioId, pair: u8) -> Option<&ValidityVerdict> {
        self.verdicts.iter().find(|v| v.scenario == id && v.set_pair == pair)
    }

    /// A one-row table for a single cell.
    pub fn single(id: ScenarioId, config: &ScenarioConfig, aggregate: AggregateResult) -> Self {
        ResultTable {
            name: "cell".into(),
            rows: vec![TableRow {
                scenario: id,
                set: aggregate.set,
                extra_params: describe_parameters(id, config),
                aggregate,
                valid: None,
            }],
            verdicts: Vec::new(),
        }
    }
}

/// Runs a full grid: every scenario of `kind` under all four sets, with
/// `base` supplying the baseline effects, sizes, thresholds and seed.
pub fn run_table(kind: TableKind, base: &ScenarioConfig) -> Result<ResultTable> {
    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    for &id in kind.scenarios() {
        let cfg = grid_config(id, base);
        let extra_params = describe_parameters(id, &cfg);
        let cells = SimulationSet::ALL.into_iter().map(|set| run_cell(id, set, &cfg)).collect::<Result<Vec<_>>>()?;
        let pair1 = classify_validity(&cells[0], &cells[1])?;
        let pair2 = classify_validity(&cells[2], &cells[3])?;
        for aggregate in cells {
            let valid = match aggregate.set.map(SimulationSet::pair) {
                Some(1) => Some(pair1.valid),
                Some(_) => Some(pair2.valid),
                None => None,
            };
            rows.push(TableRow {
                scenario: id,
                set: aggregate.set,
                extra_params: extra_params.clone(),
                aggregate,
                valid,
            });
        }
        verdicts.push(pair1);
        verdicts.push(pair2);
    }
    Ok(ResultTable { name: kind.name().into(), rows, verdicts })
}
