//! CSV, JSON and Markdown renderings of result tables.
//!
//! Each output carries a provenance record with the tool version, seed and
//! config hash. Thread counts are deliberately left out so that output bytes
//! do not depend on how a run was scheduled.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::config::config_hash;
use crate::error::{Error, Result};
use crate::harness::{RegressorSummary, ResultTable, TableRow};
use crate::sem_graph::ScenarioConfig;

pub const TOOL_NAME: &str = "sibgain";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
}

impl Provenance {
    pub fn new(config: &ScenarioConfig) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config_sha256: config_hash(config),
        }
    }

    fn line(&self, table: &str) -> String {
        format!("{} {} table={table} seed={} config_sha256={}", self.tool, self.version, self.seed, self.config_sha256)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            _ => Err(Error::ConfigParse {
                key: Some("format".into()),
                line: None,
                message: format!("unknown format `{s}` (expected csv, json or md)"),
            }),
        }
    }
}

pub fn render(format: Format, table: &ResultTable, provenance: &Provenance) -> String {
    match format {
        Format::Csv => to_csv(table, provenance),
        Format::Json => to_json(table, provenance),
        Format::Markdown => to_markdown(table, provenance),
    }
}

pub const CSV_COLUMNS: [&str; 18] = [
    "scenario",
    "set",
    "eta",
    "pi",
    "extra_params",
    "b1",
    "b1_ci_low",
    "b1_ci_high",
    "b2",
    "b2_ci_low",
    "b2_ci_high",
    "bc",
    "bc_ci_low",
    "bc_ci_high",
    "coverage_pct",
    "valid",
    "n_runs",
    "n_obs",
];

fn triple(summary: Option<&RegressorSummary>) -> [String; 3] {
    match summary {
        Some(s) => {
            [format!("{:.6}", s.mean_coefficient), format!("{:.6}", s.mean_ci_low), format!("{:.6}", s.mean_ci_high)]
        }
        None => Default::default(),
    }
}

fn verdict_word(valid: Option<bool>) -> &'static str {
    match valid {
        Some(true) => "yes",
        Some(false) => "no",
        None => "",
    }
}

fn csv_record(row: &TableRow) -> Vec<String> {
    let agg = &row.aggregate;
    let mut record = vec![
        row.scenario.label().to_string(),
        row.set.map(|s| s.label().to_string()).unwrap_or_default(),
        agg.eta.to_string(),
        agg.pi.to_string(),
        row.extra_params.clone(),
    ];
    record.extend(triple(agg.get("t1")));
    record.extend(triple(agg.get("t2")));
    record.extend(triple(agg.focal()));
    record.push(agg.coverage_pct().map(|c| format!("{c:.1}")).unwrap_or_default());
    record.push(verdict_word(row.valid).into());
    record.push(agg.n_runs.to_string());
    record.push(agg.n_obs.to_string());
    record
}

/// One row per scenario and set, LF-terminated, after a `#` provenance line.
pub fn to_csv(table: &ResultTable, provenance: &Provenance) -> String {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    writer.write_record(CSV_COLUMNS).expect("in-memory write");
    for row in &table.rows {
        writer.write_record(csv_record(row)).expect("in-memory write");
    }
    let body = String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    format!("# {}\n{body}", provenance.line(&table.name))
}

pub fn to_json(table: &ResultTable, provenance: &Provenance) -> String {
    let rows: Vec<_> = table
        .rows
        .iter()
        .map(|row| {
            json!({
                "scenario": row.scenario,
                "set": row.set,
                "eta": row.aggregate.eta,
                "pi": row.aggregate.pi,
                "extra_params": row.extra_params,
                "n_runs": row.aggregate.n_runs,
                "n_obs": row.aggregate.n_obs,
                "regressors": row.aggregate.regressors,
                "coverage_pct": row.aggregate.coverage_pct(),
                "valid": row.valid,
            })
        })
        .collect();
    let doc = json!({
        "provenance": provenance,
        "tables": { table.name.clone(): { "rows": rows, "verdicts": table.verdicts } },
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    text
}

fn estimate_cell(summary: Option<&RegressorSummary>) -> String {
    match summary {
        Some(s) => format!("{:.3} ({:.3}, {:.3})", s.mean_coefficient, s.mean_ci_low, s.mean_ci_high),
        None => "-".into(),
    }
}

/// Aligned pipe table.
pub fn to_markdown(table: &ResultTable, provenance: &Provenance) -> String {
    let header = [
        "Model",
        "Additional parameters",
        "Set",
        "eta",
        "pi",
        "b1 (95% CI)",
        "b2 (95% CI)",
        "bC (95% CI)",
        "Coverage %",
        "Valid",
    ];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    for row in &table.rows {
        let agg = &row.aggregate;
        cells.push(vec![
            row.scenario.label().into(),
            row.extra_params.clone(),
            row.set.map(|s| s.label().to_string()).unwrap_or_default(),
            agg.eta.to_string(),
            agg.pi.to_string(),
            estimate_cell(agg.get("t1")),
            estimate_cell(agg.get("t2")),
            estimate_cell(agg.focal()),
            agg.coverage_pct().map(|c| format!("{c:.1}")).unwrap_or_else(|| "-".into()),
            match row.valid {
                Some(true) => "Yes".into(),
                Some(false) => "No".into(),
                None => "-".into(),
            },
        ]);
    }
    let widths: Vec<usize> =
        (0..header.len()).map(|j| cells.iter().map(|r| r[j].chars().count()).max().unwrap_or(0)).collect();

    let mut out = format!("<!-- {} -->\n\n", provenance.line(&table.name));
    let mut push_row = |row: &[String]| {
        out.push('|');
        for (cell, width) in row.iter().zip(&widths) {
            let _ = write!(out, " {cell:<width$} |");
        }
        out.push('\n');
    };
    push_row(&cells[0]);
    push_row(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in &cells[1..] {
        push_row(row);
    }
    out
}
