//! Rendering for the `analytic` subcommand.

use serde_json::json;
use sibgain_core::{build_scenario, enumerate_treks, partial_coefficients, ScenarioConfig, ScenarioId, Trek, Var};

use crate::{FormatArg, Outcome};

struct Analysis {
    treks: Vec<(Var, Trek)>,
    coefficients: Vec<(&'static str, f64)>,
    condition_number: f64,
    near_collinear: bool,
}

fn regressors(id: ScenarioId) -> Vec<Var> {
    let mut v = vec![Var::T1, Var::T2];
    if id.has_c() {
        v.push(Var::C);
    }
    v
}

fn coefficient_name(v: Var) -> &'static str {
    match v {
        Var::T1 => "b1",
        Var::T2 => "b2",
        _ => "bC",
    }
}

/// Rounds away accumulated float noise: `-2.9999999999999996` prints as `-3`.
fn number(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn analyse(id: ScenarioId, config: &ScenarioConfig) -> Outcome<Analysis> {
    let model = build_scenario(id, config)?;
    let xs = regressors(id);
    let mut treks = Vec::new();
    for &x in &xs {
        for t in enumerate_treks(&model, x, Var::D)? {
            treks.push((x, t));
        }
    }
    let pr = partial_coefficients(&model, &xs, Var::D)?;
    Ok(Analysis {
        treks,
        coefficients: xs.iter().map(|&x| coefficient_name(x)).zip(pr.coefficients.iter().copied()).collect(),
        condition_number: pr.condition_number,
        near_collinear: pr.near_collinear,
    })
}

pub fn render(id: ScenarioId, config: &ScenarioConfig, format: Option<FormatArg>) -> Outcome<String> {
    let a = analyse(id, config)?;
    let summary = a.coefficients.iter().map(|(n, v)| format!("{n}={}", number(*v))).collect::<Vec<_>>().join(" ");
    Ok(match format {
        Some(FormatArg::Csv) => {
            let mut out = String::from("kind,from,to,path,value\n");
            for (x, t) in &a.treks {
                out.push_str(&format!("trek,{x},D,{t},{}\n", number(t.product)));
            }
            for (name, v) in &a.coefficients {
                out.push_str(&format!("coefficient,{name},D,,{}\n", number(*v)));
            }
            out.push_str(&format!("condition_number,,,,{:e}\n", a.condition_number));
            out
        }
        Some(FormatArg::Json) => {
            let treks: Vec<_> = a
                .treks
                .iter()
                .map(|(x, t)| json!({ "from": x.to_string(), "to": "D", "path": t.to_string(), "product": t.product }))
                .collect();
            let coefficients: serde_json::Map<_, _> =
                a.coefficients.iter().map(|(n, v)| (n.to_string(), json!(v))).collect();
            let doc = json!({
                "scenario": id,
                "treks": treks,
                "coefficients": coefficients,
                "condition_number": a.condition_number,
                "near_collinear": a.near_collinear,
            });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
        Some(FormatArg::Md) | None => {
            let paths: Vec<String> = a.treks.iter().map(|(_, t)| t.to_string()).collect();
            let width = paths.iter().map(|p| p.chars().count()).max().unwrap_or(4).max(4);
            let mut out = format!("scenario {id}\n\n{:<6}  {:<width$}  product\n", "pair", "path");
            for ((x, t), path) in a.treks.iter().zip(&paths) {
                out.push_str(&format!("{:<6}  {path:<width$}  {}\n", format!("{x}~D"), number(t.product)));
            }
            out.push_str(&format!("\ncondition number {:.3e}", a.condition_number));
            if a.near_collinear {
                out.push_str(" (near collinear)");
            }
            out.push('\n');
            out.push_str(&summary);
            out.push('\n');
            out
        }
    })
}
