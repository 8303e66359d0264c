//! Flat TOML scenario files.
//!
//! Every key is a [`ScenarioConfig`] field name:
//!
//! ```toml
//! delta = 3.0
//! chi = 1.0
//! gamma = 2.0
//! psi = 5.0
//! eta = 0.3
//! n_obs = 5000
//! n_runs = 1000
//! seed = 20160301
//! ```
//!
//! Omitted coefficients are 0, omitted sizes and seed take their defaults,
//! omitted thresholds are `threshold_c = 1`, `threshold_t1 = -0.2`,
//! `threshold_t2 = 1`. Unknown keys and tables are rejected. A seed above
//! `i64::MAX` may be given as a quoted decimal string.

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::sem_graph::ScenarioConfig;

fn parse_error(key: &str, line: Option<usize>, message: impl Into<String>) -> Error {
    Error::ConfigParse { key: Some(key.to_string()), line, message: message.into() }
}

/// 1-based line of the first `key =` assignment in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|line| {
            let line = line.trim_start();
            line.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

fn line_at_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn float_field(value: &Value) -> std::result::Result<f64, String> {
    match value {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(format!("expected a number, found {}", other.type_str())),
    }
}

fn size_field(value: &Value) -> std::result::Result<usize, String> {
    match value {
        Value::Integer(i) => usize::try_from(*i).map_err(|_| format!("expected a non-negative integer, found {i}")),
        other => Err(format!("expected an integer, found {}", other.type_str())),
    }
}

fn seed_field(value: &Value) -> std::result::Result<u64, String> {
    match value {
        Value::Integer(i) => u64::try_from(*i).map_err(|_| format!("seed must be non-negative, found {i}")),
        Value::String(s) => s.trim().parse().map_err(|_| format!("`{s}` is not an unsigned 64-bit seed")),
        other => Err(format!("expected an integer, found {}", other.type_str())),
    }
}

/// Sets one field from a TOML value.
fn set_field(config: &mut ScenarioConfig, key: &str, value: &Value) -> std::result::Result<(), String> {
    let slot = match key {
        "n_obs" => {
            config.n_obs = size_field(value)?;
            return Ok(());
        }
        "n_runs" => {
            config.n_runs = size_field(value)?;
            return Ok(());
        }
        "seed" => {
            config.seed = seed_field(value)?;
            return Ok(());
        }
        "delta" => &mut config.delta,
        "chi" => &mut config.chi,
        "gamma" => &mut config.gamma,
        "psi" => &mut config.psi,
        "eta" => &mut config.eta,
        "pi" => &mut config.pi,
        "phi" => &mut config.phi,
        "tau" => &mut config.tau,
        "nu" => &mut config.nu,
        "lambda" => &mut config.lambda,
        "omega" => &mut config.omega,
        "theta" => &mut config.theta,
        "kappa" => &mut config.kappa,
        "mu" => &mut config.mu,
        "threshold_c" => &mut config.threshold_c,
        "threshold_t1" => &mut config.threshold_t1,
        "threshold_t2" => &mut config.threshold_t2,
        _ => return Err("unknown key".into()),
    };
    *slot = float_field(value)?;
    Ok(())
}

/// Parses a scenario file on top of `ScenarioConfig::default()`.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_config_over(text, ScenarioConfig::default())
}

/// Parses a scenario file, starting from `base` for omitted keys.
pub fn parse_config_over(text: &str, base: ScenarioConfig) -> Result<ScenarioConfig> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| Error::ConfigParse {
        key: None,
        line: e.span().map(|span| line_at_offset(text, span.start)),
        message: e.message().to_string(),
    })?;
    let mut config = base;
    for (key, value) in &table {
        set_field(&mut config, key, value).map_err(|message| parse_error(key, line_of(text, key), message))?;
    }
    config.validate().map_err(|e| match e {
        Error::InvalidConfig { key, message } => parse_error(key, line_of(text, key), message),
        other => other,
    })?;
    Ok(config)
}

/// Applies a `key=value` override, with `value` in TOML syntax.
pub fn apply_override(config: &mut ScenarioConfig, assignment: &str) -> Result<()> {
    let Some((key, raw)) = assignment.split_once('=') else {
        return Err(Error::ConfigParse {
            key: None,
            line: None,
            message: format!("override `{assignment}` is not of the form key=value"),
        });
    };
    let key = key.trim();
    let raw = raw.trim();
    let doc = format!("v = {raw}");
    let value = match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("single key"),
        // Bare words such as an unquoted seed string fall back to a string.
        Err(_) => Value::String(raw.to_string()),
    };
    set_field(config, key, &value).map_err(|message| parse_error(key, None, message))
}

/// Serializes `config` so that [`parse_config`] returns it unchanged.
pub fn to_toml(config: &ScenarioConfig) -> String {
    let mut out = String::new();
    for (key, value) in config.coefficients() {
        out.push_str(&format!("{key} = {}\n", float_literal(value)));
    }
    out.push_str(&format!("n_obs = {}\n", config.n_obs));
    out.push_str(&format!("n_runs = {}\n", config.n_runs));
    if config.seed <= i64::MAX as u64 {
        out.push_str(&format!("seed = {}\n", config.seed));
    } else {
        out.push_str(&format!("seed = \"{}\"\n", config.seed));
    }
    for (key, value) in [
        ("threshold_c", config.threshold_c),
        ("threshold_t1", config.threshold_t1),
        ("threshold_t2", config.threshold_t2),
    ] {
        out.push_str(&format!("{key} = {}\n", float_literal(value)));
    }
    out
}

/// Shortest round-tripping TOML float.
fn float_literal(value: f64) -> String {
    if value.is_nan() {
        "nan".into()
    } else if value.is_infinite() {
        if value > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{value:?}")
    }
}

/// SHA-256 of the canonical dump, as lowercase hex.
pub fn config_hash(config: &ScenarioConfig) -> String {
    hex::encode(Sha256::digest(to_toml(config).as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_omitted_keys() {
        let c = parse_config("delta = 3\nchi = 1.0\n").unwrap();
        assert_eq!(c.delta, 3.0);
        assert_eq!(c.chi, 1.0);
        assert_eq!(c.gamma, 0.0);
        assert_eq!(c.n_obs, 5000);
        assert_eq!(c.n_runs, 1000);
        assert_eq!(c.seed, 20160301);
        assert_eq!(c.threshold_t1, -0.2);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = parse_config("delta = 3\n\nzeta = 1\n").unwrap_err();
        match err {
            Error::ConfigParse { key, line, .. } => {
                assert_eq!(key.as_deref(), Some("zeta"));
                assert_eq!(line, Some(3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn type_errors_name_key() {
        let err = parse_config("n_obs = 1.5\n").unwrap_err().to_string();
        assert!(err.contains("n_obs") && err.contains("line 1"), "{err}");
        let err = parse_config("delta = \"three\"\n").unwrap_err().to_string();
        assert!(err.contains("delta"), "{err}");
        let err = parse_config("seed = -4\n").unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn syntax_error_has_line() {
        match parse_config("delta = 3\nchi = = 1\n").unwrap_err() {
            Error::ConfigParse { line, .. } => assert_eq!(line, Some(2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invariant_violations_are_located() {
        let err = parse_config("mu = 0.4\nkappa = 0.6\n").unwrap_err();
        assert!(matches!(err, Error::ConfigParse { line: Some(1), .. }), "{err}");
        assert!(parse_config("n_obs = 1\n").is_err());
    }

    #[test]
    fn overrides() {
        let mut c = ScenarioConfig::baseline();
        apply_override(&mut c, "eta=0.3").unwrap();
        apply_override(&mut c, " n_runs = 10 ").unwrap();
        apply_override(&mut c, "seed=18446744073709551615").unwrap();
        assert_eq!((c.eta, c.n_runs, c.seed), (0.3, 10, u64::MAX));
        assert!(apply_override(&mut c, "zeta=1").is_err());
        assert!(apply_override(&mut c, "eta").is_err());
    }

    #[test]
    fn large_seed_round_trips() {
        let c = ScenarioConfig { seed: u64::MAX, ..ScenarioConfig::baseline() };
        let text = to_toml(&c);
        assert!(text.contains("seed = \"18446744073709551615\""));
        assert_eq!(parse_config(&text).unwrap(), c);
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::baseline();
        let b = ScenarioConfig { eta: 0.3, ..a.clone() };
        assert_eq!(config_hash(&a), config_hash(&a.clone()));
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
