//! Versioned report format and its JSON/CSV renderings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::{Check, ExperimentConfig};
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Outcome of one named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs: BTreeMap<String, Value>,
    pub outputs: BTreeMap<String, Value>,
    /// Signed slack of each tested inequality; negative means violated.
    pub margins: BTreeMap<String, Value>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub tool_version: String,
    /// SHA-256 of the canonical config JSON.
    pub config_hash: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

/// JSON number, or a string for values JSON cannot carry (`inf`, `nan`).
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Reads back a value written by [`num`].
pub fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    hex(&Sha256::digest(canonical.as_bytes()))
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                flatten(&format!("{prefix}.{k}"), x, rows);
            }
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, rows);
            }
        }
        Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        Value::Null => rows.push((prefix.to_string(), String::new())),
        other => rows.push((prefix.to_string(), other.to_string())),
    }
}

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig, checks: Vec<CheckRecord>) -> Self {
        ExperimentReport {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            config_hash: config_hash(config),
            seed: config.seed,
            config: config.clone(),
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Io(format!("report does not parse: {e}")))
    }

    /// Copy with every timing field zeroed.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for c in &mut r.checks {
            c.wall_time = 0.0;
        }
        r
    }

    /// SHA-256 of the report with timing removed.
    pub fn payload_hash(&self) -> String {
        hex(&Sha256::digest(self.without_timing().to_json().as_bytes()))
    }

    /// Structural checks of a (possibly re-read) report.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Io(format!("invalid report: {m}")));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema version {}", self.schema_version));
        }
        if self.config_hash != config_hash(&self.config) {
            return bad("config hash does not match the config echo".into());
        }
        if self.checks.len() != self.config.checks.len() {
            return bad("check count differs from the config".into());
        }
        for (rec, name) in self.checks.iter().zip(&self.config.checks) {
            if &rec.name != name || rec.name.parse::<Check>().is_err() {
                return bad(format!("unexpected check record '{}'", rec.name));
            }
            if let Some((k, _)) = rec.margins.iter().find(|(_, v)| as_f64(v).is_none()) {
                return bad(format!("margin '{k}' of '{}' is not numeric", rec.name));
            }
            if !(rec.wall_time >= 0.0) {
                return bad(format!("negative wall time in '{}'", rec.name));
            }
        }
        if self.pass != self.checks.iter().all(|c| c.pass) {
            return bad("overall verdict disagrees with the checks".into());
        }
        Ok(())
    }

    /// Rows `check,key,value` flattening inputs, outputs and margins.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(["check", "key", "value"]).map_err(io)?;
        for c in &self.checks {
            let mut rows = vec![
                ("pass".to_string(), c.pass.to_string()),
                ("wall_time".to_string(), c.wall_time.to_string()),
            ];
            if let Some(e) = &c.error {
                rows.push(("error".into(), e.clone()));
            }
            for (section, map) in [("inputs", &c.inputs), ("outputs", &c.outputs), ("margins", &c.margins)] {
                for (k, v) in map {
                    flatten(&format!("{section}.{k}"), v, &mut rows);
                }
            }
            for (k, v) in rows {
                w.write_record([c.name.as_str(), k.as_str(), v.as_str()]).map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_finite_numbers_round_trip() {
        for x in [1.5, f64::INFINITY, f64::NEG_INFINITY] {
            assert_eq!(as_f64(&num(x)), Some(x));
        }
        assert!(as_f64(&num(f64::NAN)).unwrap().is_nan());
        assert_eq!(as_f64(&Value::Bool(true)), None);
    }

    #[test]
    fn flatten_nested_values() {
        let mut rows = Vec::new();
        flatten("o", &serde_json::json!({"a": [1, {"b": "x"}], "c": null}), &mut rows);
        assert_eq!(
            rows,
            vec![
                ("o.a[0]".to_string(), "1".to_string()),
                ("o.a[1].b".to_string(), "x".to_string()),
                ("o.c".to_string(), String::new()),
            ]
        );
    }
}
