use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Mode, Protocol};
use crate::amplification::Label;
use crate::error::{Error, Result};

/// How a check compares `value` with `reference`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|value − reference| ≤ tolerance`.
    Within,
    /// `value ≤ reference + tolerance`.
    AtMost,
    /// `value ≥ reference − tolerance`.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, value: f64, relation: Relation, reference: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Within => (value - reference).abs() <= tolerance,
            Relation::AtMost => value <= reference + tolerance,
            Relation::AtLeast => value >= reference - tolerance,
        };
        Self {
            name: name.to_string(),
            value: finite(value),
            reference: finite(reference),
            tolerance,
            relation,
            pass,
        }
    }

    pub fn within(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::Within, reference, tolerance)
    }

    pub fn at_most(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::AtMost, reference, tolerance)
    }

    pub fn at_least(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, reference, tolerance)
    }

    /// Boolean condition recorded as `1 ≥ 1`.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, Relation::AtLeast, 1.0, 0.0)
    }
}

// JSON has no NaN; a failed check still serializes
fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX.copysign(x)
    }
}

/// A computed number and the numerical tolerance it is known to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub protocol: Protocol,
    pub mode: Mode,
    pub instance: String,
    pub label: Option<Label>,
    pub seed: Option<u64>,
    pub rng: String,
    pub exact: bool,
    pub params: BTreeMap<String, u64>,
    pub values: BTreeMap<String, Quantity>,
    /// Exact results as strings.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub exact_values: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    /// One CSV row.
    pub table: BTreeMap<String, Value>,
    pub passed: bool,
    pub wall_clock_s: f64,
}

impl Report {
    pub(crate) fn value(&mut self, name: &str, value: f64, tolerance: f64) {
        self.values.insert(name.to_string(), Quantity { value: finite(value), tolerance });
    }

    pub(crate) fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub(crate) fn row(&mut self, key: &str, v: impl Into<Value>) {
        self.table.insert(key.to_string(), v.into());
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// JSON with the wall-clock field zeroed, for determinism comparisons.
    pub fn canonical_json(&self) -> Result<String> {
        Report {
            wall_clock_s: 0.0,
            ..self.clone()
        }
        .to_json()
    }
}

const BASE_COLUMNS: [&str; 5] = ["protocol", "mode", "instance", "seed", "passed"];

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// CSV with the fixed columns followed by the sorted table keys.
pub fn emit_tables(reports: &[Report]) -> Result<String> {
    let keys: BTreeSet<&String> = reports.first().map(|r| r.table.keys().collect()).unwrap_or_default();
    for r in reports {
        let these: BTreeSet<&String> = r.table.keys().collect();
        if r.protocol != reports[0].protocol || these != keys {
            return Err(Error::Config(format!(
                "heterogeneous reports: {} with columns {:?} vs {} with columns {:?}",
                reports[0].protocol, keys, r.protocol, these
            )));
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = BASE_COLUMNS.iter().copied().chain(keys.iter().map(|k| k.as_str())).collect();
    w.write_record(&header)?;
    for r in reports {
        let mut rec = vec![
            r.protocol.to_string(),
            r.mode.to_string(),
            r.instance.clone(),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.passed.to_string(),
        ];
        rec.extend(keys.iter().map(|k| cell(&r.table[*k])));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
