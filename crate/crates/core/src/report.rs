//! Experiment reports: column-labeled series, derived scalars and
//! tolerance-carrying assertions, serialized as CSV plus a JSON summary.
//!
//! Summary schema (version 1):
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "experiment": "<id>",
//!   "params": { ... },
//!   "scalars": { "<name>": <number|null>, ... },
//!   "assertions": [
//!     { "name", "relation": "eq"|"ge"|"le", "value", "bound", "tolerance", "pass" }
//!   ],
//!   "series": ["<name>.csv", ...]
//! }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|value − bound| ≤ tolerance`
    Eq,
    /// `value ≥ bound − tolerance`
    Ge,
    /// `value ≤ bound + tolerance`
    Le,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub relation: Relation,
    pub value: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Assertion {
    pub fn new(name: impl Into<String>, relation: Relation, value: f64, bound: f64, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Eq => (value - bound).abs() <= tolerance,
            Relation::Ge => value >= bound - tolerance,
            Relation::Le => value <= bound + tolerance,
        };
        Assertion { name: name.into(), relation, value, bound, tolerance, pass }
    }

    pub fn close(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self::new(name, Relation::Eq, value, target, tolerance)
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        Self::new(name, Relation::Ge, value, bound, tolerance)
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, tolerance: f64) -> Self {
        Self::new(name, Relation::Le, value, bound, tolerance)
    }

    /// Boolean check encoded as `value ∈ {0, 1}` against bound 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::close(name, if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
    }
}

/// A column-labeled numeric table.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Series { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Format(e.to_string()))?)
            .map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let columns = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Format(format!("{s:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Series { name: name.into(), columns, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub experiment: String,
    pub params: BTreeMap<String, Value>,
    pub scalars: BTreeMap<String, f64>,
    pub assertions: Vec<Assertion>,
    pub series: Vec<Series>,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    experiment: &'a str,
    params: &'a BTreeMap<String, Value>,
    scalars: BTreeMap<&'a str, Option<f64>>,
    assertions: &'a [Assertion],
    series: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        ExperimentReport { experiment: experiment.into(), ..Default::default() }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.params.insert(key.to_string(), v);
    }

    pub fn scalar(&mut self, key: &str, value: f64) {
        self.scalars.insert(key.to_string(), value);
    }

    pub fn assert(&mut self, a: Assertion) {
        self.assertions.push(a);
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.pass)
    }

    pub fn series_named(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn summary_json(&self) -> Result<String> {
        let summary = Summary {
            schema_version: SCHEMA_VERSION,
            experiment: &self.experiment,
            params: &self.params,
            scalars: self.scalars.iter().map(|(k, v)| (k.as_str(), v.is_finite().then_some(*v))).collect(),
            assertions: &self.assertions,
            series: self.series.iter().map(|s| format!("{}.csv", s.name)).collect(),
        };
        let mut text = serde_json::to_string_pretty(&summary)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes `summary.json` and one CSV per series into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for s in &self.series {
            fs::write(dir.join(format!("{}.csv", s.name)), s.to_csv()?)?;
        }
        fs::write(dir.join("summary.json"), self.summary_json()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assertion_relations() {
        assert!(Assertion::close("a", 1.0005, 1.0, 1e-3).pass);
        assert!(!Assertion::close("a", 1.002, 1.0, 1e-3).pass);
        assert!(!Assertion::close("nan", f64::NAN, 1.0, 1e-3).pass);
        assert!(Assertion::at_least("b", 0.4999, 0.5, 1e-3).pass);
        assert!(!Assertion::at_most("c", 2.0, 1.0, 0.5).pass);
        assert!(Assertion::holds("d", true).pass);
    }

    #[test]
    fn csv_round_trip() {
        let mut s = Series::new("trace", &["sigma", "value"]);
        s.push(vec![0.0, 1.0 / 3.0]);
        s.push(vec![0.1, -2.5e-17]);
        let back = Series::from_csv("trace", &s.to_csv().unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn summary_has_stable_keys() {
        let mut r = ExperimentReport::new("demo");
        r.param("n", 3);
        r.scalar("x", 1.5);
        r.scalar("missing", f64::NAN);
        r.assert(Assertion::close("x_is_1.5", 1.5, 1.5, 0.0));
        let v: Value = serde_json::from_str(&r.summary_json().unwrap()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["experiment"], "demo");
        assert!(v["scalars"]["missing"].is_null());
        let a = &v["assertions"][0];
        for key in ["name", "value", "bound", "tolerance", "pass"] {
            assert!(a.get(key).is_some(), "{key}");
        }
    }
}
