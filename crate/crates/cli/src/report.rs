//! Report types and persistence.

use crate::config::{Config, Suite};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
}

/// One asserted quantity.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    pub fn le(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::Le,
            bound,
            passed: value <= bound,
        }
    }

    pub fn ge(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::Ge,
            bound,
            passed: value >= bound,
        }
    }

    /// `1 >= 1` when `ok`, `0 >= 1` otherwise.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::ge(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub instances: usize,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
    pub table_files: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl SuiteReport {
    pub fn new(
        suite: Suite,
        instances: usize,
        checks: Vec<Check>,
        results: serde_json::Value,
        tables: Vec<Table>,
    ) -> Self {
        let table_files = tables
            .iter()
            .map(|t| format!("{}_{}.csv", suite.name(), t.name))
            .collect();
        let passed = checks.iter().all(|c| c.passed);
        Self {
            suite,
            instances,
            passed,
            checks,
            results,
            table_files,
            tables,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Everything wall-clock dependent lives here so the rest of the report is reproducible.
#[derive(Debug, Clone, Serialize)]
pub struct Timestamp {
    pub unix_seconds: u64,
    pub suite_seconds: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: Config,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
    pub timestamp: Timestamp,
}

impl ExperimentReport {
    pub fn suite(&self, suite: Suite) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.suite == suite)
    }

    /// JSON with the `timestamp` field removed; byte-identical across reruns.
    pub fn reproducible_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timestamp");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        for s in &self.suites {
            for (table, file) in s.tables.iter().zip(&s.table_files) {
                write_csv(&dir.join(file), table)?;
            }
        }
        Ok(())
    }
}

pub fn write_csv(path: &Path, table: &Table) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_compare_literally() {
        assert!(Check::le("a", 1.0, 1.0).passed);
        assert!(!Check::le("a", f64::NAN, 1.0).passed);
        assert!(!Check::ge("a", f64::NAN, 1.0).passed);
        assert!(!Check::flag("a", false).passed);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("x", &["a", "b"]);
        t.rows.push(vec![0.1, 2.0]);
        let p = dir.path().join("x.csv");
        write_csv(&p, &t).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text, "a,b\n0.1,2\n");
    }
}
