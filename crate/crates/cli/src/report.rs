//! Run reports: the CSV contract plus a JSON mirror with invariant-check
//! results and timings.

use std::collections::BTreeMap;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub mode: String,
    pub config: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub checks: Vec<CheckResult>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(mode: &str, config: BTreeMap<String, String>) -> Self {
        RunReport {
            mode: mode.to_string(),
            config,
            columns: Vec::new(),
            rows: Vec::new(),
            checks: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    /// The deterministic CSV: header line plus rows, `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}
