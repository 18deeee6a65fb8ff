use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::{ParamValue, ScenarioSpec};
use crate::error::Result;

pub const REPORT_SCHEMA: &str = "qpast-scenario-report";
pub const REPORT_VERSION: u32 = 1;

/// Acceptance rule for a scalar result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Bound {
    Below { limit: f64 },
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
    Above { limit: f64 },
    Near { target: f64, tolerance: f64 },
    /// `|value - target| <= fraction * |target|`.
    Relative { target: f64, fraction: f64 },
}

impl Bound {
    pub fn admits(&self, v: f64) -> bool {
        match *self {
            Bound::Below { limit } => v < limit,
            Bound::AtMost { limit } => v <= limit,
            Bound::AtLeast { limit } => v >= limit,
            Bound::Above { limit } => v > limit,
            Bound::Near { target, tolerance } => (v - target).abs() <= tolerance,
            Bound::Relative { target, fraction } => (v - target).abs() <= fraction * target.abs(),
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Bound::Below { limit } => format!("< {limit}"),
            Bound::AtMost { limit } => format!("<= {limit}"),
            Bound::AtLeast { limit } => format!(">= {limit}"),
            Bound::Above { limit } => format!("> {limit}"),
            Bound::Near { target, tolerance } => format!("= {target} +/- {tolerance}"),
            Bound::Relative { target, fraction } => format!("= {target} +/- {}%", fraction * 100.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub kind: String,
    pub description: String,
}

/// Structured output of one scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema: String,
    pub version: u32,
    pub scenario: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, ParamValue>,
    pub results: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub files: Vec<FileEntry>,
    pub passed: bool,
}

impl ScenarioReport {
    pub fn new(spec: &ScenarioSpec) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            version: REPORT_VERSION,
            scenario: spec.name.clone(),
            seed: spec.seed,
            inputs: spec.params().clone(),
            results: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            files: Vec::new(),
            passed: true,
        }
    }

    pub fn result(&mut self, name: &str, value: f64) {
        self.results.insert(name.to_string(), value);
    }

    /// Records `value` under `name` and checks it against `bound`.
    pub fn check(&mut self, name: &str, value: f64, bound: Bound) -> bool {
        let passed = bound.admits(value);
        self.result(name, value);
        self.checks.push(Check {
            name: name.to_string(),
            value,
            bound,
            passed,
        });
        self.passed &= passed;
        passed
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn file(&mut self, path: &str, kind: &str, description: &str) {
        self.files.push(FileEntry {
            path: path.into(),
            kind: kind.into(),
            description: description.into(),
        });
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "seed:     {}", self.seed);
        let _ = writeln!(s, "verdict:  {}", if self.passed { "PASS" } else { "FAIL" });
        let _ = writeln!(s, "\ninputs:");
        for (k, v) in &self.inputs {
            let _ = writeln!(s, "  {k} = {v}");
        }
        let _ = writeln!(s, "\nchecks:");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  [{}] {:<40} {:>14.6e}  ({})",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.value,
                c.bound.describe()
            );
        }
        let _ = writeln!(s, "\nresults:");
        for (k, v) in &self.results {
            let _ = writeln!(s, "  {k:<44} {v:.9e}");
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\nnotes:");
            for n in &self.notes {
                let _ = writeln!(s, "  - {n}");
            }
        }
        if !self.files.is_empty() {
            let _ = writeln!(s, "\nfiles:");
            for f in &self.files {
                let _ = writeln!(s, "  {:<28} {:<5} {}", f.path, f.kind, f.description);
            }
        }
        s
    }

    /// Writes `report.json` and `report.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("report.json"), self.to_json()?)?;
        fs::write(dir.join("report.txt"), self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Bound::Below { limit: 1.0 }.admits(0.5));
        assert!(!Bound::Below { limit: 1.0 }.admits(1.0));
        assert!(Bound::AtLeast { limit: 1.0 }.admits(1.0));
        assert!(Bound::Near { target: 0.125, tolerance: 1e-3 }.admits(0.1251));
        assert!(Bound::Relative { target: 0.025, fraction: 0.1 }.admits(0.027));
        assert!(!Bound::Relative { target: 0.025, fraction: 0.1 }.admits(0.028));
    }
}
