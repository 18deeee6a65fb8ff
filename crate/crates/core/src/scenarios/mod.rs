//! Parameterized end-to-end experiments, each producing a [`ScenarioReport`]
//! and optional datasets.

mod cat;
mod etp;
mod heisenberg_past;
pub mod report;
mod s_wave;
pub mod spec;
pub mod svg;
mod two_slit;

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::measure::{momentum_stats, position_stats};
use crate::wave::WaveFunction;

pub use report::{Bound, Check, FileEntry, ScenarioReport, REPORT_SCHEMA, REPORT_VERSION};
pub use spec::{ParamDecl, ParamValue, ScenarioSpec};

/// Largest node-abort fraction a scenario tolerates before failing.
pub const MAX_NODE_ABORT_FRACTION: f64 = 0.005;

/// Floor on `std_x * std_p` per axis, with the relative slack used in checks.
pub const UNCERTAINTY_FLOOR: f64 = 0.5 * (1.0 - 1e-3);

/// Static description of a scenario.
#[derive(Clone, Debug)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// The thought experiment being modeled.
    pub theme: &'static str,
    pub params: Vec<ParamDecl>,
    /// Declared checks as `(name, rule)`.
    pub checks: Vec<(&'static str, &'static str)>,
}

impl ScenarioInfo {
    pub fn default_spec(&self, seed: u64) -> ScenarioSpec {
        ScenarioSpec::with_defaults(self.name, &self.params, seed)
    }
}

pub fn catalog() -> Vec<ScenarioInfo> {
    vec![
        two_slit::info(),
        s_wave::info(),
        heisenberg_past::info(),
        etp::info(),
        cat::info(),
    ]
}

pub fn find(name: &str) -> Result<ScenarioInfo> {
    catalog()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::Scenario(format!("unknown scenario '{name}'")))
}

/// Default spec for a named scenario.
pub fn default_spec(name: &str, seed: u64) -> Result<ScenarioSpec> {
    Ok(find(name)?.default_spec(seed))
}

/// Runs a scenario. With `out`, datasets and `report.{json,txt}` are written
/// into that (existing) directory.
pub fn run(spec: &ScenarioSpec, out: Option<&Path>) -> Result<ScenarioReport> {
    let sink = Sink { dir: out.map(Path::to_path_buf) };
    let mut report = ScenarioReport::new(spec);
    match spec.name.as_str() {
        "two_slit" => two_slit::run(spec, &sink, &mut report)?,
        "s_wave_detection" => s_wave::run(spec, &sink, &mut report)?,
        "heisenberg_past" => heisenberg_past::run(spec, &sink, &mut report)?,
        "etp_timing" => etp::run(spec, &sink, &mut report)?,
        "cat" => cat::run(spec, &sink, &mut report)?,
        other => return Err(Error::Scenario(format!("unknown scenario '{other}'"))),
    }
    if let Some(dir) = out {
        report.file("report.json", "json", "this report");
        report.file("report.txt", "text", "human-readable report");
        report.write(dir)?;
    }
    Ok(report)
}

/// Creates `dir` if needed. Refuses to reuse a directory that already holds
/// a report unless `force` is set.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.join("report.json").exists() && !force {
        return Err(Error::Scenario(format!(
            "{} already contains outputs (use --force to overwrite)",
            dir.display()
        )));
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Optional output directory; files written through it are listed in the
/// report manifest.
pub(crate) struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub(crate) fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    pub(crate) fn text(
        &self,
        report: &mut ScenarioReport,
        name: &str,
        kind: &str,
        description: &str,
        content: impl FnOnce() -> String,
    ) -> Result<()> {
        if let Some(p) = self.path(name) {
            fs::write(p, content())?;
            report.file(name, kind, description);
        }
        Ok(())
    }

    /// For writers that need the path themselves.
    pub(crate) fn with_path(
        &self,
        report: &mut ScenarioReport,
        name: &str,
        kind: &str,
        description: &str,
        write: impl FnOnce(&Path) -> Result<()>,
    ) -> Result<()> {
        if let Some(p) = self.path(name) {
            write(&p)?;
            report.file(name, kind, description);
        }
        Ok(())
    }
}

/// Adds one `std_x * std_p` check per axis for `psi`.
pub(crate) fn uncertainty_checks(report: &mut ScenarioReport, label: &str, psi: &WaveFunction) {
    let x = position_stats(psi);
    let p = momentum_stats(psi);
    for a in 0..psi.grid().dim() {
        report.check(
            &format!("uncertainty.{label}.axis{a}"),
            x.std[a] * p.std[a],
            Bound::AtLeast { limit: UNCERTAINTY_FLOOR },
        );
    }
}

pub(crate) fn node_abort_guard(report: &mut ScenarioReport, key: &str, aborted: usize, total: usize) -> Result<()> {
    let frac = aborted as f64 / total.max(1) as f64;
    report.result(key, frac);
    if frac >= MAX_NODE_ABORT_FRACTION {
        return Err(Error::Scenario(format!(
            "node-abort fraction {frac} reached the {MAX_NODE_ABORT_FRACTION} limit"
        )));
    }
    Ok(())
}

/// Formats rows of numbers as CSV with a header.
pub(crate) fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}
