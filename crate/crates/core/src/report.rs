//! Check results, verification reports and their JSON/CSV serializations.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::suite::SuiteConfig;

/// One verified relation with its quantified slack.
///
/// `pass` is `slack >= -tol` for judged checks. Unjudged checks (relations
/// observed outside the regime where they are known to hold) always carry
/// `pass = true` and `judged = false`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
    pub pass: bool,
    pub seed: u64,
    #[serde(default = "default_judged")]
    pub judged: bool,
}

fn default_judged() -> bool {
    true
}

impl CheckResult {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64, tol: f64) -> Self {
        Self { name: name.into(), lhs, rhs, slack, tol, pass: slack >= -tol, seed: 0, judged: true }
    }

    /// Expects `lhs <= rhs`; slack is `rhs - lhs`.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(name, lhs, rhs, rhs - lhs, tol)
    }

    /// Expects `lhs >= rhs`; slack is `lhs - rhs`.
    pub fn ge(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(name, lhs, rhs, lhs - rhs, tol)
    }

    /// Expects `lhs == rhs`; slack is `-|lhs - rhs|`.
    pub fn eq(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(name, lhs, rhs, -(lhs - rhs).abs(), tol)
    }

    /// Cellwise identity: `lhs` is the measure of mismatching cells, which must be zero.
    pub fn exact_match(name: impl Into<String>, mismatched: usize, cell_volume: f64) -> Self {
        let m = mismatched as f64 * cell_volume;
        Self::new(name, m, 0.0, -m, 0.0)
    }

    pub fn unjudged(mut self) -> Self {
        self.judged = false;
        self.pass = true;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Multiplies the tolerance and re-evaluates the verdict.
    pub fn with_tol_scale(mut self, scale: f64) -> Self {
        self.tol *= scale;
        if self.judged {
            self.pass = self.slack >= -self.tol;
        }
        self
    }
}

/// Relative-tolerance scale: `max(|lhs|, |rhs|, 1)`.
pub fn scale(lhs: f64, rhs: f64) -> f64 {
    lhs.abs().max(rhs.abs()).max(1.0)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub unjudged: usize,
}

impl Summary {
    pub fn tally(results: &[CheckResult]) -> Self {
        let passed = results.iter().filter(|r| r.pass).count();
        Self {
            total: results.len(),
            passed,
            failed: results.len() - passed,
            unjudged: results.iter().filter(|r| !r.judged).count(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tool_version: String,
    pub config: SuiteConfig,
    pub results: Vec<CheckResult>,
    pub summary: Summary,
    pub wall_time_seconds: f64,
}

impl VerificationReport {
    /// Sorts results by name and tallies them.
    pub fn assemble(config: SuiteConfig, mut results: Vec<CheckResult>, wall_time_seconds: f64) -> Self {
        results.sort_by(|a, b| a.name.cmp(&b.name));
        let summary = Summary::tally(&results);
        Self { tool_version: env!("CARGO_PKG_VERSION").to_string(), config, results, summary, wall_time_seconds }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json()?.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

pub const CSV_HEADER: [&str; 6] = ["name", "lhs", "rhs", "slack", "tol", "pass"];

/// Writes one row per check (plus header) to any writer.
pub fn write_csv<W: Write>(report: &VerificationReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &report.results {
        w.write_record([
            r.name.clone(),
            r.lhs.to_string(),
            r.rhs.to_string(),
            r.slack.to_string(),
            r.tol.to_string(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(report: &VerificationReport, path: &Path) -> Result<()> {
    write_csv(report, std::fs::File::create(path)?)
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct CsvRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Parses a file written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}
