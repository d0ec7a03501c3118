//! Run reports: per-check records and the overall status.
//!
//! A check compares a measured `value` with a `bound`. Its `margin` is
//! `bound − value` for upper bounds and `value − bound` for lower bounds, and
//! a mandatory check fails iff `margin < −tolerance`. Observation checks are
//! recorded with the same fields but never make a run fail.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Command, LabConfig};
use crate::error::{LabError, LabResult};

pub const REPORT_SCHEMA: &str = "shrinker-lab/run-report/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Observation,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Observation => "OBSERVATION",
        }
    }

    /// 0 on PASS and OBSERVATION, 1 on FAIL.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Fail => 1,
            _ => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Mandatory,
    Observation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// value ≤ bound
    AtMost,
    /// value ≥ bound
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRecord {
    pub name: String,
    pub kind: CheckKind,
    pub comparison: Comparison,
    /// `None` when the quantity could not be computed or was not finite.
    pub value: Option<f64>,
    pub bound: f64,
    pub margin: Option<f64>,
    pub tolerance: f64,
    /// Number of probes or samples behind `value`.
    pub samples: u64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl CheckRecord {
    fn build(
        name: &str,
        kind: CheckKind,
        comparison: Comparison,
        value: f64,
        bound: f64,
        tolerance: f64,
        samples: usize,
    ) -> Self {
        let value = value.is_finite().then_some(value);
        let margin = value.map(|v| match comparison {
            Comparison::AtMost => bound - v,
            Comparison::AtLeast => v - bound,
        });
        let holds = margin.is_some_and(|m| m >= -tolerance);
        let status = match kind {
            CheckKind::Observation => Status::Observation,
            CheckKind::Mandatory if holds => Status::Pass,
            CheckKind::Mandatory => Status::Fail,
        };
        CheckRecord {
            name: name.into(),
            kind,
            comparison,
            value,
            bound,
            margin,
            tolerance,
            samples: samples as u64,
            status,
            note: None,
        }
    }

    /// Mandatory `value ≤ bound` (within `tolerance`).
    pub fn at_most(name: &str, value: f64, bound: f64, tolerance: f64, samples: usize) -> Self {
        Self::build(
            name,
            CheckKind::Mandatory,
            Comparison::AtMost,
            value,
            bound,
            tolerance,
            samples,
        )
    }

    /// Mandatory `value ≥ bound` (within `tolerance`).
    pub fn at_least(name: &str, value: f64, bound: f64, tolerance: f64, samples: usize) -> Self {
        Self::build(
            name,
            CheckKind::Mandatory,
            Comparison::AtLeast,
            value,
            bound,
            tolerance,
            samples,
        )
    }

    /// Mandatory `|value| ≤ tolerance`, written as `value ≤ 0`.
    pub fn residual(name: &str, value: f64, tolerance: f64, samples: usize) -> Self {
        Self::at_most(name, value.abs(), 0.0, tolerance, samples)
    }

    /// Observation of `value` against `bound`; never fails the run.
    pub fn observe(name: &str, comparison: Comparison, value: f64, bound: f64, tolerance: f64, samples: usize) -> Self {
        Self::build(
            name,
            CheckKind::Observation,
            comparison,
            value,
            bound,
            tolerance,
            samples,
        )
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Whether the inequality holds within tolerance, for either kind.
    pub fn holds(&self) -> bool {
        self.margin.is_some_and(|m| m >= -self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub seed: u64,
    pub version: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema: String,
    pub command: Command,
    pub status: Status,
    pub checks: Vec<CheckRecord>,
    pub provenance: Provenance,
    /// File names written next to the report.
    pub artifacts: Vec<String>,
    pub warnings: Vec<String>,
    /// The effective configuration (after tolerance scaling).
    pub config: LabConfig,
}

impl RunReport {
    pub fn new(command: Command, config: &LabConfig, timestamp: &str) -> Self {
        RunReport {
            schema: REPORT_SCHEMA.into(),
            command,
            status: Status::Observation,
            checks: Vec::new(),
            provenance: Provenance {
                seed: config.seed,
                version: env!("CARGO_PKG_VERSION").into(),
                timestamp: timestamp.into(),
            },
            artifacts: Vec::new(),
            warnings: Vec::new(),
            config: config.clone(),
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.checks.push(check);
        self.status = overall_status(&self.checks);
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: &Path) -> LabResult<()> {
        std::fs::write(path, self.to_json()).map_err(|e| LabError::io(path, e))
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        RunReport::from_json(&text).map_err(|source| LabError::Json {
            path: path.into(),
            source,
        })
    }

    /// One line per check, for the terminal.
    pub fn summary(&self) -> String {
        let mut out = format!("{} {}\n", self.command.name(), self.status.as_str());
        for c in &self.checks {
            let fmt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
            out.push_str(&format!(
                "  {:<11} {:<40} value {:>11}  bound {:>10.3e}  margin {:>11}  tol {:.1e}\n",
                c.status.as_str(),
                c.name,
                fmt(c.value),
                c.bound,
                fmt(c.margin),
                c.tolerance
            ));
        }
        for w in &self.warnings {
            out.push_str(&format!("  warning: {w}\n"));
        }
        out
    }
}

/// FAIL iff a mandatory check fails; PASS if there is at least one
/// mandatory check; OBSERVATION otherwise.
pub fn overall_status(checks: &[CheckRecord]) -> Status {
    let mandatory: Vec<_> = checks.iter().filter(|c| c.kind == CheckKind::Mandatory).collect();
    if mandatory.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else if mandatory.is_empty() {
        Status::Observation
    } else {
        Status::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins_and_status() {
        let c = CheckRecord::at_most("sup", -0.07, -0.0625, 1e-9, 10);
        assert_eq!(c.status, Status::Pass);
        assert!((c.margin.unwrap() - 0.0075).abs() < 1e-15);
        let c = CheckRecord::at_most("sup", -0.0625 + 2e-9, -0.0625, 1e-9, 10);
        assert_eq!(c.status, Status::Fail);
        let c = CheckRecord::at_most("sup", -0.0625 + 0.5e-9, -0.0625, 1e-9, 10);
        assert_eq!(c.status, Status::Pass);
        let c = CheckRecord::at_least("control", 0.5, 1e-2, 1e-12, 3);
        assert_eq!(c.status, Status::Pass);
        assert_eq!(c.margin, Some(0.49));
        let c = CheckRecord::residual("res", -3e-6, 1e-6, 1);
        assert_eq!((c.value, c.status), (Some(3e-6), Status::Fail));
    }

    #[test]
    fn non_finite_values_fail_mandatory_checks() {
        let c = CheckRecord::residual("res", f64::NAN, 1.0, 1);
        assert_eq!((c.value, c.margin, c.status), (None, None, Status::Fail));
        let o = CheckRecord::observe("obs", Comparison::AtMost, f64::INFINITY, 0.0, 1.0, 1);
        assert_eq!(o.status, Status::Observation);
        assert!(!o.holds());
    }

    #[test]
    fn observations_never_fail_a_run() {
        let mut r = RunReport::new(Command::FlowGraph, &LabConfig::default(), "2024-01-01T00:00:00Z");
        assert_eq!(r.status, Status::Observation);
        r.push(CheckRecord::observe("mono", Comparison::AtMost, 1.0, 0.0, 1e-9, 5));
        assert_eq!(r.status, Status::Observation);
        r.push(CheckRecord::residual("res", 1e-10, 1e-8, 1));
        assert_eq!(r.status, Status::Pass);
        r.push(CheckRecord::residual("res2", 1.0, 1e-8, 1));
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.status.exit_code(), 1);
    }

    #[test]
    fn json_round_trip_is_byte_identical() {
        let mut r = RunReport::new(Command::VerifyProp41, &LabConfig::default(), "2024-01-01T00:00:00Z");
        r.push(CheckRecord::at_most("sup", -1.1524706411511794, -0.0625, 1e-9, 100_000_000).with_note("x"));
        r.push(CheckRecord::residual("nan", f64::NAN, 1.0, 0));
        r.warnings.push("w".into());
        let text = r.to_json();
        let back = RunReport::from_json(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
    }
}
