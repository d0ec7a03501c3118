//! `report`: collects every `report.json` under a run directory into one
//! bundle (JSON, flat CSV of checks, SVG summary), ordered by run time.

use std::path::{Path, PathBuf};

use chrono::DateTime;
use serde::{Deserialize, Serialize};

use super::RunContext;
use crate::config::{Command, RunConfig};
use crate::error::{LabError, LabResult};
use crate::formats::{self, Series};
use crate::report::{CheckRecord, Comparison, RunReport, Status};

pub const BUNDLE_SCHEMA: &str = "shrinker-lab/bundle/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleEntry {
    /// Location of the report relative to the searched directory.
    pub path: String,
    pub report: RunReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bundle {
    pub schema: String,
    /// FAIL if any run failed, PASS if every run passed or only observed,
    /// OBSERVATION when there is nothing to judge.
    pub status: Status,
    pub runs: Vec<BundleEntry>,
    pub warnings: Vec<String>,
}

impl Bundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundles serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Bundle::from_json(&text).map_err(|source| LabError::Json {
            path: path.into(),
            source,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CheckRow<'a> {
    timestamp: &'a str,
    command: &'static str,
    run_status: &'static str,
    check: &'a str,
    kind: &'static str,
    status: &'static str,
    value: Option<f64>,
    bound: f64,
    margin: Option<f64>,
    tolerance: f64,
    samples: u64,
}

/// `report.json` files below `root`, in path order, skipping `skip`.
fn find_reports(root: &Path, skip: &Path, depth: usize, out: &mut Vec<PathBuf>) -> LabResult<()> {
    if depth == 0 || root == skip {
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| LabError::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            find_reports(&p, skip, depth - 1, out)?;
        } else if p.file_name().is_some_and(|n| n == "report.json") {
            out.push(p);
        }
    }
    Ok(())
}

/// Chronological key: parsed timestamp, then command, then path.
fn order_key(e: &BundleEntry) -> (i64, u32, &'static str, String) {
    let t = DateTime::parse_from_rfc3339(&e.report.provenance.timestamp)
        .map(|t| (t.timestamp(), t.timestamp_subsec_nanos()))
        .unwrap_or((i64::MAX, 0));
    (t.0, t.1, e.report.command.name(), e.path.clone())
}

/// Loads and orders every report found under `root`.
pub fn collect(root: &Path, skip: &Path) -> LabResult<Bundle> {
    let mut warnings = Vec::new();
    let mut paths = Vec::new();
    if root.is_dir() {
        find_reports(root, skip, 4, &mut paths)?;
    } else {
        warnings.push(format!("run directory {} does not exist", root.display()));
    }
    let mut runs = Vec::new();
    for p in paths {
        let rel = p.strip_prefix(root).unwrap_or(&p).to_string_lossy().replace('\\', "/");
        match RunReport::load(&p) {
            Ok(report) if report.command != Command::Report => runs.push(BundleEntry { path: rel, report }),
            Ok(_) => {}
            Err(e) => warnings.push(format!("skipped unreadable report: {e}")),
        }
    }
    runs.sort_by(|a, b| order_key(a).cmp(&order_key(b)));
    if runs.is_empty() {
        warnings.push(format!("no run reports found under {}", root.display()));
    }
    let status = if runs.iter().any(|r| r.report.status == Status::Fail) {
        Status::Fail
    } else if runs.is_empty() {
        Status::Observation
    } else {
        Status::Pass
    };
    Ok(Bundle {
        schema: BUNDLE_SCHEMA.into(),
        status,
        runs,
        warnings,
    })
}

fn summary_plot(b: &Bundle, timestamp: &str) -> String {
    let count = |s: Status| -> Vec<(f64, f64)> {
        b.runs
            .iter()
            .enumerate()
            .map(|(k, r)| {
                (
                    k as f64,
                    r.report.checks.iter().filter(|c| c.status == s).count() as f64,
                )
            })
            .collect()
    };
    let series = [
        Series {
            name: "PASS checks",
            points: count(Status::Pass),
        },
        Series {
            name: "FAIL checks",
            points: count(Status::Fail),
        },
        Series {
            name: "OBSERVATION checks",
            points: count(Status::Observation),
        },
    ];
    formats::line_plot_svg("checks per run (chronological)", "run index", &series, false, timestamp)
}

pub fn run(cfg: &RunConfig) -> LabResult<RunReport> {
    let root = cfg.lab.report.runs_dir.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let mut ctx = RunContext::open(cfg)?;
    let bundle = collect(&root, &ctx.dir)?;
    formats::write_text(&ctx.artifact("bundle.json"), &bundle.to_json())?;
    let rows: Vec<CheckRow> = bundle
        .runs
        .iter()
        .flat_map(|r| {
            r.report.checks.iter().map(move |c| CheckRow {
                timestamp: &r.report.provenance.timestamp,
                command: r.report.command.name(),
                run_status: r.report.status.as_str(),
                check: &c.name,
                kind: match c.kind {
                    crate::report::CheckKind::Mandatory => "mandatory",
                    crate::report::CheckKind::Observation => "observation",
                },
                status: c.status.as_str(),
                value: c.value,
                bound: c.bound,
                margin: c.margin,
                tolerance: c.tolerance,
                samples: c.samples,
            })
        })
        .collect();
    let csv_path = ctx.artifact("checks.csv");
    if rows.is_empty() {
        formats::write_text(
            &csv_path,
            "timestamp,command,run_status,check,kind,status,value,bound,margin,tolerance,samples\n",
        )?;
    } else {
        formats::write_csv(&csv_path, &rows)?;
    }
    formats::write_text(&ctx.artifact("summary.svg"), &summary_plot(&bundle, &cfg.timestamp))?;

    ctx.report.warnings.extend(bundle.warnings.iter().cloned());
    ctx.report.push(CheckRecord::observe(
        "runs_collected",
        Comparison::AtLeast,
        bundle.runs.len() as f64,
        1.0,
        0.5,
        bundle.runs.len(),
    ));
    if !bundle.runs.is_empty() {
        let failed = bundle.runs.iter().filter(|r| r.report.status == Status::Fail).count();
        ctx.report.push(CheckRecord::residual(
            "failed_runs",
            failed as f64,
            0.5,
            bundle.runs.len(),
        ));
    }
    ctx.finish()
}
