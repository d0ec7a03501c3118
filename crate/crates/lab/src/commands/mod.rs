//! One module per subcommand. Each writes into `<out>/<command>/` and
//! finishes by saving `report.json` there.

use std::path::PathBuf;

use crate::config::RunConfig;
use crate::error::{LabError, LabResult};
use crate::report::RunReport;

pub mod bundle;
pub mod flow;
pub mod prop41;
pub mod shrinkers;
pub mod targets;

/// Output directory of one run and the report being filled.
pub(crate) struct RunContext {
    pub dir: PathBuf,
    pub report: RunReport,
}

impl RunContext {
    pub fn open(cfg: &RunConfig) -> LabResult<Self> {
        let dir = cfg.run_dir();
        std::fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
        Ok(RunContext {
            dir,
            report: RunReport::new(cfg.command, &cfg.lab, &cfg.timestamp),
        })
    }

    /// Path of an artifact, recorded in the report.
    pub fn artifact(&mut self, name: &str) -> PathBuf {
        self.report.artifacts.push(name.into());
        self.dir.join(name)
    }

    pub fn finish(self) -> LabResult<RunReport> {
        self.report.save(&self.dir.join("report.json"))?;
        Ok(self.report)
    }
}

/// Largest value, propagating NaN so that it is never hidden.
pub(crate) fn max_or_nan(acc: f64, x: f64) -> f64 {
    if x.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}
