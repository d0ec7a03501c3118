//! Batch driver around `shrinker-core`.
//!
//! Every subcommand takes a [`config::RunConfig`], runs one family of
//! numerical checks and returns a [`report::RunReport`]. Bulk numbers go to
//! CSV, certificates and reports to JSON, plots to SVG. All JSON and CSV
//! output is a pure function of the configuration, the seed and the
//! timestamp recorded in the run configuration.

// `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;
pub mod rng;

pub use config::{Command, LabConfig, RunConfig};
pub use error::{LabError, LabResult};
pub use report::{CheckKind, CheckRecord, RunReport, Status};

/// Runs `cfg.command`, writes its artifacts under `cfg.out_dir` and returns
/// the report, which is also saved as `report.json` next to them.
pub fn run(cfg: &RunConfig) -> LabResult<RunReport> {
    let job = || match cfg.command {
        Command::VerifyTargets => commands::targets::run(cfg),
        Command::VerifyShrinkers => commands::shrinkers::run(cfg),
        Command::VerifyProp41 => commands::prop41::run(cfg),
        Command::FlowGraph => commands::flow::run(cfg),
        Command::Report => commands::bundle::run(cfg),
    };
    match cfg.jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| LabError::Config(format!("cannot build a pool of {k} threads: {e}")))?
            .install(job),
        None => job(),
    }
}
