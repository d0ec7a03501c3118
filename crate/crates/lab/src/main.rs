use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shrinker_lab::config::{timestamp_now, Command, LabConfig, RunConfig};
use shrinker_lab::LabError;

/// Numerical verification lab for self-shrinkers.
///
/// Exit codes: 0 on PASS (or OBSERVATION only), 1 on FAIL, 2 on a
/// configuration error.
#[derive(Parser, Debug)]
#[command(name = "shrinker-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// JSON configuration file; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; each subcommand writes into `<out>/<subcommand>/`.
    #[arg(long, global = true, default_value = "lab-out")]
    out: PathBuf,

    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for sweeps and sampling.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Multiplies every tolerance of the configuration.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,

    /// Print the effective configuration as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Closed-form Hessians on spheres and Grassmannians against finite differences.
    VerifyTargets,
    /// Catalog residuals, weighted tension of the Gauss map, composition formula, integrated identity.
    VerifyShrinkers,
    /// Scalar sweep, regrouping identity and the master inequality.
    VerifyProp41,
    /// Graph relaxation toward a shrinker on a box.
    FlowGraph,
    /// Bundle earlier run reports.
    Report,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::VerifyTargets => Command::VerifyTargets,
            Cmd::VerifyShrinkers => Command::VerifyShrinkers,
            Cmd::VerifyProp41 => Command::VerifyProp41,
            Cmd::FlowGraph => Command::FlowGraph,
            Cmd::Report => Command::Report,
        }
    }
}

fn build(cli: &Cli) -> Result<RunConfig, LabError> {
    let mut lab = match &cli.config {
        Some(p) => LabConfig::load(p)?,
        None => LabConfig::default(),
    };
    if let Some(seed) = cli.seed {
        lab.seed = seed;
    }
    if let Some(scale) = cli.tolerance_scale {
        lab.scale_tolerances(scale)?;
    }
    if cli.jobs == Some(0) {
        return Err(LabError::Config("--jobs must be at least 1".into()));
    }
    let out = std::env::var_os("SHRINKER_LAB_OUT").map_or_else(|| cli.out.clone(), PathBuf::from);
    let mut cfg = RunConfig::new(cli.command.into(), lab, out, timestamp_now()?);
    cfg.jobs = cli.jobs;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cfg = match build(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("shrinker-lab: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if cli.print_config {
        print!("{}", cfg.lab.to_json());
        return ExitCode::SUCCESS;
    }
    match shrinker_lab::run(&cfg) {
        Ok(report) => {
            print!("{}", report.summary());
            println!("artifacts in {}", cfg.run_dir().display());
            ExitCode::from(report.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("shrinker-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
