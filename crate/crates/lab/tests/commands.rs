//! End-to-end runs of each subcommand through the library entry point, on
//! configurations small enough for a debug build.

use std::fs;
use std::path::Path;

use shrinker_lab::commands::bundle::{self, Bundle};
use shrinker_lab::commands::flow;
use shrinker_lab::config::{Command, LabConfig, RunConfig};
use shrinker_lab::{formats, LabError, RunReport, Status};

const TS: &str = "2026-01-02T03:04:05Z";

fn small() -> LabConfig {
    let mut lab = LabConfig::default();
    lab.targets.probes = 20;
    lab.shrinkers.residual_probes = 20;
    lab.shrinkers.tension_probes = 4;
    lab.shrinkers.control_probes = 10;
    lab.shrinkers.composition_probes = 14;
    lab.shrinkers.integrated.resolution = vec![32, 64];
    lab.shrinkers.integrated.tolerance = 5e-3;
    lab.shrinkers.integrated.refinements = vec![vec![16, 32], vec![32, 64], vec![64, 128]];
    lab.prop41.v_count = 40;
    lab.prop41.r_resolution = 200;
    lab.prop41.infimum_samples = 2001;
    lab.prop41.samples = 2000;
    lab.prop41.restarts = 4;
    lab.prop41.regroup_samples = 500;
    lab.prop41.tight_samples = 50;
    lab.flow.resolution = 17;
    lab.flow.max_steps = 200;
    lab
}

fn run(command: Command, lab: LabConfig, out: &Path) -> RunReport {
    shrinker_lab::run(&RunConfig::new(command, lab, out, TS)).unwrap()
}

fn read(p: impl AsRef<Path>) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn verify_targets_passes_and_covers_every_family() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run(Command::VerifyTargets, small(), dir.path());
    assert_eq!(rep.status, Status::Pass, "{}", rep.summary());
    let csv = read(dir.path().join("verify-targets/hessian_residuals.csv"));
    for fam in shrinker_lab::commands::targets::FAMILIES {
        assert!(csv.contains(fam), "missing family {fam}");
        assert!(rep.check(&format!("{fam}_max_relative_error")).is_some());
    }
    assert!(csv.contains("m1_secant_hess_v"));
}

#[test]
fn sign_flipped_hessians_fail() {
    let dir = tempfile::tempdir().unwrap();
    let mut lab = small();
    lab.targets.sign_flip = true;
    let rep = run(Command::VerifyTargets, lab, dir.path());
    assert_eq!(rep.status, Status::Fail);
    assert_eq!(rep.status.exit_code(), 1);
}

#[test]
fn same_seed_and_timestamp_give_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        run(Command::VerifyTargets, small(), dir.path());
        run(Command::VerifyProp41, small(), dir.path());
    }
    for f in [
        "verify-targets/hessian_residuals.csv",
        "verify-targets/report.json",
        "verify-prop41/certificate.json",
        "verify-prop41/sample_margins.csv",
        "verify-prop41/sweep_margins.csv",
        "verify-prop41/report.json",
    ] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f} differs");
    }
}

#[test]
fn different_seeds_give_different_probes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(Command::VerifyTargets, small(), a.path());
    let mut lab = small();
    lab.seed += 1;
    run(Command::VerifyTargets, lab, b.path());
    let f = "verify-targets/hessian_residuals.csv";
    assert_ne!(read(a.path().join(f)), read(b.path().join(f)));
}

#[test]
fn thread_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut one = RunConfig::new(Command::VerifyProp41, small(), a.path(), TS);
    one.jobs = Some(1);
    let mut three = RunConfig::new(Command::VerifyProp41, small(), b.path(), TS);
    three.jobs = Some(3);
    shrinker_lab::run(&one).unwrap();
    shrinker_lab::run(&three).unwrap();
    let f = "verify-prop41/sample_margins.csv";
    assert_eq!(read(a.path().join(f)), read(b.path().join(f)));
}

#[test]
fn verify_shrinkers_small_run_passes() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run(Command::VerifyShrinkers, small(), dir.path());
    assert_eq!(rep.status, Status::Pass, "{}", rep.summary());
    let control = rep.check("control_tension[sphere:n=2,R=1,cz=1]").unwrap();
    assert!(control.value.unwrap() > 1e-2);
    for f in [
        "catalog_residuals.csv",
        "tension.csv",
        "composition.csv",
        "integrated_identity.csv",
    ] {
        assert!(dir.path().join("verify-shrinkers").join(f).is_file(), "{f}");
    }
}

#[test]
fn verify_prop41_small_run_writes_a_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run(Command::VerifyProp41, small(), dir.path());
    assert_eq!(rep.status, Status::Pass, "{}", rep.summary());
    let cert: serde_json::Value =
        serde_json::from_str(&read(dir.path().join("verify-prop41/certificate.json"))).unwrap();
    assert_eq!(cert["holds"], true);
    assert!(cert["worst_value"].as_f64().unwrap() <= -1.0 / 16.0);
    assert!(!dir.path().join("verify-prop41/counterexamples.json").exists());
}

#[test]
fn supercritical_user_sample_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.json");
    fs::write(
        &samples,
        r#"[{"n": 2, "m": 2, "lambda": [3.0, 0.0], "h": [0.1, 0.2, 0.2, 0.4, 0.5, 0.6, 0.6, 0.8]}]"#,
    )
    .unwrap();
    let mut lab = small();
    lab.prop41.samples_file = Some(samples);
    let err = shrinker_lab::run(&RunConfig::new(Command::VerifyProp41, lab, dir.path().join("out"), TS)).unwrap_err();
    assert!(matches!(err, LabError::Domain(_)), "{err:?}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn affine_start_is_already_converged() {
    let dir = tempfile::tempdir().unwrap();
    let mut lab = small();
    lab.flow.amplitude = 0.0;
    let rep = run(Command::FlowGraph, lab, dir.path());
    assert_eq!(rep.status, Status::Pass, "{}", rep.summary());
    assert_eq!(rep.check("steps").unwrap().value, Some(0.0));
}

#[test]
fn bump_relaxes_to_the_affine_graph() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run(Command::FlowGraph, small(), dir.path());
    assert_eq!(rep.status, Status::Pass, "{}", rep.summary());
    let run_dir = dir.path().join("flow-graph");
    let u0 = flow::initial_field(&small().flow).unwrap();
    assert!(u0.deviation_from_affine().unwrap() > 0.1);
    assert!(rep.check("deviation_from_affine").unwrap().value.unwrap() < 1e-6);
    let saved = formats::read_field(&run_dir.join("field_initial.csv")).unwrap();
    assert_eq!(saved.values(), u0.values());
    assert!(read(run_dir.join("trace.csv")).starts_with("step,time,sup_slope,sup_residual,sup_B2,min_w"));
}

#[test]
fn codimension_one_flow_records_hemisphere_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let mut lab = small();
    lab.flow.m = 1;
    lab.flow.boundary = vec![vec![0.3, -0.2]];
    let rep = run(Command::FlowGraph, lab, dir.path());
    assert_eq!(rep.status, Status::Pass, "{}", rep.summary());
    assert!(rep.check("initial_min_pole_dot").unwrap().value.unwrap() > 0.0);
    assert!(rep.check("final_min_pole_dot").is_some());
}

#[test]
fn flow_starts_from_a_saved_field() {
    let dir = tempfile::tempdir().unwrap();
    run(Command::FlowGraph, small(), dir.path());
    let mut lab = small();
    lab.flow.input_field = Some(dir.path().join("flow-graph/field_final.csv"));
    let again = tempfile::tempdir().unwrap();
    let rep = run(Command::FlowGraph, lab, again.path());
    assert_eq!(rep.status, Status::Pass, "{}", rep.summary());
    assert!(rep.check("steps").unwrap().value.unwrap() <= 1.0);
}

#[test]
fn steep_initial_data_violates_the_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let mut lab = small();
    lab.flow.amplitude = 8.0;
    lab.flow.width = 0.5;
    let rep = run(Command::FlowGraph, lab, dir.path());
    assert_eq!(rep.status, Status::Fail);
    assert!(!rep.check("initial_sup_slope").unwrap().holds());
}

#[test]
fn empty_report_directory_gives_an_empty_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let rep = run(Command::Report, small(), dir.path());
    assert_eq!(rep.status, Status::Observation);
    assert!(rep.warnings.iter().any(|w| w.contains("no run reports")));
    let b = Bundle::load(&dir.path().join("report/bundle.json")).unwrap();
    assert!(b.runs.is_empty());
    assert!(read(dir.path().join("report/checks.csv")).starts_with("timestamp,command"));
}

#[test]
fn bundle_orders_runs_chronologically_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let late = RunConfig::new(
        Command::VerifyTargets,
        small(),
        dir.path().join("a"),
        "2026-03-01T00:00:00Z",
    );
    let early = RunConfig::new(
        Command::FlowGraph,
        small(),
        dir.path().join("b"),
        "2026-02-01T00:00:00+01:00",
    );
    shrinker_lab::run(&late).unwrap();
    shrinker_lab::run(&early).unwrap();
    let rep = run(Command::Report, small(), dir.path());
    assert_eq!(rep.status, Status::Pass, "{}", rep.summary());
    let path = dir.path().join("report/bundle.json");
    let text = read(&path);
    let b = Bundle::from_json(&text).unwrap();
    let order: Vec<_> = b.runs.iter().map(|r| r.report.command).collect();
    assert_eq!(order, vec![Command::FlowGraph, Command::VerifyTargets]);
    assert_eq!(b.to_json(), text);
    assert_eq!(b, bundle::collect(dir.path(), &dir.path().join("report")).unwrap());

    let report_text = read(dir.path().join("a/verify-targets/report.json"));
    assert_eq!(RunReport::from_json(&report_text).unwrap().to_json(), report_text);
}

#[test]
fn bundle_marks_a_failed_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut lab = small();
    lab.targets.sign_flip = true;
    run(Command::VerifyTargets, lab, dir.path());
    let rep = run(Command::Report, small(), dir.path());
    assert_eq!(rep.status, Status::Fail);
    assert_eq!(
        Bundle::load(&dir.path().join("report/bundle.json")).unwrap().status,
        Status::Fail
    );
}
