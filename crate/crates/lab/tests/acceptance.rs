//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails. Runs at full scale; `cargo test` builds
//! it optimized through the workspace test profile.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use shrinker_lab::commands::{flow, prop41};
use shrinker_lab::config::{Command, LabConfig, RunConfig};
use shrinker_lab::{CheckRecord, RunReport, Status};

const TS: &str = "2026-01-01T00:00:00Z";
const DELTA0: f64 = 1.0 / 16.0;

struct Tally {
    failed: usize,
}

impl Tally {
    fn line(&mut self, id: u32, ok: bool, title: &str, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("{} [{id:>2}] {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn run(command: Command, lab: &LabConfig, out: &std::path::Path) -> (RunReport, Duration) {
    let start = Instant::now();
    let rep = shrinker_lab::run(&RunConfig::new(command, lab.clone(), out, TS))
        .unwrap_or_else(|e| panic!("{} did not run: {e}", command.name()));
    (rep, start.elapsed())
}

fn check<'a>(rep: &'a RunReport, name: &str) -> &'a CheckRecord {
    rep.check(name)
        .unwrap_or_else(|| panic!("{} report has no check {name}", rep.command.name()))
}

/// Every listed check holds and saw at least `min_samples` samples.
fn all_hold(rep: &RunReport, names: &[&str], min_samples: u64) -> bool {
    names.iter().all(|n| {
        let c = check(rep, n);
        c.holds() && c.samples >= min_samples
    })
}

fn show(c: &CheckRecord) -> String {
    match c.value {
        Some(v) => format!("{} = {v:.3e} (n = {})", c.name, c.samples),
        None => format!("{} = non-finite", c.name),
    }
}

fn main() -> ExitCode {
    let lab = LabConfig::default();
    let out = tempfile::tempdir().expect("temporary directory");
    let mut t = Tally { failed: 0 };

    // 1. Scalar sweep, single thread.
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let sweep = pool.install(|| prop41::sweep(&lab.prop41)).expect("sweep runs");
    let secs = start.elapsed().as_secs_f64();
    let grid_ok = lab.prop41.v_count >= 10_000 && lab.prop41.r_resolution >= 10_000;
    t.line(
        1,
        grid_ok && sweep.worst <= -DELTA0 + 1e-9 && secs <= 60.0,
        "sup F on Omega <= -1/16 + 1e-9, 1e4 x 1e4 sweep, single thread, <= 60 s",
        format!(
            "sup F = {:.10} at (v, r, t) = ({:.6}, {:.6}, {:.6}), {} samples, {} poles excluded, {secs:.1} s",
            sweep.worst, sweep.arg_max.0, sweep.arg_max.1, sweep.arg_max.2, sweep.samples, sweep.poles
        ),
    );

    let (p41, p41_time) = run(Command::VerifyProp41, &lab, out.path());

    // 2. Infima.
    let infima = [
        "H1(1,3/2)-1",
        "min_theta(theta-1)^2_on_[2,4]-2",
        "argmin_theta(theta-1)^2-2",
    ];
    t.line(
        2,
        all_hold(&p41, &infima, 1) && infima.iter().all(|n| check(&p41, n).tolerance <= 1e-12),
        "H1(1, 3/2) = 1 and min over [2,4] of theta(theta-1)^2 = 2 at theta = 2, to 1e-12",
        infima
            .iter()
            .map(|n| show(check(&p41, n)))
            .collect::<Vec<_>>()
            .join("; "),
    );

    // 3. Master inequality.
    let master = check(&p41, "master_min_ratio");
    let adv = check(&p41, "adversarial_min_ratio");
    let confirmed = check(&p41, "exactly_confirmed_violations");
    let tight = check(&p41, "tight_case_lambda0_margin");
    t.line(
        3,
        master.holds()
            && master.samples >= 1_000_000
            && adv.samples >= 10_000
            && confirmed.value == Some(0.0)
            && tight.holds()
            && [master, adv, tight].iter().all(|c| c.tolerance <= 1e-12),
        "master inequality, C1 = 16: no violation below -1e-12 on 1e6 samples + 1e4 restarts; lambda = 0 tight to 1e-12",
        format!(
            "{} [{}]; {} [{}]; {}; {}",
            show(master),
            master.note.as_deref().unwrap_or(""),
            show(adv),
            adv.note.as_deref().unwrap_or(""),
            show(confirmed),
            show(tight)
        ),
    );

    // 4. Regrouping identity.
    let regroup = check(&p41, "regrouping_defect");
    t.line(
        4,
        regroup.holds() && regroup.samples >= 100_000 && regroup.tolerance <= 1e-10,
        "grouped total equals the direct total to 1e-10 on 1e5 samples",
        format!("{}; verify-prop41 took {:.1} s", show(regroup), p41_time.as_secs_f64()),
    );

    // 5. Hessians against finite differences.
    let (tg, _) = run(Command::VerifyTargets, &lab, out.path());
    let families: Vec<String> = shrinker_lab::commands::targets::FAMILIES
        .iter()
        .map(|f| format!("{f}_max_relative_error"))
        .collect();
    let names: Vec<&str> = families.iter().map(String::as_str).collect();
    t.line(
        5,
        all_hold(&tg, &names, 500) && lab.targets.fd_step == 1e-4 && lab.targets.tolerance <= 1e-5,
        "closed-form Hessians vs central differences (step 1e-4), relative error <= 1e-5, >= 500 probes each",
        names.iter().map(|n| show(check(&tg, n))).collect::<Vec<_>>().join("; "),
    );

    let (sh, _) = run(Command::VerifyShrinkers, &lab, out.path());

    // 6. Catalog residuals.
    let catalog: Vec<String> = lab
        .shrinkers
        .catalog
        .iter()
        .filter(|s| s.starts_with("plane") || s.starts_with("sphere") || s.starts_with("cylinder"))
        .map(|s| format!("residual[{s}]"))
        .collect();
    let names: Vec<&str> = catalog.iter().map(String::as_str).collect();
    let worst = names.iter().filter_map(|n| check(&sh, n).value).fold(0.0, f64::max);
    t.line(
        6,
        names.len() >= 6 && all_hold(&sh, &names, 1000) && lab.shrinkers.residual_tolerance <= 1e-10,
        "|H + X^N/2| <= 1e-10 on planes, spheres and cylinders, 1e3 probes each",
        format!("{} surfaces, worst residual {worst:.3e}", names.len()),
    );

    // 7. Weighted tension of the Gauss map.
    let tension: Vec<String> = lab.shrinkers.catalog.iter().map(|s| format!("tension[{s}]")).collect();
    let names: Vec<&str> = tension.iter().map(String::as_str).collect();
    let worst = names.iter().filter_map(|n| check(&sh, n).value).fold(0.0, f64::max);
    let control = check(&sh, &format!("control_tension[{}]", lab.shrinkers.control));
    t.line(
        7,
        all_hold(&sh, &names, 1) && control.holds() && control.bound >= 1e-2,
        "|tau_rho(gamma)| <= 1e-6 on catalog shrinkers, >= 1e-2 on the off-centre unit 2-sphere",
        format!("worst shrinker tension {worst:.3e}; {}", show(control)),
    );

    // 8. Composition formula.
    let comp = check(&sh, "composition_residual");
    t.line(
        8,
        comp.holds() && comp.samples >= 100 && comp.tolerance <= 1e-4,
        "composition formula residual <= 1e-4 on 100 probes (height, v, log v)",
        format!("{}; {}", show(comp), sh.warnings.join("; ")),
    );

    // 9. Integrated identity.
    let ic = &lab.shrinkers.integrated;
    let ident = check(
        &sh,
        &format!(
            "integrated_identity[{}@{}x{}]",
            ic.surface, ic.resolution[0], ic.resolution[1]
        ),
    );
    let order = check(&sh, "integrated_identity_order_error");
    t.line(
        9,
        ident.holds() && order.holds() && ic.resolution == [256, 512] && ic.expected_order == 2.0,
        "integrated identity on S^2(2) within 1e-4 relative at 256x512, second-order convergence",
        format!(
            "{}; {} [{}]",
            show(ident),
            show(order),
            order.note.as_deref().unwrap_or("")
        ),
    );

    // 10. Graph relaxation.
    let fc = &lab.flow;
    let (fl, flow_time) = run(Command::FlowGraph, &lab, out.path());
    let setup = fc.n == 2 && fc.m == 2 && fc.half_width == 4.0 && fc.resolution == 129 && fc.max_initial_slope <= 2.5;
    let mandatory = ["initial_sup_slope", "final_sup_residual", "deviation_from_affine"];
    let monotone = check(&fl, "sup_slope_increase");
    t.line(
        10,
        setup && all_hold(&fl, &mandatory, 1) && fl.status == Status::Pass && flow_time.as_secs_f64() <= 300.0,
        "129^2 grid, L = 4, implicit relaxation from a bump with sup slope <= 2.5 converges to affine (observation-backed)",
        format!(
            "{}; {}; {}; {:.1} s; observation: {} ({})",
            show(check(&fl, "initial_sup_slope")),
            show(check(&fl, "final_sup_residual")),
            show(check(&fl, "deviation_from_affine")),
            flow_time.as_secs_f64(),
            show(monotone),
            monotone.note.as_deref().unwrap_or("")
        ),
    );

    // 11. slope * w = 1, on the converged field and on the non-affine start.
    let final_defect = check(&fl, "slope_times_w_minus_1");
    let u0 = flow::initial_field(fc).expect("initial field");
    let order = if fc.fourth_order {
        shrinker_core::graph::StencilOrder::Fourth
    } else {
        shrinker_core::graph::StencilOrder::Second
    };
    let (initial_defect, nodes) = flow::slope_w_defect(&u0, order).expect("slope and w");
    t.line(
        11,
        final_defect.holds() && initial_defect <= flow::SLOPE_W_TOLERANCE,
        "slope(u) * w(gamma, P0) = 1 to 1e-8",
        format!(
            "initial bump {initial_defect:.3e} (n = {nodes}); {}",
            show(final_defect)
        ),
    );

    if t.failed == 0 {
        println!("acceptance: all 11 criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of 11 criteria FAIL", t.failed);
        ExitCode::FAILURE
    }
}
