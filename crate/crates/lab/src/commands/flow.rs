//! `flow-graph`: relaxes a graph toward a shrinker on a box with linear
//! boundary data and records the rigidity experiment.
//!
//! Mandatory checks are the hypothesis on the initial slope, convergence of
//! the residual, closeness to the affine solution, vanishing |B|², and the
//! identity slope · w = 1. Slope monotonicity along the run and the
//! hemisphere telemetry are recorded as observations: they are empirical
//! contracts, not consequences of a theorem.

use nalgebra::DMatrix;
use shrinker_core::graph::{
    gauss_image_report, relax_flow, second_fundamental_form_sq, slope, BoundaryCondition, FlowError, FlowTrace,
    GridField, Scheme, SolverConfig, StencilOrder, StepPolicy,
};
use shrinker_core::grassmann::w_product;
use shrinker_core::immersion::target::horizontal_plane;
use shrinker_core::sphere::UnitVector;

use super::{max_or_nan, RunContext};
use crate::config::{FlowConfig, RunConfig, SchemeKind};
use crate::error::{LabError, LabResult};
use crate::formats::{self, Series};
use crate::report::{CheckRecord, Comparison, RunReport};

/// Tolerance of the slope · w = 1 identity.
pub const SLOPE_W_TOLERANCE: f64 = 1e-8;

fn boundary_matrix(fc: &FlowConfig) -> DMatrix<f64> {
    DMatrix::from_fn(fc.m, fc.n, |a, i| fc.boundary[a][i])
}

/// `Ax + amplitude · exp(−|x|²/2width²)/(α+1)` with boundary data `Ax`.
pub fn bump_field(fc: &FlowConfig) -> LabResult<GridField> {
    let a = boundary_matrix(fc);
    let (n, m, amp, width) = (fc.n, fc.m, fc.amplitude, fc.width);
    let aa = a.clone();
    Ok(GridField::from_fn(
        n,
        m,
        fc.half_width,
        vec![fc.resolution; n],
        BoundaryCondition::linear(a),
        move |x| {
            let r2: f64 = x.iter().map(|t| t * t).sum();
            let g = (-r2 / (2.0 * width * width)).exp();
            (0..m)
                .map(|al| (0..n).map(|i| aa[(al, i)] * x[i]).sum::<f64>() + amp * g / (al + 1) as f64)
                .collect()
        },
    )?)
}

/// The starting field: the configured file (with the configured boundary
/// data imposed) or the bump.
pub fn initial_field(fc: &FlowConfig) -> LabResult<GridField> {
    let Some(path) = &fc.input_field else {
        return bump_field(fc);
    };
    let mut u = formats::read_field(path)?;
    if u.n() != fc.n || u.m() != fc.m {
        return Err(LabError::Config(format!(
            "{}: field has n = {}, m = {}, config says n = {}, m = {}",
            path.display(),
            u.n(),
            u.m(),
            fc.n,
            fc.m
        )));
    }
    u.boundary = BoundaryCondition::linear(boundary_matrix(fc));
    u.apply_boundary();
    Ok(u)
}

pub fn solver_config(fc: &FlowConfig) -> SolverConfig {
    SolverConfig {
        scheme: match fc.scheme {
            SchemeKind::Explicit => Scheme::Explicit(StepPolicy::Cfl(fc.cfl)),
            SchemeKind::Implicit => Scheme::LinearlyImplicit {
                pseudo_dt: fc.pseudo_dt,
            },
        },
        max_steps: fc.max_steps,
        threshold: fc.residual_tolerance,
        order: order(fc),
        sample_every: fc.sample_every,
        blowup: 1e6,
    }
}

fn order(fc: &FlowConfig) -> StencilOrder {
    if fc.fourth_order {
        StencilOrder::Fourth
    } else {
        StencilOrder::Second
    }
}

/// `max |slope · w − 1|` over interior nodes, with w the w-product of the
/// Gauss map and the horizontal plane at the same node.
pub fn slope_w_defect(u: &GridField, order: StencilOrder) -> LabResult<(f64, usize)> {
    let s = slope(u, order)?;
    let reference = horizontal_plane(u.n(), u.m());
    let mut worst: f64 = 0.0;
    for (k, row) in s.nodes.iter().zip(&s.values) {
        let w = w_product(&u.point_frame(*k, order)?.gauss_map(), &reference)?;
        worst = max_or_nan(worst, (row[0] * w - 1.0).abs());
    }
    Ok((worst, s.nodes.len()))
}

/// Largest relative increase of the recorded sup-slope between samples.
pub fn worst_slope_increase(trace: &FlowTrace) -> f64 {
    trace
        .samples
        .windows(2)
        .map(|w| (w[1].sup_slope - w[0].sup_slope) / w[0].sup_slope)
        .fold(0.0, max_or_nan)
}

fn trace_plot(trace: &FlowTrace, timestamp: &str) -> String {
    let ch = |f: fn(&shrinker_core::graph::FlowSample) -> f64| -> Vec<(f64, f64)> {
        trace.samples.iter().map(|s| (s.step as f64, f(s))).collect()
    };
    let series = [
        Series {
            name: "sup residual",
            points: ch(|s| s.sup_residual),
        },
        Series {
            name: "sup |B|^2",
            points: ch(|s| s.sup_b2),
        },
        Series {
            name: "sup slope",
            points: ch(|s| s.sup_slope),
        },
        Series {
            name: "min w",
            points: ch(|s| s.min_w),
        },
    ];
    formats::line_plot_svg("graph relaxation", "step", &series, true, timestamp)
}

pub fn run(cfg: &RunConfig) -> LabResult<RunReport> {
    let fc = &cfg.lab.flow;
    let order = order(fc);
    let mut ctx = RunContext::open(cfg)?;
    let u0 = initial_field(fc)?;
    formats::write_field(&ctx.artifact("field_initial.csv"), &u0)?;

    let initial_slope = slope(&u0, order)?;
    ctx.report.push(
        CheckRecord::at_most(
            "initial_sup_slope",
            initial_slope.max(),
            fc.max_initial_slope,
            fc.slope_tolerance,
            initial_slope.nodes.len(),
        )
        .with_note("hypothesis of the experiment; the rigidity statement needs slope < 3"),
    );
    let pole = match (&fc.pole, fc.m) {
        (Some(p), 1) => Some(UnitVector::normalized(p)?),
        (None, 1) => Some(UnitVector::basis(fc.n + 1, fc.n)),
        _ => None,
    };
    let reference = horizontal_plane(fc.n, fc.m);
    let gauss0 = gauss_image_report(&u0, &reference, pole.as_ref(), order)?;
    ctx.report.push(CheckRecord::observe(
        "initial_max_v",
        Comparison::AtMost,
        gauss0.max_v,
        3.0,
        fc.slope_tolerance,
        gauss0.nodes,
    ));
    if let Some(dot) = gauss0.min_pole_dot {
        ctx.report.push(
            CheckRecord::observe(
                "initial_min_pole_dot",
                Comparison::AtLeast,
                dot,
                0.0,
                fc.slope_tolerance,
                gauss0.nodes,
            )
            .with_note("hemisphere telemetry: Gauss image in the open hemisphere iff > 0"),
        );
    }

    let (u, trace, diverged) = match relax_flow(&u0, &solver_config(fc)) {
        Ok((u, trace)) => (Some(u), trace, None),
        Err(FlowError::Diverged { step, sup, trace }) => {
            (None, trace, Some(format!("diverged at step {step}: sup |u| = {sup:e}")))
        }
        Err(FlowError::Core(e)) => return Err(e.into()),
    };
    formats::write_trace(&ctx.artifact("trace.csv"), &trace)?;
    formats::write_text(&ctx.artifact("trace.svg"), &trace_plot(&trace, &cfg.timestamp))?;

    let samples = trace.samples.len();
    ctx.report.push(CheckRecord::residual(
        "final_sup_residual",
        if diverged.is_some() {
            f64::NAN
        } else {
            trace.final_residual
        },
        fc.residual_tolerance,
        trace.steps,
    ));
    if let Some(msg) = diverged {
        ctx.report.warnings.push(msg);
    }
    if let Some(u) = &u {
        formats::write_field(&ctx.artifact("field_final.csv"), u)?;
        let dev = u.deviation_from_affine().unwrap_or(f64::NAN);
        ctx.report.push(CheckRecord::residual(
            "deviation_from_affine",
            dev,
            fc.affine_tolerance,
            u.node_count(),
        ));
        let b2 = second_fundamental_form_sq(u, order)?;
        ctx.report.push(CheckRecord::residual(
            "final_sup_B2",
            b2.sup_abs(),
            fc.b2_tolerance,
            b2.nodes.len(),
        ));
        let (defect, nodes) = slope_w_defect(u, order)?;
        ctx.report.push(CheckRecord::residual(
            "slope_times_w_minus_1",
            defect,
            SLOPE_W_TOLERANCE,
            nodes,
        ));
        if let Some(p) = &pole {
            let g = gauss_image_report(u, &reference, Some(p), order)?;
            if let Some(dot) = g.min_pole_dot {
                ctx.report.push(CheckRecord::observe(
                    "final_min_pole_dot",
                    Comparison::AtLeast,
                    dot,
                    0.0,
                    fc.slope_tolerance,
                    g.nodes,
                ));
            }
        }
    }
    let increase = worst_slope_increase(&trace);
    let monotone = increase <= fc.monotone_tolerance;
    ctx.report.push(
        CheckRecord::observe(
            "sup_slope_increase",
            Comparison::AtMost,
            increase,
            0.0,
            fc.monotone_tolerance,
            samples,
        )
        .with_note(if monotone {
            "sup slope non-increasing along the run"
        } else {
            "sup slope increased along the run (finite-box effect; not implied by the rigidity statement)"
        }),
    );
    ctx.report.push(CheckRecord::observe(
        "steps",
        Comparison::AtMost,
        trace.steps as f64,
        fc.max_steps as f64,
        0.5,
        samples,
    ));
    ctx.finish()
}
