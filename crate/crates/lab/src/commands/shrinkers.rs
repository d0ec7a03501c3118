//! `verify-shrinkers`: catalog residuals `H + X^N/2`, weighted tension of the
//! Gauss map, the composition formula, and the integrated identity on a
//! closed shrinker.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use shrinker_core::immersion::quadrature::{stability_convergence, stability_identity_check, WeightedPatchMesh};
use shrinker_core::immersion::target::horizontal_plane;
use shrinker_core::immersion::{
    composition_check, parse_surface, point_frame, shrinker_residual, tension_norm, weighted_tension, ChartBox, Height,
    Immersion, LogV, TargetFunction, VFunction,
};
use shrinker_core::linalg::norm;
use shrinker_core::sphere::{random_point, UnitVector};

use super::{max_or_nan, RunContext};
use crate::config::{RunConfig, ShrinkersConfig, TargetKind};
use crate::error::{LabError, LabResult};
use crate::formats;
use crate::report::{CheckRecord, RunReport};
use crate::rng;

/// Uniform parameter whose 4th-order stencil (plus slack) stays in the chart.
pub fn random_param(rng: &mut ChaCha8Rng, chart: &ChartBox) -> Vec<f64> {
    let pad = 3.0 * chart.fd_step();
    (0..chart.dim())
        .map(|a| {
            if chart.periodic[a] {
                rng.random_range(chart.lo[a]..chart.hi[a])
            } else {
                rng.random_range(chart.lo[a] + pad..chart.hi[a] - pad)
            }
        })
        .collect()
}

fn surface(name: &str) -> LabResult<Box<dyn Immersion>> {
    parse_surface(name).map_err(|e| LabError::Config(format!("surface {name:?}: {e}")))
}

fn joined(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub surface: String,
    pub probe: usize,
    pub param: String,
    pub position: String,
    pub b_norm_sq: f64,
    pub residual_norm: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensionRow {
    pub surface: String,
    pub probe: usize,
    pub param: String,
    pub tension_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionRow {
    pub surface: String,
    pub target: &'static str,
    pub probe: usize,
    pub param: String,
    pub lhs: f64,
    pub hess_term: f64,
    pub tension_term: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratedRow {
    pub n_z: usize,
    pub n_phi: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub relative: f64,
    /// Observed order against the previous mesh (empty for the first).
    pub order: Option<f64>,
}

/// Residual probes on one surface.
pub fn residual_rows(name: &str, probes: usize, seed: u64, stream: u64) -> LabResult<Vec<ResidualRow>> {
    let imm = surface(name)?;
    let mut r = rng::stream(seed, stream);
    (0..probes)
        .map(|k| {
            let p = random_param(&mut r, imm.chart());
            let pf = point_frame(&imm, &p)?;
            Ok(ResidualRow {
                surface: name.into(),
                probe: k,
                param: joined(&p),
                position: joined(&pf.position),
                b_norm_sq: pf.b_norm_sq(),
                residual_norm: norm(&shrinker_residual(&pf)),
                rho: pf.rho,
            })
        })
        .collect()
}

/// `|τ_ρ(γ)|` at random points of one surface.
pub fn tension_rows(name: &str, probes: usize, seed: u64, stream: u64) -> LabResult<Vec<TensionRow>> {
    let imm = surface(name)?;
    let mut r = rng::stream(seed, stream);
    (0..probes)
        .map(|k| {
            let p = random_param(&mut r, imm.chart());
            Ok(TensionRow {
                surface: name.into(),
                probe: k,
                param: joined(&p),
                tension_norm: tension_norm(&weighted_tension(&imm, &p)?),
            })
        })
        .collect()
}

fn target_name(t: TargetKind) -> &'static str {
    match t {
        TargetKind::Height => "height",
        TargetKind::V => "v",
        TargetKind::LogV => "log_v",
    }
}

/// Composition probes; probe k uses case `k mod len`. Returns the rows and the
/// number of (probe, target) pairs skipped because F is undefined at γ(p).
pub fn composition_rows(sc: &ShrinkersConfig, seed: u64) -> LabResult<(Vec<CompositionRow>, usize)> {
    let surfaces = sc
        .composition
        .iter()
        .map(|c| surface(&c.surface))
        .collect::<LabResult<Vec<_>>>()?;
    let per_probe: Vec<LabResult<(Vec<CompositionRow>, usize)>> = (0..sc.composition_probes)
        .into_par_iter()
        .map(|k| {
            let case = &sc.composition[k % sc.composition.len()];
            let imm = &surfaces[k % surfaces.len()];
            let mut r = rng::stream(seed, 10_000 + k as u64);
            let p = random_param(&mut r, imm.chart());
            let mut rows = Vec::new();
            let mut skipped = 0;
            for &t in &case.targets {
                let target: Box<dyn TargetFunction> = match t {
                    TargetKind::Height => {
                        if imm.codim() != 1 {
                            return Err(LabError::Config(format!(
                                "height target needs codimension one: {}",
                                case.surface
                            )));
                        }
                        Box::new(Height::new(random_point(&mut r, imm.ambient())))
                    }
                    TargetKind::V => Box::new(VFunction {
                        reference: horizontal_plane(imm.dim(), imm.codim()),
                    }),
                    TargetKind::LogV => Box::new(LogV {
                        reference: horizontal_plane(imm.dim(), imm.codim()),
                    }),
                };
                match composition_check(imm, &p, target.as_ref()) {
                    Ok(c) => rows.push(CompositionRow {
                        surface: case.surface.clone(),
                        target: target_name(t),
                        probe: k,
                        param: joined(&p),
                        lhs: c.lhs,
                        hess_term: c.hess_term,
                        tension_term: c.tension_term,
                        residual: c.residual,
                    }),
                    Err(shrinker_core::Error::InfiniteV { .. }) => skipped += 1,
                    Err(e) => return Err(e.into()),
                }
            }
            Ok((rows, skipped))
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = 0;
    for r in per_probe {
        let (mut rs, s) = r?;
        rows.append(&mut rs);
        skipped += s;
    }
    Ok((rows, skipped))
}

pub fn run(cfg: &RunConfig) -> LabResult<RunReport> {
    let sc = &cfg.lab.shrinkers;
    let seed = cfg.lab.seed;
    let mut ctx = RunContext::open(cfg)?;

    // Catalog residuals and tension, one RNG stream per surface.
    let per_surface: Vec<LabResult<(Vec<ResidualRow>, Vec<TensionRow>)>> = sc
        .catalog
        .par_iter()
        .enumerate()
        .map(|(k, name)| {
            Ok((
                residual_rows(name, sc.residual_probes, seed, 2 * k as u64)?,
                tension_rows(name, sc.tension_probes, seed, 2 * k as u64 + 1)?,
            ))
        })
        .collect();
    let mut residuals = Vec::new();
    let mut tensions = Vec::new();
    for r in per_surface {
        let (res, ten) = r?;
        residuals.extend(res);
        tensions.extend(ten);
    }
    let control = tension_rows(&sc.control, sc.control_probes, seed, 5_000)?;
    for name in &sc.catalog {
        let rows: Vec<_> = residuals.iter().filter(|r| &r.surface == name).collect();
        let worst = rows.iter().map(|r| r.residual_norm).fold(0.0, max_or_nan);
        ctx.report.push(CheckRecord::residual(
            &format!("residual[{name}]"),
            worst,
            sc.residual_tolerance,
            rows.len(),
        ));
        if name.starts_with("plane") {
            let b2 = rows.iter().map(|r| r.b_norm_sq).fold(0.0, max_or_nan);
            ctx.report.push(CheckRecord::residual(
                &format!("b_norm_sq[{name}]"),
                b2,
                sc.residual_tolerance,
                rows.len(),
            ));
        }
    }
    for name in &sc.catalog {
        let rows: Vec<_> = tensions.iter().filter(|r| &r.surface == name).collect();
        let worst = rows.iter().map(|r| r.tension_norm).fold(0.0, max_or_nan);
        ctx.report.push(CheckRecord::residual(
            &format!("tension[{name}]"),
            worst,
            sc.tension_tolerance,
            rows.len(),
        ));
    }
    let biggest = control.iter().map(|r| r.tension_norm).fold(0.0, max_or_nan);
    ctx.report.push(
        CheckRecord::at_least(
            &format!("control_tension[{}]", sc.control),
            biggest,
            sc.control_min_tension,
            sc.control_tolerance,
            control.len(),
        )
        .with_note("non-shrinker: the Gauss map must not be weighted-harmonic"),
    );
    tensions.extend(control);
    formats::write_csv(&ctx.artifact("catalog_residuals.csv"), &residuals)?;
    formats::write_csv(&ctx.artifact("tension.csv"), &tensions)?;

    let (comp, skipped) = composition_rows(sc, seed)?;
    let worst = comp.iter().map(|r| r.residual.abs()).fold(0.0, max_or_nan);
    ctx.report.push(CheckRecord::residual(
        "composition_residual",
        worst,
        sc.composition_tolerance,
        comp.len(),
    ));
    if skipped > 0 {
        ctx.report.warnings.push(format!(
            "{skipped} composition evaluations skipped: v undefined at γ(p)"
        ));
    }
    formats::write_csv(&ctx.artifact("composition.csv"), &comp)?;

    let ic = &sc.integrated;
    let imm = surface(&ic.surface)?;
    let a = UnitVector::normalized(&ic.direction)?;
    let mesh = WeightedPatchMesh::midpoint(&imm, &ic.resolution)?;
    let chk = stability_identity_check(&mesh, &a)?;
    ctx.report.push(CheckRecord::residual(
        &format!(
            "integrated_identity[{}@{}x{}]",
            ic.surface, ic.resolution[0], ic.resolution[1]
        ),
        chk.relative,
        ic.tolerance,
        mesh.len(),
    ));
    let study = stability_convergence(&imm, &a, &ic.refinements)?;
    let order_err = study
        .orders
        .iter()
        .map(|o| (o - ic.expected_order).abs())
        .fold(0.0, max_or_nan);
    ctx.report.push(
        CheckRecord::residual(
            "integrated_identity_order_error",
            order_err,
            ic.order_tolerance,
            study.orders.len(),
        )
        .with_note(format!("observed orders {:?}", study.orders)),
    );
    let mut rows: Vec<IntegratedRow> = study
        .levels
        .iter()
        .enumerate()
        .map(|(k, (res, c))| IntegratedRow {
            n_z: res[0],
            n_phi: res[1],
            lhs: c.lhs,
            rhs: c.rhs,
            relative: c.relative,
            order: k.checked_sub(1).map(|j| study.orders[j]),
        })
        .collect();
    rows.push(IntegratedRow {
        n_z: ic.resolution[0],
        n_phi: ic.resolution[1],
        lhs: chk.lhs,
        rhs: chk.rhs,
        relative: chk.relative,
        order: None,
    });
    formats::write_csv(&ctx.artifact("integrated_identity.csv"), &rows)?;
    ctx.finish()
}
