//! `verify-targets`: closed-form Hessians on Sⁿ and G(n, m) against central
//! differences along geodesics.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use shrinker_core::grassmann::{
    adapted_frame, dlogv_form, frame_with_angles, hess_logv_form, hess_v_form, random_frame, tangent_geodesic, v_value,
    w_product, OrientedFrame, TangentCoeffs,
};
use shrinker_core::linalg::{axpy, dot};
use shrinker_core::sphere::{
    great_circle, hess_height, hess_r_theta, longitude_coords, random_point, random_tangent, TangentFrame, UnitVector,
};
use shrinker_core::{fd, Result as CoreResult};

use super::{max_or_nan, RunContext};
use crate::config::{RunConfig, TargetsConfig};
use crate::error::LabResult;
use crate::formats;
use crate::report::{CheckRecord, RunReport};
use crate::rng;

/// One closed-form value compared with its finite difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub family: &'static str,
    pub probe: usize,
    pub n: usize,
    pub m: usize,
    pub closed_form: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

/// `|fd − cf| / max(|cf|, scale)`.
fn rel(fd_val: f64, cf: f64, scale: f64) -> f64 {
    (fd_val - cf).abs() / cf.abs().max(scale)
}

struct Prober<'a> {
    cfg: &'a TargetsConfig,
    rows: Vec<ProbeRow>,
}

impl Prober<'_> {
    #[allow(clippy::too_many_arguments)]
    fn record(&mut self, family: &'static str, probe: usize, n: usize, m: usize, cf: f64, fd_val: f64, scale: f64) {
        let cf = if self.cfg.sign_flip { -cf } else { cf };
        self.rows.push(ProbeRow {
            family,
            probe,
            n,
            m,
            closed_form: cf,
            finite_difference: fd_val,
            relative_error: rel(fd_val, cf, scale),
        });
    }

    /// `Hess⟨·, a⟩(v, v)` on Sⁿ, n = 1…4.
    fn sphere_height(&mut self, rng: &mut ChaCha8Rng) -> CoreResult<()> {
        let h = self.cfg.fd_step;
        for k in 0..self.cfg.probes {
            let ambient = 2 + k % 4;
            let x = random_point(rng, ambient);
            let a = random_point(rng, ambient);
            let v = random_tangent(rng, &x);
            let basis = TangentFrame::complete(&x);
            let cf = hess_height(&x, &a, &basis)?.quad(&basis.coordinates(&v));
            let fd_val = fd::d2(|t| dot(&great_circle(&x, &v, t), a.coords()), h);
            self.record("sphere_height", k, ambient - 1, 1, cf, fd_val, 1.0);
        }
        Ok(())
    }

    /// Hess r and Hess θ on 𝕍 ⊂ Sⁿ, n = 2…4, away from the axis and the
    /// deleted half-plane.
    fn sphere_longitude(&mut self, rng: &mut ChaCha8Rng) -> CoreResult<()> {
        let h = self.cfg.fd_step;
        let mut k = 0;
        while k < self.cfg.probes {
            let ambient = 3 + k % 3;
            let x = random_point(rng, ambient);
            let lc = longitude_coords(&x)?;
            if lc.r < 0.1 || std::f64::consts::PI - lc.theta.abs() < 0.01 {
                continue;
            }
            let v = random_tangent(rng, &x);
            let basis = TangentFrame::complete(&x);
            let c = basis.coordinates(&v);
            let (hr, ht) = hess_r_theta(&x, &basis)?;
            let fr = fd::d2(
                |t| {
                    let p = great_circle(&x, &v, t);
                    p[0].hypot(p[1])
                },
                h,
            );
            let ft = fd::d2(
                |t| {
                    let p = great_circle(&x, &v, t);
                    p[1].atan2(p[0])
                },
                h,
            );
            self.record("sphere_r", k, ambient - 1, 1, hr.quad(&c), fr, 1.0);
            self.record("sphere_theta", k, ambient - 1, 1, ht.quad(&c), ft, 1.0);
            k += 1;
        }
        Ok(())
    }

    /// Hess v, d log v and Hess log v on G(n, m) along `exp_P(tZ)`, |Z| = 1.
    /// Errors are relative to max(|closed form|, v|Z|²) for Hess v and to
    /// max(|closed form|, 1) for the log v forms.
    fn grassmann(&mut self, rng: &mut ChaCha8Rng) -> CoreResult<()> {
        let h = self.cfg.fd_step;
        let d = self.cfg.max_dim;
        for k in 0..self.cfg.probes {
            let n = 1 + k % d;
            let m = 1 + (k / d) % d;
            let p0 = OrientedFrame::reference(n, m);
            let theta: Vec<f64> = (0..n.min(m))
                .map(|_| rng.random_range(0.0..self.cfg.max_angle))
                .collect();
            let p = frame_with_angles(rng, n, m, &theta);
            let nu = p.complement();
            let z = unit_coeffs(rng, n, m);
            let af = adapted_frame(&p, &p0)?;
            let za = z.change_frame(p.rows(), &nu, &af.tangent, &af.normal);
            let spec = &af.spectrum;
            let v_at = |t: f64| -> f64 {
                let q = tangent_geodesic(p.rows(), &nu, &z, t).expect("geodesic of a valid frame");
                1.0 / w_product(&q, &p0).expect("same shape").abs()
            };
            let v0 = v_value(spec)?;
            self.record(
                "grassmann_hess_v",
                k,
                n,
                m,
                hess_v_form(spec, &za)?,
                fd::d2(v_at, h),
                v0,
            );
            self.record(
                "grassmann_dlogv",
                k,
                n,
                m,
                dlogv_form(spec, &za)?,
                fd::d1(|t| v_at(t).ln(), h),
                1.0,
            );
            self.record(
                "grassmann_hess_logv",
                k,
                n,
                m,
                hess_logv_form(spec, &za)?,
                fd::d2(|t| v_at(t).ln(), h),
                1.0,
            );
        }
        Ok(())
    }

    /// m = 1: G(n, 1) is the sphere of unit normals N and v = sec∠(N, ε_{n+1}).
    /// The Grassmannian Hess v must match differences of the secant along the
    /// great circle that N traces.
    fn codimension_one(&mut self, rng: &mut ChaCha8Rng) -> CoreResult<()> {
        let h = self.cfg.fd_step;
        let mut k = 0;
        while k < self.cfg.probes {
            let n = 1 + rng.random_range(0..self.cfg.max_dim.max(2));
            let p = random_frame(rng, n, 1);
            let nu = p.complement();
            let normal = UnitVector::new(nu[0].clone())?;
            let pole = UnitVector::basis(n + 1, n);
            if normal.dot(&pole).abs() < 0.3 {
                continue;
            }
            let z = unit_coeffs(rng, n, 1);
            let mut ndot = vec![0.0; n + 1];
            for j in 0..n {
                axpy(-z.get(j, 0), &p.rows()[j], &mut ndot);
            }
            let sec = |t: f64| 1.0 / dot(&great_circle(&normal, &ndot, t), pole.coords()).abs();
            let af = adapted_frame(&p, &OrientedFrame::reference(n, 1))?;
            let za = z.change_frame(p.rows(), &nu, &af.tangent, &af.normal);
            let cf = hess_v_form(&af.spectrum, &za)?;
            self.record("m1_secant_hess_v", k, n, 1, cf, fd::d2(sec, h), sec(0.0));
            k += 1;
        }
        Ok(())
    }
}

fn unit_coeffs(rng: &mut ChaCha8Rng, n: usize, m: usize) -> TangentCoeffs {
    let z = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let z = TangentCoeffs::new(z).expect("shape matches");
    z.scale(1.0 / z.norm_sq().sqrt())
}

pub const FAMILIES: [&str; 7] = [
    "sphere_height",
    "sphere_r",
    "sphere_theta",
    "grassmann_hess_v",
    "grassmann_dlogv",
    "grassmann_hess_logv",
    "m1_secant_hess_v",
];

/// All probe rows, deterministic in the seed.
pub fn probe_rows(cfg: &TargetsConfig, seed: u64) -> LabResult<Vec<ProbeRow>> {
    let mut p = Prober { cfg, rows: Vec::new() };
    p.sphere_height(&mut rng::stream(seed, 0))?;
    p.sphere_longitude(&mut rng::stream(seed, 1))?;
    p.grassmann(&mut rng::stream(seed, 2))?;
    p.codimension_one(&mut rng::stream(seed, 3))?;
    Ok(p.rows)
}

pub fn run(cfg: &RunConfig) -> LabResult<RunReport> {
    let tc = &cfg.lab.targets;
    let mut ctx = RunContext::open(cfg)?;
    let rows = probe_rows(tc, cfg.lab.seed)?;
    formats::write_csv(&ctx.artifact("hessian_residuals.csv"), &rows)?;
    let mut overall = 0.0;
    for family in FAMILIES {
        let errs: Vec<f64> = rows
            .iter()
            .filter(|r| r.family == family)
            .map(|r| r.relative_error)
            .collect();
        let worst = errs.iter().copied().fold(0.0, max_or_nan);
        overall = max_or_nan(overall, worst);
        ctx.report.push(CheckRecord::residual(
            &format!("{family}_max_relative_error"),
            worst,
            tc.tolerance,
            errs.len(),
        ));
    }
    ctx.report.push(
        CheckRecord::residual("max_hessian_residual", overall, tc.tolerance, rows.len())
            .with_note("largest relative error over every family"),
    );
    if tc.sign_flip {
        ctx.report
            .warnings
            .push("sign_flip test hook active: closed forms were negated".into());
    }
    ctx.finish()
}
