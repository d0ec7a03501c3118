//! Algebraic certification of the pointwise estimate
//! `L(log v) + C₁|∇log v|² ≥ ½(3 − v)|B|²` for self-shrinkers with `v < 3`.
//!
//! The estimate is a statement about a quadratic form in the second
//! fundamental form coefficients `h_{α,ij}` whose coefficients depend on the
//! Jordan-angle tangents `λ_j`. This module holds the scalar reduction (the
//! function `F` on the set `Ω`), [`groups`] holds the grouped quadratic form
//! and its bounds, and [`search`] holds samplers, the block eigenvalue oracle
//! and the exact rational recheck.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub mod groups;
pub mod search;


pub use groups::{
    group_bounds_check, group_terms, h_transform_identity, la3_total, master_inequality_check, GroupMargins,
    GroupSample, GroupTerms, HTransform, IvInternals, MasterCheck,
};
pub use search::{
    adversarial_search, exact_master_margin_nonnegative, h_space_descent, sample_lambda, sample_subcritical,
    worst_case_ratio, AdversarialReport, HPattern, WorstCase,
};

/// The constant δ₀ in `sup_Ω F ≤ −δ₀`.
pub const DELTA0: f64 = 1.0 / 16.0;
/// The constant `C₁ = 1/δ₀`.
pub const C1: f64 = 16.0;

/// Tolerance on `(1+r)(1+t) = v²`.
const CONSTRAINT_TOL: f64 = 1e-12;
/// Relative size below which `2τ + t − rt/τ` counts as zero.
const POLE_TOL: f64 = 1e-12;

/// A point `(r, t)` of the slice `Ω_v`, with `τ = (v − 1)/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaPoint {
    pub v: f64,
    pub r: f64,
    pub t: f64,
}

/// Which defining condition of `Ω` failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaViolation {
    /// `v` is not in `(1, 3)`.
    VOutOfRange,
    /// `(1+r)(1+t) ≠ v²`; carries the residual.
    Constraint(f64),
    /// `r ≤ τ`: the strict inequality `r > τ` fails and the bound on `t` is
    /// undefined because `τ⁻¹r ≤ 1`.
    TBoundUndefined,
    /// `t` is below `2τ/(τ⁻¹r − 1)`; carries that bound.
    TBelowBound(f64),
    /// `r` or `t` is not positive.
    NotPositive,
}

impl OmegaViolation {
    pub fn reason(&self) -> &'static str {
        match self {
            OmegaViolation::VOutOfRange => "v outside (1,3)",
            OmegaViolation::Constraint(_) => "(1+r)(1+t) != v^2",
            OmegaViolation::TBoundUndefined => "r <= tau: t-bound undefined",
            OmegaViolation::TBelowBound(_) => "t below 2 tau/(r/tau - 1)",
            OmegaViolation::NotPositive => "r, t must be positive",
        }
    }
}

/// Result of [`omega_membership`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub violation: Option<OmegaViolation>,
}

pub fn tau(v: f64) -> f64 {
    0.5 * (v - 1.0)
}

/// Tests the three conditions defining `Ω` and names the first one that
/// fails.
pub fn omega_membership(v: f64, r: f64, t: f64) -> Membership {
    let fail = |x| Membership {
        member: false,
        violation: Some(x),
    };
    if !(v > 1.0 && v < 3.0) {
        return fail(OmegaViolation::VOutOfRange);
    }
    if !(r > 0.0 && t > 0.0) {
        return fail(OmegaViolation::NotPositive);
    }
    let residual = (1.0 + r) * (1.0 + t) - v * v;
    if residual.abs() > CONSTRAINT_TOL * v * v {
        return fail(OmegaViolation::Constraint(residual));
    }
    let tau = tau(v);
    if !(r > tau) {
        return fail(OmegaViolation::TBoundUndefined);
    }
    let bound = 2.0 * tau / (r / tau - 1.0);
    if t < bound {
        return fail(OmegaViolation::TBelowBound(bound));
    }
    Membership {
        member: true,
        violation: None,
    }
}

impl OmegaPoint {
    /// Checked constructor.
    pub fn new(v: f64, r: f64, t: f64) -> Result<Self> {
        match omega_membership(v, r, t).violation {
            None => Ok(OmegaPoint { v, r, t }),
            Some(why) => Err(Error::NotInOmega(format!("{} (v={v}, r={r}, t={t})", why.reason()))),
        }
    }

    /// The point with the given `r` on the curve `(1+r)(1+t) = v²`.
    pub fn on_curve(v: f64, r: f64) -> Result<Self> {
        OmegaPoint::new(v, r, (v * v - 1.0 - r) / (1.0 + r))
    }

    pub fn tau(&self) -> f64 {
        tau(self.v)
    }

    /// `θ = r/(v − 1)`.
    pub fn theta(&self) -> f64 {
        self.r / (self.v - 1.0)
    }
}

/// `F₁(r) = 1 + τ/r`.
pub fn f1(r: f64, tau: f64) -> f64 {
    1.0 + tau / r
}

/// `F₂(r, t) = 2 + τ(1/r + 2/t) − τ⁻¹r`.
pub fn f2(r: f64, t: f64, tau: f64) -> f64 {
    2.0 + tau * (1.0 / r + 2.0 / t) - r / tau
}

/// `H₁(v, θ) = 2θ³ − (v+5)θ² + (2v + 5/2)θ + (v+1)/2`.
pub fn h1(v: f64, theta: f64) -> f64 {
    2.0 * theta.powi(3) - (v + 5.0) * theta * theta + (2.0 * v + 2.5) * theta + 0.5 * (v + 1.0)
}

/// `H₂(v, θ) = θ(v + 1 − θ)`.
pub fn h2(v: f64, theta: f64) -> f64 {
    theta * (v + 1.0 - theta)
}

/// `F` at a point together with its factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FValues {
    pub f: f64,
    pub f1: f64,
    pub f2: f64,
    pub h1: f64,
    pub h2: f64,
    pub theta: f64,
}

impl FValues {
    /// `|F₁⁻¹F₂(F₂ − F₁)⁻¹ − F|`.
    pub fn factorization_defect(&self) -> f64 {
        (self.f2 / (self.f1 * (self.f2 - self.f1)) - self.f).abs()
    }

    /// `|F₂ − H₁/H₂|`.
    pub fn theta_form_defect(&self) -> f64 {
        (self.f2 - self.h1 / self.h2).abs()
    }
}

/// `F(r, t) = r/(τ + r) + t/(2τ + t − τ⁻¹rt)` and the auxiliary values.
pub fn f_value(pt: &OmegaPoint) -> Result<FValues> {
    if let Some(why) = omega_membership(pt.v, pt.r, pt.t).violation {
        return Err(Error::NotInOmega(why.reason().into()));
    }
    f_unchecked(pt.v, pt.r, pt.t)
}

fn f_unchecked(v: f64, r: f64, t: f64) -> Result<FValues> {
    let tau = tau(v);
    let den = 2.0 * tau + t - r * t / tau;
    if den.abs() <= POLE_TOL * (2.0 * tau + t + r * t / tau) {
        return Err(Error::Pole { denominator: den });
    }
    let theta = r / (v - 1.0);
    Ok(FValues {
        f: r / (tau + r) + t / den,
        f1: f1(r, tau),
        f2: f2(r, t, tau),
        h1: h1(v, theta),
        h2: h2(v, theta),
        theta,
    })
}

/// Uniform grid of `count` values of `v` from `lo` to `hi` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Default for VGrid {
    fn default() -> Self {
        VGrid {
            lo: 1.0 + 1e-6,
            hi: 3.0 - 1e-6,
            count: 10_000,
        }
    }
}

impl VGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 1.0 && self.hi < 3.0 && self.lo <= self.hi) || self.count == 0 {
            return Err(Error::invalid("v grid must lie inside (1,3) with at least one point"));
        }
        if self.count == 1 && self.lo != self.hi {
            return Err(Error::invalid("a one-point v grid needs lo == hi"));
        }
        Ok(())
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.count == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.count - 1) as f64
        }
    }
}

/// Sweep result on one slice `Ω_v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceResult {
    pub v: f64,
    /// `(F, r, t)` at the largest member sample, if any.
    pub worst: Option<(f64, f64, f64)>,
    pub members: usize,
    pub poles: usize,
}

/// Samples `r_k = τ + (v² − 1 − τ)·s_k` for the given fractions `s_k` in
/// `(0, 1]`, with `t` from `(1+r)(1+t) = v²`.
pub fn sweep_slice_fractions(v: f64, fractions: impl Iterator<Item = f64>) -> SliceResult {
    let tau = tau(v);
    let span = v * v - 1.0 - tau;
    let mut out = SliceResult {
        v,
        worst: None,
        members: 0,
        poles: 0,
    };
    for s in fractions {
        let r = tau + span * s;
        let t = (v * v - 1.0 - r) / (1.0 + r);
        if !omega_membership(v, r, t).member {
            continue;
        }
        match f_unchecked(v, r, t) {
            Ok(fv) => {
                out.members += 1;
                if out.worst.is_none_or(|(w, _, _)| fv.f > w) {
                    out.worst = Some((fv.f, r, t));
                }
            }
            Err(_) => out.poles += 1,
        }
    }
    out
}

/// Slice sweep with `resolution` equally spaced values of `r` in `(τ, v² − 1]`.
pub fn sweep_slice(v: f64, resolution: usize) -> SliceResult {
    sweep_slice_fractions(v, (1..=resolution).map(move |k| k as f64 / resolution as f64))
}

/// Summary of a sweep of `F` over a grid of slices.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub grid: VGrid,
    pub r_resolution: usize,
    /// Largest `F` found (−∞ if no sample was a member).
    pub worst: f64,
    /// `(v, r, t)` at the largest value.
    pub arg_max: (f64, f64, f64),
    /// `−δ₀`.
    pub bound: f64,
    /// `bound − worst`; non-negative when the bound holds.
    pub margin: f64,
    /// Member samples at which `F` was evaluated.
    pub samples: usize,
    pub poles: usize,
    pub empty_slices: usize,
    /// Largest `F` per slice (NaN for empty slices), in grid order.
    pub worst_per_v: Vec<f64>,
}

impl SweepReport {
    fn from_slices(grid: VGrid, r_resolution: usize, slices: &[SliceResult]) -> Self {
        let mut rep = SweepReport {
            grid,
            r_resolution,
            worst: f64::NEG_INFINITY,
            arg_max: (f64::NAN, f64::NAN, f64::NAN),
            bound: -DELTA0,
            margin: f64::INFINITY,
            samples: 0,
            poles: 0,
            empty_slices: 0,
            worst_per_v: Vec::with_capacity(slices.len()),
        };
        for s in slices {
            rep.samples += s.members;
            rep.poles += s.poles;
            match s.worst {
                Some((f, r, t)) => {
                    rep.worst_per_v.push(f);
                    if f > rep.worst {
                        rep.worst = f;
                        rep.arg_max = (s.v, r, t);
                    }
                }
                None => {
                    rep.empty_slices += 1;
                    rep.worst_per_v.push(f64::NAN);
                }
            }
        }
        rep.margin = rep.bound - rep.worst;
        rep
    }

    /// Assembles a report from slice results computed elsewhere (e.g. in
    /// parallel), which must be in grid order.
    pub fn merge(grid: VGrid, r_resolution: usize, slices: &[SliceResult]) -> Result<Self> {
        if slices.len() != grid.count {
            return Err(Error::DimensionMismatch {
                expected: grid.count,
                got: slices.len(),
            });
        }
        Ok(SweepReport::from_slices(grid, r_resolution, slices))
    }

    /// Whether `worst ≤ −δ₀ + eps`.
    pub fn passes(&self, eps: f64) -> bool {
        self.worst <= self.bound + eps
    }
}

/// Sweeps `F` over `grid.count × r_resolution` points.
pub fn sup_f_sweep(grid: VGrid, r_resolution: usize) -> Result<SweepReport> {
    grid.validate()?;
    if r_resolution == 0 {
        return Err(Error::invalid("r resolution must be positive"));
    }
    let slices: Vec<SliceResult> = (0..grid.count)
        .map(|k| sweep_slice(grid.value(k), r_resolution))
        .collect();
    Ok(SweepReport::from_slices(grid, r_resolution, &slices))
}

/// Resweeps one grid cell around the arg-max of `report`, `factor` times
/// finer in both `v` and the slice fraction.
pub fn refine_sweep(report: &SweepReport, factor: usize) -> Result<SweepReport> {
    if factor == 0 || !report.worst.is_finite() {
        return Err(Error::invalid("nothing to refine"));
    }
    let (v0, r0, _) = report.arg_max;
    let g = report.grid;
    let dv = if g.count > 1 {
        (g.hi - g.lo) / (g.count - 1) as f64
    } else {
        0.0
    };
    let lo = (v0 - dv).max(g.lo);
    let hi = (v0 + dv).min(g.hi);
    let count = if hi > lo { 2 * factor + 1 } else { 1 };
    let grid = VGrid { lo, hi, count };
    let n = report.r_resolution as f64;
    let tau0 = tau(v0);
    let s0 = (r0 - tau0) / (v0 * v0 - 1.0 - tau0);
    let ds = 1.0 / n;
    let steps = 2 * factor;
    let slices: Vec<SliceResult> = (0..grid.count)
        .map(|k| {
            let fr = (0..=steps)
                .map(move |q| s0 - ds + 2.0 * ds * q as f64 / steps as f64)
                .filter(|s| *s > 0.0 && *s <= 1.0);
            sweep_slice_fractions(grid.value(k), fr)
        })
        .collect();
    Ok(SweepReport::from_slices(grid, report.r_resolution * factor, &slices))
}

/// Minimum of a continuous function on `[a, b]`: dense sampling followed by
/// golden-section refinement in the best bracket.
pub fn minimize_on_interval(f: impl Fn(f64) -> f64, a: f64, b: f64, samples: usize) -> (f64, f64) {
    let samples = samples.max(2);
    let x = |k: usize| a + (b - a) * k as f64 / samples as f64;
    let (mut kbest, mut fbest) = (0, f(a));
    for k in 1..=samples {
        let fk = f(x(k));
        if fk < fbest {
            kbest = k;
            fbest = fk;
        }
    }
    let mut lo = x(kbest.saturating_sub(1));
    let mut hi = x((kbest + 1).min(samples));
    let ratio = 0.5 * (5.0.sqrt() - 1.0);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs()) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    let (xm, fm) = if fc < fd { (c, fc) } else { (d, fd) };
    if fm < fbest {
        (xm, fm)
    } else {
        (x(kbest), fbest)
    }
}

/// Largest and smallest values of `F₁`, `F₂`, `H₁`, `H₂` met by a sweep,
/// used to recheck `|F| ≥ 1/16` through the factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorBounds {
    pub max_f1: f64,
    pub min_f2: f64,
    pub max_abs_f2_minus_f1: f64,
    pub min_h1: f64,
    pub max_h2: f64,
    pub min_abs_f: f64,
    /// Largest `|F − F₁⁻¹F₂(F₂−F₁)⁻¹| / max(1, F²)`. Near the pole both
    /// forms divide by a cancelling difference, so the absolute error grows
    /// like `ε·F²`.
    pub max_factorization_defect: f64,
    pub samples: usize,
}

/// Evaluates the factor bounds on a `v_count × r_resolution` sweep.
pub fn factor_bounds(grid: VGrid, r_resolution: usize) -> Result<FactorBounds> {
    grid.validate()?;
    let mut b = FactorBounds {
        max_f1: f64::NEG_INFINITY,
        min_f2: f64::INFINITY,
        max_abs_f2_minus_f1: 0.0,
        min_h1: f64::INFINITY,
        max_h2: f64::NEG_INFINITY,
        min_abs_f: f64::INFINITY,
        max_factorization_defect: 0.0,
        samples: 0,
    };
    for k in 0..grid.count {
        let v = grid.value(k);
        let tau = tau(v);
        let span = v * v - 1.0 - tau;
        for q in 1..=r_resolution {
            let r = tau + span * q as f64 / r_resolution as f64;
            let t = (v * v - 1.0 - r) / (1.0 + r);
            if !omega_membership(v, r, t).member {
                continue;
            }
            let Ok(fv) = f_unchecked(v, r, t) else { continue };
            b.samples += 1;
            b.max_f1 = b.max_f1.max(fv.f1);
            b.min_f2 = b.min_f2.min(fv.f2);
            b.max_abs_f2_minus_f1 = b.max_abs_f2_minus_f1.max((fv.f2 - fv.f1).abs());
            b.min_h1 = b.min_h1.min(fv.h1);
            b.max_h2 = b.max_h2.max(fv.h2);
            b.min_abs_f = b.min_abs_f.min(fv.f.abs());
            b.max_factorization_defect = b
                .max_factorization_defect
                .max(fv.factorization_defect() / (fv.f * fv.f).max(1.0));
        }
    }
    Ok(b)
}

/// `inf H₁` over the closure of `{(v, θ): v ∈ (1,3), θ ∈ (½, v+1]}` on a grid.
pub fn h1_domain_infimum(v_count: usize, theta_count: usize) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, f64::NAN, f64::NAN);
    for a in 0..=v_count {
        let v = 1.0 + 2.0 * a as f64 / v_count as f64;
        for b in 0..=theta_count {
            let th = 0.5 + (v + 0.5) * b as f64 / theta_count as f64;
            let h = h1(v, th);
            if h < best.0 {
                best = (h, v, th);
            }
        }
    }
    best
}

/// Diagnostics around the near-equality configuration
/// `λ_i² = τ(2τ + 3)`, `λ_j² = λ_k² = 2τ²/(λ_i² − τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualityProbe {
    pub v: f64,
    /// `(1+λ_i²)(1+λ_j²)(1+λ_k²)` at the configuration.
    pub product_at_equality: f64,
    /// `2v³/(v+1)`.
    pub lower_bound: f64,
    /// Smallest `product − 2v³/(v+1)` over the probed neighbourhood.
    pub min_gap: f64,
    /// `2v³/(v+1) − v²`, positive for `v > 1`.
    pub excess_over_v_squared: f64,
}

/// Probes the three-index product bound on a `(2k+1)²` grid of
/// `(λ_i², λ_j²)` around the equality configuration (with `λ_k² = λ_j²`
/// pushed to the admissible minimum and above).
pub fn equality_probe(v: f64, k: usize, rel_width: f64) -> Result<EqualityProbe> {
    if !(v > 1.0 && v < 3.0) {
        return Err(Error::NotSubcritical { v });
    }
    let tau = tau(v);
    let product = |li: f64, lj: f64, lk: f64| (1.0 + li) * (1.0 + lj) * (1.0 + lk);
    let li0 = tau * (2.0 * tau + 3.0);
    let lmin = |li: f64| 2.0 * tau * tau / (li - tau);
    let at = product(li0, lmin(li0), lmin(li0));
    let lower = 2.0 * v.powi(3) / (v + 1.0);
    let mut gap = f64::INFINITY;
    let steps = k.max(1) as f64;
    for a in -(k as isize)..=(k as isize) {
        let li = li0 * (1.0 + rel_width * a as f64 / steps);
        if li <= tau {
            continue;
        }
        let base = lmin(li);
        for b in 0..=(2 * k) {
            let lj = base * (1.0 + rel_width * b as f64 / steps);
            for c in 0..=(2 * k) {
                let lk = base * (1.0 + rel_width * c as f64 / steps);
                gap = gap.min(product(li, lj, lk) - lower);
            }
        }
    }
    Ok(EqualityProbe {
        v,
        product_at_equality: at,
        lower_bound: lower,
        min_gap: gap,
        excess_over_v_squared: lower - v * v,
    })
}
