//! Concrete immersions with exact jets, plus wrappers.
//!
//! | name | surface | shrinker? |
//! |------|---------|-----------|
//! | `plane:n=2,m=2` | coordinate n-plane in ℝⁿ⁺ᵐ | yes |
//! | `sphere:n=2,R=2` | Sⁿ(R) about the origin (hyperspherical chart) | iff R² = 2n |
//! | `sphere-area:R=2` | S²(R) in the equal-area chart (z, φ), closed | iff R = 2 |
//! | `cylinder:k=1,n=3` | S^k(√(2k)) × ℝ^{n−k} | yes |
//! | `graph-bump:n=2,m=1,amp=0.3,width=1` | graph of a Gaussian bump | no |
//! | `graph-cap:R=2` | upper hemisphere of S²(R) as a graph over a disc | iff R = 2 |
//! | `torus:r1=1.41,r2=1.41` | S¹(r₁) × S¹(r₂) ⊂ ℝ⁴, closed | iff r₁ = r₂ = √2 |
//!
//! `sphere` also accepts `cz=<c>` to shift the centre along the last axis.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use super::{ChartBox, Immersion};
use crate::error::{Error, Result};
use crate::fd::{self, Jet};

/// One factor of a product-form coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    One,
    Sin,
    Cos,
    /// The parameter itself.
    Id,
    /// `√(1 − t²)`.
    SqrtOneMinusSq,
}

impl Factor {
    /// (value, first derivative, second derivative).
    fn eval(self, t: f64) -> (f64, f64, f64) {
        match self {
            Factor::One => (1.0, 0.0, 0.0),
            Factor::Sin => (t.sin(), t.cos(), -t.sin()),
            Factor::Cos => (t.cos(), -t.sin(), -t.cos()),
            Factor::Id => (t, 1.0, 0.0),
            Factor::SqrtOneMinusSq => {
                let s = (1.0 - t * t).max(0.0).sqrt();
                (s, -t / s, -1.0 / (s * s * s))
            }
        }
    }
}

/// Surfaces whose coordinates are `offset_k + scale_k ∏_a factor_{k,a}(u_a)`.
///
/// Spheres in hyperspherical and equal-area charts, cylinders over spheres,
/// and coordinate planes are all of this form, with exact jets.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSurface {
    name: String,
    n: usize,
    m: usize,
    chart: ChartBox,
    closed: bool,
    scale: Vec<f64>,
    offset: Vec<f64>,
    factors: Vec<Vec<Factor>>,
}

/// Factors of the standard hyperspherical parametrisation of Sᵏ with angles
/// `u_first .. u_first+k` inside an n-parameter surface. Returns k + 1 rows.
fn hyperspherical_rows(k: usize, first: usize, n: usize) -> Vec<Vec<Factor>> {
    let mut rows = Vec::with_capacity(k + 1);
    if k == 1 {
        let mut c = vec![Factor::One; n];
        c[first] = Factor::Cos;
        let mut s = vec![Factor::One; n];
        s[first] = Factor::Sin;
        return vec![c, s];
    }
    // X_0, X_1 use all polar sines and the azimuth; the rest peel off cosines.
    let az = first + k - 1;
    for last in [Factor::Cos, Factor::Sin] {
        let mut r = vec![Factor::One; n];
        for a in first..az {
            r[a] = Factor::Sin;
        }
        r[az] = last;
        rows.push(r);
    }
    for j in (0..k - 1).rev() {
        let mut r = vec![Factor::One; n];
        for a in first..first + j {
            r[a] = Factor::Sin;
        }
        r[first + j] = Factor::Cos;
        rows.push(r);
    }
    rows
}

/// Margin kept from the coordinate singularities of polar angles.
pub const POLAR_MARGIN: f64 = 0.05;

impl ProductSurface {
    /// The coordinate n-plane in ℝⁿ⁺ᵐ on the box [−l, l]ⁿ.
    pub fn plane(n: usize, m: usize, l: f64) -> Self {
        let factors = (0..n + m)
            .map(|k| {
                let mut r = vec![Factor::One; n];
                if k < n {
                    r[k] = Factor::Id;
                }
                r
            })
            .collect();
        let mut scale = vec![1.0; n + m];
        for s in scale.iter_mut().skip(n) {
            *s = 0.0;
        }
        ProductSurface {
            name: format!("plane:n={n},m={m}"),
            n,
            m: m.max(1),
            chart: ChartBox::cube(n, l),
            closed: false,
            scale,
            offset: vec![0.0; n + m],
            factors,
        }
    }

    /// Sⁿ(R) ⊂ ℝⁿ⁺¹ centred at `center` in hyperspherical angles. The polar
    /// angles range over [margin, π − margin]; the azimuth is periodic.
    pub fn sphere(n: usize, radius: f64, center: Vec<f64>) -> Self {
        assert!(n >= 1 && center.len() == n + 1);
        let factors = hyperspherical_rows(n, 0, n);
        let mut lo = vec![POLAR_MARGIN; n];
        let mut hi = vec![PI - POLAR_MARGIN; n];
        let mut periodic = vec![false; n];
        lo[n - 1] = -PI;
        hi[n - 1] = PI;
        periodic[n - 1] = true;
        let shifted = center.iter().any(|c| *c != 0.0);
        let name = if shifted {
            format!("sphere:n={n},R={radius},center={center:?}")
        } else {
            format!("sphere:n={n},R={radius}")
        };
        ProductSurface {
            name,
            n,
            m: 1,
            chart: ChartBox::new(lo, hi, periodic),
            closed: false,
            scale: vec![radius; n + 1],
            offset: center,
            factors,
        }
    }

    /// The shrinker sphere Sⁿ(√(2n)).
    pub fn shrinker_sphere(n: usize) -> Self {
        Self::sphere(n, (2.0 * n as f64).sqrt(), vec![0.0; n + 1])
    }

    /// S²(R) in the equal-area chart `(z, φ) ∈ [−1, 1] × [−π, π)`:
    /// `X = (R√(1−z²) cos φ, R√(1−z²) sin φ, R z)`, `√det g = R²`.
    pub fn area_sphere(radius: f64) -> Self {
        let factors = vec![
            vec![Factor::SqrtOneMinusSq, Factor::Cos],
            vec![Factor::SqrtOneMinusSq, Factor::Sin],
            vec![Factor::Id, Factor::One],
        ];
        ProductSurface {
            name: format!("sphere-area:R={radius}"),
            n: 2,
            m: 1,
            chart: ChartBox::new(vec![-1.0, -PI], vec![1.0, PI], vec![false, true]),
            closed: true,
            scale: vec![radius; 3],
            offset: vec![0.0; 3],
            factors,
        }
    }

    /// S^k(√(2k)) × ℝ^{n−k} ⊂ ℝⁿ⁺¹; the line factors range over [−l, l].
    pub fn cylinder(k: usize, n: usize, l: f64) -> Self {
        assert!(k >= 1 && k <= n);
        let radius = (2.0 * k as f64).sqrt();
        let mut factors = hyperspherical_rows(k, 0, n);
        let mut scale = vec![radius; k + 1];
        for a in k..n {
            let mut r = vec![Factor::One; n];
            r[a] = Factor::Id;
            factors.push(r);
            scale.push(1.0);
        }
        let mut lo = vec![POLAR_MARGIN; n];
        let mut hi = vec![PI - POLAR_MARGIN; n];
        let mut periodic = vec![false; n];
        lo[k - 1] = -PI;
        hi[k - 1] = PI;
        periodic[k - 1] = true;
        for a in k..n {
            lo[a] = -l;
            hi[a] = l;
        }
        ProductSurface {
            name: format!("cylinder:k={k},n={n}"),
            n,
            m: 1,
            chart: ChartBox::new(lo, hi, periodic),
            closed: false,
            scale,
            offset: vec![0.0; n + 1],
            factors,
        }
    }
}

impl ProductSurface {
    /// The flat torus S¹(r₁) × S¹(r₂) ⊂ ℝ⁴ on the periodic chart [−π, π)².
    /// It is a self-shrinker iff r₁ = r₂ = √2.
    pub fn clifford_torus(r1: f64, r2: f64) -> Self {
        let factors = vec![
            vec![Factor::Cos, Factor::One],
            vec![Factor::Sin, Factor::One],
            vec![Factor::One, Factor::Cos],
            vec![Factor::One, Factor::Sin],
        ];
        ProductSurface {
            name: format!("torus:r1={r1},r2={r2}"),
            n: 2,
            m: 2,
            chart: ChartBox::new(vec![-PI; 2], vec![PI; 2], vec![true; 2]),
            closed: true,
            scale: vec![r1, r1, r2, r2],
            offset: vec![0.0; 4],
            factors,
        }
    }
}

impl Immersion for ProductSurface {
    fn dim(&self) -> usize {
        self.n
    }
    fn codim(&self) -> usize {
        self.m
    }
    fn chart(&self) -> &ChartBox {
        &self.chart
    }
    fn closed(&self) -> bool {
        self.closed
    }
    fn name(&self) -> String {
        self.name.clone()
    }

    fn jet(&self, u: &[f64]) -> Result<Jet> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: u.len(),
            });
        }
        let n = self.n;
        let dim = self.factors.len();
        let mut jet = Jet::zeros(n, dim);
        for k in 0..dim {
            let vals: Vec<(f64, f64, f64)> = (0..n).map(|a| self.factors[k][a].eval(u[a])).collect();
            let prod_except =
                |skip: &[usize]| -> f64 { (0..n).filter(|a| !skip.contains(a)).map(|a| vals[a].0).product() };
            let s = self.scale[k];
            jet.value[k] = self.offset[k] + s * prod_except(&[]);
            for a in 0..n {
                jet.d1[a][k] = s * vals[a].1 * prod_except(&[a]);
                jet.d2[a][a][k] = s * vals[a].2 * prod_except(&[a]);
                for b in a + 1..n {
                    let v = s * vals[a].1 * vals[b].1 * prod_except(&[a, b]);
                    jet.d2[a][b][k] = v;
                    jet.d2[b][a][k] = v;
                }
            }
        }
        Ok(jet)
    }
}

/// A Gaussian bump `amp · exp(−|x − c|²/(2w²))` added to every component
/// with weights `amp[α]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub amp: Vec<f64>,
    pub center: Vec<f64>,
    pub width: f64,
}

/// Height functions u: ℝⁿ → ℝᵐ with exact jets.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphProfile {
    /// `u = A x + ½ xᵀQ_α x + Σ bumps + b`.
    Smooth {
        a: DMatrix<f64>,
        b: Vec<f64>,
        quad: Vec<DMatrix<f64>>,
        bumps: Vec<Bump>,
    },
    /// `u = √(R² − |x|²)` (m = 1).
    SphereCap { radius: f64 },
}

/// Value, Du and D²u of a profile: `du[α][i]`, `ddu[α][i][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileJet {
    pub u: Vec<f64>,
    pub du: Vec<Vec<f64>>,
    pub ddu: Vec<Vec<Vec<f64>>>,
}

impl GraphProfile {
    pub fn affine(a: DMatrix<f64>, b: Vec<f64>) -> Self {
        GraphProfile::Smooth {
            a,
            b,
            quad: Vec::new(),
            bumps: Vec::new(),
        }
    }

    pub fn codim(&self) -> usize {
        match self {
            GraphProfile::Smooth { a, .. } => a.nrows(),
            GraphProfile::SphereCap { .. } => 1,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<ProfileJet> {
        let n = x.len();
        match self {
            GraphProfile::Smooth { a, b, quad, bumps } => {
                let m = a.nrows();
                if a.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: a.ncols(),
                        got: n,
                    });
                }
                let mut u: Vec<f64> = (0..m)
                    .map(|al| b.get(al).copied().unwrap_or(0.0) + (0..n).map(|i| a[(al, i)] * x[i]).sum::<f64>())
                    .collect();
                let mut du: Vec<Vec<f64>> = (0..m).map(|al| (0..n).map(|i| a[(al, i)]).collect()).collect();
                let mut ddu = vec![vec![vec![0.0; n]; n]; m];
                for (al, q) in quad.iter().enumerate().take(m) {
                    for i in 0..n {
                        for j in 0..n {
                            let qij = 0.5 * (q[(i, j)] + q[(j, i)]);
                            u[al] += 0.5 * x[i] * qij * x[j];
                            du[al][i] += qij * x[j];
                            ddu[al][i][j] += qij;
                        }
                    }
                }
                for bump in bumps {
                    let w2 = bump.width * bump.width;
                    let d: Vec<f64> = (0..n).map(|i| x[i] - bump.center[i]).collect();
                    let g = (-d.iter().map(|t| t * t).sum::<f64>() / (2.0 * w2)).exp();
                    for al in 0..m {
                        let c = bump.amp.get(al).copied().unwrap_or(0.0) * g;
                        u[al] += c;
                        for i in 0..n {
                            du[al][i] += -d[i] / w2 * c;
                            for j in 0..n {
                                let delta = if i == j { 1.0 } else { 0.0 };
                                ddu[al][i][j] += (-delta / w2 + d[i] * d[j] / (w2 * w2)) * c;
                            }
                        }
                    }
                }
                Ok(ProfileJet { u, du, ddu })
            }
            GraphProfile::SphereCap { radius } => {
                let r2: f64 = x.iter().map(|t| t * t).sum();
                let s2 = radius * radius - r2;
                if !(s2 > 0.0) {
                    return Err(Error::OutsideDomain { param: x.to_vec() });
                }
                let s = s2.sqrt();
                let du = vec![x.iter().map(|xi| -xi / s).collect()];
                let ddu = vec![(0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let delta = if i == j { 1.0 } else { 0.0 };
                                -delta / s - x[i] * x[j] / (s * s * s)
                            })
                            .collect()
                    })
                    .collect()];
                Ok(ProfileJet { u: vec![s], du, ddu })
            }
        }
    }
}

/// The graph `x ↦ (x, u(x))` over a parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphImmersion {
    pub profile: GraphProfile,
    chart: ChartBox,
    name: String,
}

impl GraphImmersion {
    pub fn new(profile: GraphProfile, chart: ChartBox, name: impl Into<String>) -> Self {
        GraphImmersion {
            profile,
            chart,
            name: name.into(),
        }
    }

    /// A single centred Gaussian bump of height `amp` (same in every component
    /// scaled by 1/α) plus an optional linear part.
    pub fn bump(n: usize, m: usize, amp: f64, width: f64, l: f64) -> Self {
        let profile = GraphProfile::Smooth {
            a: DMatrix::zeros(m, n),
            b: vec![0.0; m],
            quad: Vec::new(),
            bumps: vec![Bump {
                amp: (0..m).map(|a| amp / (a + 1) as f64).collect(),
                center: vec![0.0; n],
                width,
            }],
        };
        GraphImmersion::new(
            profile,
            ChartBox::cube(n, l),
            format!("graph-bump:n={n},m={m},amp={amp},width={width}"),
        )
    }

    /// Upper hemisphere of S²(R) over the disc; the chart is the square of
    /// half-width 0.6 R, inside the disc.
    pub fn sphere_cap(radius: f64) -> Self {
        GraphImmersion::new(
            GraphProfile::SphereCap { radius },
            ChartBox::cube(2, 0.6 * radius),
            format!("graph-cap:R={radius}"),
        )
    }
}

impl Immersion for GraphImmersion {
    fn dim(&self) -> usize {
        self.chart.dim()
    }
    fn codim(&self) -> usize {
        self.profile.codim()
    }
    fn chart(&self) -> &ChartBox {
        &self.chart
    }
    fn name(&self) -> String {
        self.name.clone()
    }

    fn jet(&self, x: &[f64]) -> Result<Jet> {
        let n = self.dim();
        let m = self.codim();
        let pj = self.profile.eval(x)?;
        let mut jet = Jet::zeros(n, n + m);
        for i in 0..n {
            jet.value[i] = x[i];
            jet.d1[i][i] = 1.0;
        }
        for al in 0..m {
            jet.value[n + al] = pj.u[al];
            for i in 0..n {
                jet.d1[i][n + al] = pj.du[al][i];
                for j in 0..n {
                    jet.d2[i][j][n + al] = pj.ddu[al][i][j];
                }
            }
        }
        Ok(jet)
    }
}

/// `Q ∘ X` for an ambient linear map Q (orthogonal for rigid motions).
pub struct Rotated<I> {
    pub inner: I,
    pub q: DMatrix<f64>,
}

impl<I: Immersion> Rotated<I> {
    pub fn new(inner: I, q: DMatrix<f64>) -> Self {
        assert_eq!(q.nrows(), inner.ambient());
        Rotated { inner, q }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.q.nrows())
            .map(|r| (0..v.len()).map(|c| self.q[(r, c)] * v[c]).sum())
            .collect()
    }
}

impl<I: Immersion> Immersion for Rotated<I> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn codim(&self) -> usize {
        self.inner.codim()
    }
    fn chart(&self) -> &ChartBox {
        self.inner.chart()
    }
    fn closed(&self) -> bool {
        self.inner.closed()
    }
    fn analytic(&self) -> bool {
        self.inner.analytic()
    }
    fn name(&self) -> String {
        format!("rotated({})", self.inner.name())
    }

    fn jet(&self, u: &[f64]) -> Result<Jet> {
        let j = self.inner.jet(u)?;
        Ok(Jet {
            value: self.apply(&j.value),
            d1: j.d1.iter().map(|v| self.apply(v)).collect(),
            d2: j.d2.iter().map(|r| r.iter().map(|v| self.apply(v)).collect()).collect(),
        })
    }
}

type PositionFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A user immersion given only by its position; jets come from 4th-order
/// central differences with step `chart.fd_step()`.
pub struct FdImmersion {
    n: usize,
    m: usize,
    chart: ChartBox,
    position: Box<PositionFn>,
    name: String,
}

impl FdImmersion {
    pub fn new(
        m: usize,
        chart: ChartBox,
        name: impl Into<String>,
        position: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        FdImmersion {
            n: chart.dim(),
            m,
            chart,
            position: Box::new(position),
            name: name.into(),
        }
    }
}

impl Immersion for FdImmersion {
    fn dim(&self) -> usize {
        self.n
    }
    fn codim(&self) -> usize {
        self.m
    }
    fn chart(&self) -> &ChartBox {
        &self.chart
    }
    fn analytic(&self) -> bool {
        false
    }
    fn name(&self) -> String {
        self.name.clone()
    }

    fn jet(&self, u: &[f64]) -> Result<Jet> {
        let f = |p: &[f64]| -> Result<Vec<f64>> { Ok((self.position)(p)) };
        fd::jet_o4(&f, u, self.chart.fd_step())
    }
}

fn parse_params(s: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("expected key=value, got {part:?}")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad number in {part:?}")))?;
        out.push((k.trim().to_string(), v));
    }
    Ok(out)
}

fn take(params: &[(String, f64)], key: &str) -> Option<f64> {
    params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

fn as_dim(v: f64, key: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v <= 16.0 {
        Ok(v as usize)
    } else {
        Err(Error::invalid(format!("{key} must be a small positive integer")))
    }
}

/// Builds a catalog surface from `"<kind>:<key>=<value>,…"`.
pub fn parse_surface(spec: &str) -> Result<Box<dyn Immersion>> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params = parse_params(rest)?;
    let known: &[&str] = match kind {
        "plane" => &["n", "m", "L"],
        "sphere" => &["n", "R", "cz"],
        "sphere-area" => &["R"],
        "cylinder" => &["k", "n", "L"],
        "graph-bump" => &["n", "m", "amp", "width", "L"],
        "graph-cap" => &["R"],
        "torus" => &["r1", "r2"],
        _ => return Err(Error::invalid(format!("unknown surface kind {kind:?}"))),
    };
    if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(Error::invalid(format!("unknown key {k:?} for {kind}")));
    }
    let dim =
        |key: &str, default: usize| -> Result<usize> { take(&params, key).map_or(Ok(default), |v| as_dim(v, key)) };
    Ok(match kind {
        "plane" => Box::new(ProductSurface::plane(
            dim("n", 2)?,
            dim("m", 1)?,
            take(&params, "L").unwrap_or(3.0),
        )),
        "sphere" => {
            let n = dim("n", 2)?;
            let r = take(&params, "R").unwrap_or((2.0 * n as f64).sqrt());
            let mut center = vec![0.0; n + 1];
            center[n] = take(&params, "cz").unwrap_or(0.0);
            Box::new(ProductSurface::sphere(n, r, center))
        }
        "sphere-area" => Box::new(ProductSurface::area_sphere(take(&params, "R").unwrap_or(2.0))),
        "cylinder" => {
            let k = dim("k", 1)?;
            let n = dim("n", 2)?;
            if k > n {
                return Err(Error::invalid("cylinder needs k <= n"));
            }
            Box::new(ProductSurface::cylinder(k, n, take(&params, "L").unwrap_or(3.0)))
        }
        "graph-bump" => Box::new(GraphImmersion::bump(
            dim("n", 2)?,
            dim("m", 1)?,
            take(&params, "amp").unwrap_or(0.3),
            take(&params, "width").unwrap_or(1.0),
            take(&params, "L").unwrap_or(3.0),
        )),
        "graph-cap" => Box::new(GraphImmersion::sphere_cap(take(&params, "R").unwrap_or(2.0))),
        "torus" => Box::new(ProductSurface::clifford_torus(
            take(&params, "r1").unwrap_or(SQRT_2),
            take(&params, "r2").unwrap_or(SQRT_2),
        )),
        _ => unreachable!(),
    })
}
