//! The grouped quadratic form in `h_{α,ij}`.
//!
//! Indices are zero-based: tangent `i, j ∈ [0, n)`, normal `α ∈ [0, m)`,
//! and the first `p = min(n, m)` normal and tangent directions are paired
//! through the Jordan-angle tangents `λ_0..λ_{p-1}`. Writing `h_{j,ij}` uses
//! `j < p` both as a normal and as a tangent index.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by [`GroupSample::new`].
const SYMMETRY_TOL: f64 = 1e-12;

/// Jordan-angle tangents and second fundamental form coefficients at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    n: usize,
    m: usize,
    lambda: Vec<f64>,
    /// `h[α·n·n + i·n + j]`.
    h: Vec<f64>,
}

impl GroupSample {
    pub fn new(n: usize, m: usize, lambda: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::invalid("n and m must be positive"));
        }
        let p = n.min(m);
        if lambda.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: lambda.len(),
            });
        }
        if h.len() != m * n * n {
            return Err(Error::DimensionMismatch {
                expected: m * n * n,
                got: h.len(),
            });
        }
        if lambda.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::invalid("λ must be finite and non-negative"));
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("h must be finite"));
        }
        let scale = h.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        for a in 0..m {
            for i in 0..n {
                for j in 0..i {
                    if (h[a * n * n + i * n + j] - h[a * n * n + j * n + i]).abs() > SYMMETRY_TOL * scale {
                        return Err(Error::invalid("h must be symmetric in its tangent indices"));
                    }
                }
            }
        }
        Ok(GroupSample { n, m, lambda, h })
    }

    /// Builds `h` from its values on `i ≤ j`, mirrored to `i > j`.
    pub fn from_fn(
        n: usize,
        m: usize,
        lambda: Vec<f64>,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut h = vec![0.0; m * n * n];
        for a in 0..m {
            for i in 0..n {
                for j in i..n {
                    let x = f(a, i, j);
                    h[a * n * n + i * n + j] = x;
                    h[a * n * n + j * n + i] = x;
                }
            }
        }
        GroupSample::new(n, m, lambda, h)
    }

    pub fn zeros(n: usize, m: usize, lambda: Vec<f64>) -> Result<Self> {
        GroupSample::from_fn(n, m, lambda, |_, _, _| 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn h_values(&self) -> &[f64] {
        &self.h
    }

    pub fn h(&self, alpha: usize, i: usize, j: usize) -> f64 {
        self.h[alpha * self.n * self.n + i * self.n + j]
    }

    /// Sets `h_{α,ij} = h_{α,ji} = x`.
    pub fn set(&mut self, alpha: usize, i: usize, j: usize, x: f64) {
        let n = self.n;
        self.h[alpha * n * n + i * n + j] = x;
        self.h[alpha * n * n + j * n + i] = x;
    }

    /// `v = ∏ √(1 + λ_j²)`.
    pub fn v(&self) -> f64 {
        self.lambda.iter().map(|l| (1.0 + l * l).sqrt()).product()
    }

    pub fn is_subcritical(&self) -> bool {
        self.v() < 3.0
    }

    /// `|B|² = Σ h_{α,ij}²`.
    pub fn b_norm_sq(&self) -> f64 {
        self.h.iter().map(|x| x * x).sum()
    }

    /// `Σ_j λ_j h_{j,ij}` for a tangent index `i`.
    fn lambda_trace(&self, i: usize) -> f64 {
        (0..self.p()).map(|j| self.lambda[j] * self.h(j, i, j)).sum()
    }

    fn c_term(&self, i: usize, c1: f64) -> f64 {
        let s = self.lambda_trace(i);
        c1 * s * s
    }
}

/// `|∇ log v|² = Σ_i (Σ_j λ_j h_{j,ij})²`.
pub fn grad_log_v_sq(s: &GroupSample) -> f64 {
    (0..s.n()).map(|i| s.lambda_trace(i).powi(2)).sum()
}

/// `L(log v) = |B|² + Σ λ_j² h_{j,ij}² + Σ_{i, j≠k} λ_jλ_k h_{k,ij}h_{j,ik}`
/// on a self-shrinker, through the composition formula.
pub fn l_log_v(s: &GroupSample) -> f64 {
    let (n, p) = (s.n(), s.p());
    let lam = s.lambda();
    let mut total = s.b_norm_sq();
    for i in 0..n {
        for j in 0..p {
            total += lam[j] * lam[j] * s.h(j, i, j).powi(2);
            for k in 0..p {
                if k != j {
                    total += lam[j] * lam[k] * s.h(k, i, j) * s.h(j, i, k);
                }
            }
        }
    }
    total
}

/// `L(log v) + C₁|∇log v|²` evaluated directly.
pub fn la3_total(s: &GroupSample, c1: f64) -> f64 {
    l_log_v(s) + c1 * grad_log_v_sq(s)
}

/// The groups of the decomposition. `rest` collects every `h_{α,ij}²` that
/// no group touches: `α ≥ p`, or both tangent indices `≥ p`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTerms {
    pub rest: f64,
    /// `I_i` for `p ≤ i < n`.
    pub one: Vec<(usize, f64)>,
    /// `II_{ijk}` for `p ≤ i < n`, `j < k < p`.
    pub two: Vec<([usize; 3], f64)>,
    /// `III_{ijk}` for `i < j < k < p`.
    pub three: Vec<([usize; 3], f64)>,
    /// `IV_i` for `i < p`.
    pub four: Vec<(usize, f64)>,
    pub grouped_total: f64,
    pub direct_total: f64,
}

impl GroupTerms {
    pub fn regrouping_defect(&self) -> f64 {
        (self.grouped_total - self.direct_total).abs()
    }
}

fn term_one(s: &GroupSample, i: usize, c1: f64) -> f64 {
    let lam = s.lambda();
    (0..s.p())
        .map(|j| (2.0 + lam[j] * lam[j]) * s.h(j, i, j).powi(2))
        .sum::<f64>()
        + s.c_term(i, c1)
}

fn term_two(s: &GroupSample, i: usize, j: usize, k: usize) -> f64 {
    let lam = s.lambda();
    let (a, b) = (s.h(k, i, j), s.h(j, i, k));
    2.0 * a * a + 2.0 * b * b + 2.0 * lam[j] * lam[k] * a * b
}

fn term_three(s: &GroupSample, i: usize, j: usize, k: usize) -> f64 {
    let lam = s.lambda();
    let (x, y, z) = (s.h(i, j, k), s.h(j, k, i), s.h(k, i, j));
    2.0 * (x * x + y * y + z * z)
        + 2.0 * lam[i] * lam[j] * x * y
        + 2.0 * lam[j] * lam[k] * y * z
        + 2.0 * lam[k] * lam[i] * z * x
}

fn term_four(s: &GroupSample, i: usize, c1: f64) -> f64 {
    let lam = s.lambda();
    let mut total = (1.0 + lam[i] * lam[i]) * s.h(i, i, i).powi(2);
    for j in (0..s.p()).filter(|&j| j != i) {
        let (hj, hi) = (s.h(j, i, j), s.h(i, j, j));
        total += (2.0 + lam[j] * lam[j]) * hj * hj + hi * hi + 2.0 * lam[i] * lam[j] * hi * hj;
    }
    total + s.c_term(i, c1)
}

fn rest(s: &GroupSample) -> f64 {
    let (n, m, p) = (s.n(), s.m(), s.p());
    let mut total = 0.0;
    for a in 0..m {
        for i in 0..n {
            for j in 0..n {
                if a >= p || (i >= p && j >= p) {
                    total += s.h(a, i, j).powi(2);
                }
            }
        }
    }
    total
}

fn pairs(p: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..p).flat_map(move |j| (j + 1..p).map(move |k| (j, k)))
}

fn triples(p: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..p).flat_map(move |i| (i + 1..p).flat_map(move |j| (j + 1..p).map(move |k| [i, j, k])))
}

/// Evaluates every group and both totals.
///
/// `I` and `II` are absent when `p = n` and `III` when `p ≤ 2`; presence
/// follows from the index ranges alone.
pub fn group_terms(s: &GroupSample, c1: f64) -> GroupTerms {
    let (n, p) = (s.n(), s.p());
    let one: Vec<(usize, f64)> = (p..n).map(|i| (i, term_one(s, i, c1))).collect();
    let two: Vec<([usize; 3], f64)> = (p..n)
        .flat_map(|i| pairs(p).map(move |(j, k)| [i, j, k]))
        .map(|[i, j, k]| ([i, j, k], term_two(s, i, j, k)))
        .collect();
    let three: Vec<([usize; 3], f64)> = triples(p)
        .map(|[i, j, k]| ([i, j, k], term_three(s, i, j, k)))
        .collect();
    let four: Vec<(usize, f64)> = (0..p).map(|i| (i, term_four(s, i, c1))).collect();
    let rest = rest(s);
    let grouped_total = rest
        + one.iter().map(|x| x.1).sum::<f64>()
        + two.iter().map(|x| x.1).sum::<f64>()
        + three.iter().map(|x| x.1).sum::<f64>()
        + four.iter().map(|x| x.1).sum::<f64>();
    GroupTerms {
        rest,
        one,
        two,
        three,
        four,
        grouped_total,
        direct_total: la3_total(s, c1),
    }
}

/// Kind of group, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    Rest,
    One,
    Two,
    Three,
    Four,
}

/// Margins of the four group bounds:
/// `I_i − 2Σ_j h_{j,ij}²`, `II − (3−v)(h_{k,ij}² + h_{j,ik}²)`,
/// `III − (3−v)(h_{i,jk}² + h_{j,ki}² + h_{k,ij}²)`,
/// `IV_i − ½(3−v)(h_{i,ii}² + Σ_{j≠i}(h_{i,jj}² + 2h_{j,ij}²))`,
/// plus `rest − ½(3−v)·rest`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMargins {
    pub v: f64,
    pub rest: f64,
    pub one: Vec<(usize, f64)>,
    pub two: Vec<([usize; 3], f64)>,
    pub three: Vec<([usize; 3], f64)>,
    pub four: Vec<(usize, f64)>,
}

impl GroupMargins {
    /// The smallest margin and where it occurs.
    pub fn worst(&self) -> (GroupKind, [usize; 3], f64) {
        let mut w = (GroupKind::Rest, [0; 3], self.rest);
        let mut take = |kind, idx, x: f64| {
            if x < w.2 {
                w = (kind, idx, x);
            }
        };
        for &(i, x) in &self.one {
            take(GroupKind::One, [i, 0, 0], x);
        }
        for &(idx, x) in &self.two {
            take(GroupKind::Two, idx, x);
        }
        for &(idx, x) in &self.three {
            take(GroupKind::Three, idx, x);
        }
        for &(i, x) in &self.four {
            take(GroupKind::Four, [i, 0, 0], x);
        }
        w
    }

    pub fn min(&self) -> f64 {
        self.worst().2
    }

    pub fn all_hold(&self, tol: f64) -> bool {
        self.min() >= -tol
    }
}

/// Margins of the group bounds on a subcritical sample.
pub fn group_bounds_check(s: &GroupSample, c1: f64) -> Result<GroupMargins> {
    let v = s.v();
    if !(v < 3.0) {
        return Err(Error::NotSubcritical { v });
    }
    let (n, p) = (s.n(), s.p());
    let gap = 3.0 - v;
    let terms = group_terms(s, c1);
    let one = terms
        .one
        .iter()
        .map(|&(i, x)| (i, x - 2.0 * (0..p).map(|j| s.h(j, i, j).powi(2)).sum::<f64>()))
        .collect();
    let two = terms
        .two
        .iter()
        .map(|&([i, j, k], x)| ([i, j, k], x - gap * (s.h(k, i, j).powi(2) + s.h(j, i, k).powi(2))))
        .collect();
    let three = terms
        .three
        .iter()
        .map(|&([i, j, k], x)| {
            let share = s.h(i, j, k).powi(2) + s.h(j, k, i).powi(2) + s.h(k, i, j).powi(2);
            ([i, j, k], x - gap * share)
        })
        .collect();
    let four = terms
        .four
        .iter()
        .map(|&(i, x)| (i, x - 0.5 * gap * iv_share(s, i)))
        .collect();
    debug_assert!(n >= p);
    Ok(GroupMargins {
        v,
        rest: terms.rest * (1.0 - 0.5 * gap),
        one,
        two,
        three,
        four,
    })
}

/// `h_{i,ii}² + Σ_{j≠i}(h_{i,jj}² + 2h_{j,ij}²)`.
fn iv_share(s: &GroupSample, i: usize) -> f64 {
    s.h(i, i, i).powi(2)
        + (0..s.p())
            .filter(|&j| j != i)
            .map(|j| s.h(i, j, j).powi(2) + 2.0 * s.h(j, i, j).powi(2))
            .sum::<f64>()
}

/// Intermediate quantities of the `IV_i` estimate, for counterexample
/// dumps: the exceptional index `k` (smallest `b_k`),
/// `s = Σ_{j≠k} λ_j h_{j,ij}`, `a` and `b = 2τ + λ_k² − τ⁻¹λ_i²λ_k²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IvInternals {
    pub i: usize,
    pub k: usize,
    pub s: f64,
    pub a: f64,
    pub b: f64,
}

/// `None` when `v = 1` (τ = 0) or `p < 2`.
pub fn iv_internals(s: &GroupSample, i: usize) -> Option<IvInternals> {
    let p = s.p();
    let tau = 0.5 * (s.v() - 1.0);
    if p < 2 || i >= p || !(tau > 0.0) {
        return None;
    }
    let lam = s.lambda();
    let li2 = lam[i] * lam[i];
    let coef = |j: usize| 2.0 * tau + lam[j] * lam[j] - li2 * lam[j] * lam[j] / tau;
    let k = (0..p)
        .filter(|&j| j != i)
        .min_by(|&x, &y| coef(x).total_cmp(&coef(y)))?;
    let sum_s = (0..p).filter(|&j| j != k).map(|j| lam[j] * s.h(j, i, j)).sum();
    let a = li2 / (tau + li2)
        + (0..p)
            .filter(|&j| j != i && j != k)
            .map(|j| lam[j] * lam[j] / coef(j))
            .sum::<f64>();
    Some(IvInternals {
        i,
        k,
        s: sum_s,
        a,
        b: coef(k),
    })
}

/// `L(log v) + C₁|∇log v|²` against `½(3 − v)|B|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterCheck {
    pub v: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

pub fn master_inequality_check(s: &GroupSample, c1: f64) -> Result<MasterCheck> {
    let v = s.v();
    if !(v < 3.0) {
        return Err(Error::NotSubcritical { v });
    }
    let lhs = la3_total(s, c1);
    let rhs = 0.5 * (3.0 - v) * s.b_norm_sq();
    Ok(MasterCheck {
        v,
        lhs,
        rhs,
        margin: lhs - rhs,
    })
}

/// `h = v^{C₁}` and its drift Laplacian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HTransform {
    pub h: f64,
    /// `C₁h(L log v + C₁|∇log v|²)`.
    pub lh: f64,
    /// `h′ L log v + h″ |∇log v|²` with `h′ = C₁h`, `h″ = C₁²h`.
    pub chain_rule: f64,
    /// `½C₁h(3 − v)|B|²` when `|B|²` is supplied.
    pub bound: Option<f64>,
}

impl HTransform {
    pub fn chain_rule_defect(&self) -> f64 {
        (self.lh - self.chain_rule).abs() / self.lh.abs().max(1.0)
    }
}

pub fn h_transform_identity(log_v: f64, l_log_v: f64, grad_log_v_sq: f64, b_sq: Option<f64>, c1: f64) -> HTransform {
    let h = (c1 * log_v).exp();
    let (d1, d2) = (c1 * h, c1 * c1 * h);
    HTransform {
        h,
        lh: c1 * h * (l_log_v + c1 * grad_log_v_sq),
        chain_rule: d1 * l_log_v + d2 * grad_log_v_sq,
        bound: b_sq.map(|b| 0.5 * c1 * h * (3.0 - log_v.exp()) * b),
    }
}
