//! Randomized and adversarial search for violations of the master
//! inequality, with an exact rational recheck of every candidate.
//!
//! The master margin `L(log v) + C₁|∇log v|² − ½(3 − v)|B|²` is a quadratic
//! form in the independent coefficients `h_{α,ij}` (`i ≤ j`). The groups
//! use pairwise disjoint sets of coefficients, so the form is block
//! diagonal and its worst value on `|B|² = 1` is the smallest eigenvalue of
//! a handful of small blocks. [`worst_case_ratio`] computes exactly that,
//! which turns the search over `h` into a search over `λ` alone.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_rational::BigRational;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::{Signed, Zero};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::groups::{GroupKind, GroupSample};
use crate::error::{Error, Result};

/// Shape of random `h` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HPattern {
    /// I.i.d. standard normal entries on `i ≤ j`.
    Gaussian,
    /// `h_α = c_α u uᵀ` for one random `u`.
    LowRank,
    /// Only the `h_{j,ij}` entries (`j < p`) are non-zero.
    TraceType,
    /// Only `h_{i,jk}` with `i, j, k < p` pairwise distinct are non-zero.
    Triples,
    /// Gaussian entries, each kept with probability ¼.
    Sparse,
}

impl HPattern {
    pub const ALL: [HPattern; 5] = [
        HPattern::Gaussian,
        HPattern::LowRank,
        HPattern::TraceType,
        HPattern::Triples,
        HPattern::Sparse,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            HPattern::Gaussian => "gaussian",
            HPattern::LowRank => "low-rank",
            HPattern::TraceType => "trace-type",
            HPattern::Triples => "triples",
            HPattern::Sparse => "sparse",
        }
    }
}

/// Random `λ ∈ [0,∞)^p` with `v < 3`.
///
/// `log v` is split between the angles with exponential weights; with
/// `v_target = None` it is uniform in `[0, log 3)`. One angle is set to
/// zero a quarter of the time so that degenerate spectra are covered.
pub fn sample_lambda<R: Rng + ?Sized>(rng: &mut R, p: usize, v_target: Option<f64>) -> Vec<f64> {
    let log_v = match v_target {
        Some(v) => v.ln(),
        None => rng.random::<f64>() * 3.0f64.ln(),
    };
    let mut w: Vec<f64> = (0..p).map(|_| Exp1.sample(rng)).collect();
    if p >= 2 && rng.random::<f64>() < 0.25 {
        let z = rng.random_range(0..p);
        w[z] = 0.0;
    }
    let total: f64 = w.iter().sum();
    let mut lam: Vec<f64> = w
        .iter()
        .map(|wj| (2.0 * wj / total * log_v).exp_m1().max(0.0).sqrt())
        .collect();
    // Rounding can land exactly on v = 3 for targets just below it.
    while lam.iter().map(|l| (1.0 + l * l).sqrt()).product::<f64>() >= 3.0 {
        for l in lam.iter_mut() {
            *l *= 1.0 - 1e-12;
        }
    }
    lam
}

/// Random subcritical sample with the given `h` pattern.
pub fn sample_subcritical<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    pattern: HPattern,
    v_target: Option<f64>,
) -> Result<GroupSample> {
    let p = n.min(m);
    if let Some(v) = v_target {
        if !(1.0..3.0).contains(&v) {
            return Err(Error::NotSubcritical { v });
        }
    }
    let lambda = sample_lambda(rng, p, v_target);
    let mut normal = || -> f64 { StandardNormal.sample(rng) };
    let mut s = GroupSample::zeros(n, m, lambda)?;
    match pattern {
        HPattern::Gaussian | HPattern::Sparse => {
            for a in 0..m {
                for i in 0..n {
                    for j in i..n {
                        s.set(a, i, j, normal());
                    }
                }
            }
            if pattern == HPattern::Sparse {
                for a in 0..m {
                    for i in 0..n {
                        for j in i..n {
                            if rng.random::<f64>() >= 0.25 {
                                s.set(a, i, j, 0.0);
                            }
                        }
                    }
                }
            }
        }
        HPattern::LowRank => {
            let u: Vec<f64> = (0..n).map(|_| normal()).collect();
            for a in 0..m {
                let c = normal();
                for i in 0..n {
                    for j in i..n {
                        s.set(a, i, j, c * u[i] * u[j]);
                    }
                }
            }
        }
        HPattern::TraceType => {
            for j in 0..p {
                for i in 0..n {
                    s.set(j, i, j, normal());
                }
            }
        }
        HPattern::Triples => {
            for i in 0..p {
                for j in 0..p {
                    for k in j + 1..p {
                        if i != j && i != k {
                            s.set(i, j, k, normal());
                        }
                    }
                }
            }
        }
    }
    Ok(s)
}

/// A coefficient `h_{α,ij}` with `i ≤ j`.
type Var = (usize, usize, usize);

struct Block {
    kind: GroupKind,
    vars: Vec<Var>,
    matrix: DMatrix<f64>,
}

fn weight(v: &Var) -> f64 {
    if v.1 == v.2 {
        1.0
    } else {
        2.0
    }
}

fn ordered(a: usize, i: usize, j: usize) -> Var {
    (a, i.min(j), i.max(j))
}

/// The master-margin blocks for given `λ`, in the coefficients of each
/// group (`rest` excluded; its ratio is `(v − 1)/2`).
fn blocks(lam: &[f64], n: usize, c1: f64, v: f64) -> Vec<Block> {
    let p = lam.len();
    let c = 0.5 * (3.0 - v);
    let mut out = Vec::new();
    for i in p..n {
        let vars: Vec<Var> = (0..p).map(|j| ordered(j, i, j)).collect();
        let matrix = DMatrix::from_fn(p, p, |a, b| {
            let diag = if a == b { 2.0 + lam[a] * lam[a] - 2.0 * c } else { 0.0 };
            diag + c1 * lam[a] * lam[b]
        });
        out.push(Block {
            kind: GroupKind::One,
            vars,
            matrix,
        });
        for j in 0..p {
            for k in j + 1..p {
                let off = lam[j] * lam[k];
                out.push(Block {
                    kind: GroupKind::Two,
                    vars: vec![ordered(k, i, j), ordered(j, i, k)],
                    matrix: DMatrix::from_row_slice(2, 2, &[2.0 - 2.0 * c, off, off, 2.0 - 2.0 * c]),
                });
            }
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            for k in j + 1..p {
                let d = 2.0 - 2.0 * c;
                let (xy, yz, zx) = (lam[i] * lam[j], lam[j] * lam[k], lam[k] * lam[i]);
                out.push(Block {
                    kind: GroupKind::Three,
                    vars: vec![ordered(i, j, k), ordered(j, k, i), ordered(k, i, j)],
                    matrix: DMatrix::from_row_slice(3, 3, &[d, xy, zx, xy, d, yz, zx, yz, d]),
                });
            }
        }
    }
    for i in 0..p {
        let others: Vec<usize> = (0..p).filter(|&j| j != i).collect();
        let q = others.len();
        let size = 1 + 2 * q;
        let mut vars = vec![(i, i, i)];
        vars.extend(others.iter().map(|&j| (i, j, j)));
        vars.extend(others.iter().map(|&j| ordered(j, i, j)));
        let mut mat = DMatrix::zeros(size, size);
        let mut lin = vec![0.0; size];
        mat[(0, 0)] = 1.0 + lam[i] * lam[i] - c;
        lin[0] = lam[i];
        for (t, &j) in others.iter().enumerate() {
            let (y, z) = (1 + t, 1 + q + t);
            mat[(y, y)] = 1.0 - c;
            mat[(z, z)] = 2.0 + lam[j] * lam[j] - 2.0 * c;
            mat[(y, z)] = lam[i] * lam[j];
            mat[(z, y)] = lam[i] * lam[j];
            lin[z] = lam[j];
        }
        for a in 0..size {
            for b in 0..size {
                mat[(a, b)] += c1 * lin[a] * lin[b];
            }
        }
        out.push(Block {
            kind: GroupKind::Four,
            vars,
            matrix: mat,
        });
    }
    out
}

/// Worst value of the master margin over `|B|² = 1` for fixed `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    /// `min margin / |B|²`.
    pub ratio: f64,
    pub kind: GroupKind,
    /// A sample attaining `ratio` with `|B|² = 1`.
    pub sample: GroupSample,
}

/// Minimizes the master margin over all `h` with `|B|² = 1`, block by block.
pub fn worst_case_ratio(lambda: &[f64], n: usize, m: usize, c1: f64) -> Result<WorstCase> {
    let p = n.min(m);
    if lambda.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: lambda.len(),
        });
    }
    let zero = GroupSample::zeros(n, m, lambda.to_vec())?;
    let v = zero.v();
    if !(v < 3.0) {
        return Err(Error::NotSubcritical { v });
    }
    type Best = (f64, GroupKind, Vec<(Var, f64)>);
    let mut best: Option<Best> = None;
    if m > p || n > p {
        // A lone rest coefficient; any one will do.
        let var = if m > p { (p, 0, 0) } else { (0, p, p) };
        best = Some((0.5 * (v - 1.0), GroupKind::Rest, vec![(var, 1.0)]));
    }
    for b in blocks(lambda, n, c1, v) {
        let scale: Vec<f64> = b.vars.iter().map(|x| 1.0 / weight(x).sqrt()).collect();
        let k = b.vars.len();
        let scaled = DMatrix::from_fn(k, k, |r, c| b.matrix[(r, c)] * scale[r] * scale[c]);
        let eig = SymmetricEigen::new(scaled);
        let (idx, val) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, v)| (i, *v))
            .expect("non-empty block");
        if best.as_ref().is_none_or(|bst| val < bst.0) {
            let coeffs = b
                .vars
                .iter()
                .enumerate()
                .map(|(r, var)| (*var, eig.eigenvectors[(r, idx)] * scale[r]))
                .collect();
            best = Some((val, b.kind, coeffs));
        }
    }
    let (ratio, kind, coeffs) = best.expect("IV blocks always exist");
    let mut sample = zero;
    for ((a, i, j), x) in coeffs {
        sample.set(a, i, j, x);
    }
    Ok(WorstCase { ratio, kind, sample })
}

/// Minimizes the Rayleigh quotient `margin / |B|²` over `h` from `start`.
///
/// Each iteration takes a central-difference gradient and moves to the best
/// point of the span of the current point, the gradient and the previous
/// step (a Rayleigh–Ritz step, so no step length is tuned). Returns the
/// final sample, normalized to `|B|² = 1`, and its ratio.
pub fn h_space_descent(start: &GroupSample, c1: f64, iterations: usize) -> Result<(GroupSample, f64)> {
    let (n, m) = (start.n(), start.m());
    let vars: Vec<Var> = (0..m)
        .flat_map(|a| (0..n).flat_map(move |i| (i..n).map(move |j| (a, i, j))))
        .collect();
    let w: Vec<f64> = vars.iter().map(weight).collect();
    let build = |x: &[f64]| -> Result<GroupSample> {
        let mut s = GroupSample::zeros(n, m, start.lambda().to_vec())?;
        for (var, val) in vars.iter().zip(x) {
            s.set(var.0, var.1, var.2, *val);
        }
        Ok(s)
    };
    let form = |x: &[f64]| -> Result<f64> {
        let s = build(x)?;
        let v = s.v();
        Ok(super::groups::la3_total(&s, c1) - 0.5 * (3.0 - v) * s.b_norm_sq())
    };
    let inner = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).zip(&w).map(|((a, b), c)| a * b * c).sum() };
    let mut x: Vec<f64> = vars.iter().map(|&(a, i, j)| start.h(a, i, j)).collect();
    if x.iter().all(|xi| *xi == 0.0) {
        x[0] = 1.0;
    }
    let nx = inner(&x, &x).sqrt();
    x.iter_mut().for_each(|xi| *xi /= nx);
    let mut f = form(&x)?;
    let mut prev: Option<Vec<f64>> = None;
    let fd = 1e-6;
    for _ in 0..iterations {
        let mut grad = vec![0.0; x.len()];
        for q in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[q] += fd;
            xm[q] -= fd;
            let rp = form(&xp)? / inner(&xp, &xp);
            let rm = form(&xm)? / inner(&xm, &xm);
            // Gradient in the |B|-metric.
            grad[q] = (rp - rm) / (2.0 * fd) / w[q];
        }
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut candidates = vec![grad];
        if let Some(p) = &prev {
            candidates.push(x.iter().zip(p).map(|(a, b)| a - b).collect());
        }
        for mut c in candidates {
            for b in &basis {
                let d = inner(&c, b);
                c.iter_mut().zip(b).for_each(|(ci, bi)| *ci -= d * bi);
            }
            let nc = inner(&c, &c).sqrt();
            if nc > 1e-12 {
                c.iter_mut().for_each(|ci| *ci /= nc);
                basis.push(c);
            }
        }
        if basis.len() == 1 {
            break;
        }
        let k = basis.len();
        let diag: Vec<f64> = basis.iter().map(|b| form(b)).collect::<Result<_>>()?;
        let mut proj = DMatrix::zeros(k, k);
        for a in 0..k {
            proj[(a, a)] = diag[a];
            for b in a + 1..k {
                let sum: Vec<f64> = basis[a].iter().zip(&basis[b]).map(|(p, q)| p + q).collect();
                let x_ab = 0.5 * (form(&sum)? - diag[a] - diag[b]);
                proj[(a, b)] = x_ab;
                proj[(b, a)] = x_ab;
            }
        }
        let eig = SymmetricEigen::new(proj);
        let (idx, val) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|p, q| p.1.total_cmp(q.1))
            .map(|(i, v)| (i, *v))
            .expect("non-empty");
        if !(val < f - 1e-15 * f.abs().max(1.0)) {
            break;
        }
        let mut next = vec![0.0; x.len()];
        for (a, b) in basis.iter().enumerate() {
            let c = eig.eigenvectors[(a, idx)];
            next.iter_mut().zip(b).for_each(|(ni, bi)| *ni += c * bi);
        }
        let nn = inner(&next, &next).sqrt();
        next.iter_mut().for_each(|ni| *ni /= nn);
        prev = Some(core::mem::replace(&mut x, next));
        f = form(&x)?;
    }
    Ok((build(&x)?, f))
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

/// Sign of the master margin computed in exact rational arithmetic from
/// the binary values of `λ`, `h` and `C₁`. `v` only enters through
/// `v² = ∏(1 + λ_j²)`, so no rounding is involved.
pub fn exact_master_margin_sign(s: &GroupSample, c1: f64) -> Ordering {
    let (n, p) = (s.n(), s.p());
    let lam: Vec<BigRational> = s.lambda().iter().map(|&l| rational(l)).collect();
    let h = |a, i, j| rational(s.h(a, i, j));
    let c1 = rational(c1);
    let b: BigRational = s.h_values().iter().map(|&x| rational(x) * rational(x)).sum();
    let mut total = b.clone();
    for i in 0..n {
        let mut trace = BigRational::zero();
        for j in 0..p {
            let hj = h(j, i, j);
            total += &lam[j] * &lam[j] * &hj * &hj;
            trace += &lam[j] * &hj;
            for k in 0..p {
                if k != j {
                    total += &lam[j] * &lam[k] * h(k, i, j) * h(j, i, k);
                }
            }
        }
        total += &c1 * &trace * &trace;
    }
    // margin = T − (3/2)B + (v/2)B; compare (v/2)B with D = (3/2)B − T.
    let three_halves = BigRational::new(BigInt::from(3), BigInt::from(2));
    let d = three_halves * &b - total;
    if !d.is_positive() {
        // (v/2)B ≥ 0 ≥ D, with equality only when B = D = 0.
        return if d.is_zero() && b.is_zero() {
            Ordering::Equal
        } else {
            Ordering::Greater
        };
    }
    let v_sq: BigRational = lam
        .iter()
        .map(|l| BigRational::from_integer(BigInt::from(1)) + l * l)
        .product();
    let four = BigRational::from_integer(BigInt::from(4));
    (v_sq * &b * &b).cmp(&(four * &d * &d))
}

pub fn exact_master_margin_nonnegative(s: &GroupSample, c1: f64) -> bool {
    exact_master_margin_sign(s, c1) != Ordering::Less
}

/// Outcome of [`adversarial_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialReport {
    pub restarts: usize,
    pub evaluations: usize,
    /// Smallest worst-case ratio found.
    pub worst_ratio: f64,
    pub worst_sample: Option<GroupSample>,
    /// Restarts whose float ratio fell below `-tol`.
    pub candidates: usize,
    /// Candidates whose sample has a negative margin in exact arithmetic.
    pub confirmed: Vec<GroupSample>,
}

/// Simulated annealing followed by compass search on `λ ↦ worst_case_ratio`,
/// from `restarts` random starts with `n, m ≤ 5` and `p ≤ 4`.
pub fn adversarial_search<R: Rng + ?Sized>(
    rng: &mut R,
    restarts: usize,
    c1: f64,
    tol: f64,
) -> Result<AdversarialReport> {
    let mut rep = AdversarialReport {
        restarts,
        evaluations: 0,
        worst_ratio: f64::INFINITY,
        worst_sample: None,
        candidates: 0,
        confirmed: Vec::new(),
    };
    for _ in 0..restarts {
        let (n, m) = loop {
            let n = rng.random_range(1..=5);
            let m = rng.random_range(1..=5);
            if n.min(m) <= 4 {
                break (n, m);
            }
        };
        let p = n.min(m);
        let mut evals = 0usize;
        let mut objective = |lam: &[f64]| -> Result<f64> {
            evals += 1;
            if lam.iter().any(|l| *l < 0.0) || lam.iter().map(|l| (1.0 + l * l).sqrt()).product::<f64>() >= 3.0 {
                return Ok(f64::INFINITY);
            }
            Ok(worst_case_ratio(lam, n, m, c1)?.ratio)
        };
        let mut lam = sample_lambda(rng, p, None);
        let mut f = objective(&lam)?;
        // Annealing: random moves, uphill accepted with Metropolis odds.
        let mut temp = 0.05;
        for _ in 0..40 {
            let trial: Vec<f64> = lam
                .iter()
                .map(|l| (l + 0.2 * rng.random_range(-1.0..1.0)).max(0.0))
                .collect();
            let ft = objective(&trial)?;
            if ft.is_finite() && (ft < f || rng.random::<f64>() < ((f - ft) / temp).exp()) {
                lam = trial;
                f = ft;
            }
            temp *= 0.85;
        }
        // Compass search.
        let mut step = 0.1;
        while step > 1e-9 {
            let mut moved = false;
            for q in 0..p {
                for dir in [1.0, -1.0] {
                    let mut trial = lam.clone();
                    trial[q] = (trial[q] + dir * step).max(0.0);
                    let ft = objective(&trial)?;
                    if ft < f {
                        lam = trial;
                        f = ft;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        rep.evaluations += evals;
        let worst = worst_case_ratio(&lam, n, m, c1)?;
        if worst.ratio < -tol {
            rep.candidates += 1;
            if !exact_master_margin_nonnegative(&worst.sample, c1) {
                rep.confirmed.push(worst.sample.clone());
            }
        }
        if worst.ratio < rep.worst_ratio {
            rep.worst_ratio = worst.ratio;
            rep.worst_sample = Some(worst.sample);
        }
    }
    Ok(rep)
}
