//! The Grassmannian G(n, m) of oriented n-planes in ℝⁿ⁺ᵐ.
//!
//! A plane is an [`OrientedFrame`]; tangent vectors at P are n×m coefficient
//! matrices ([`TangentCoeffs`]) in the basis `e_{αj}` built from a tangent frame
//! `e₁ … eₙ` of P and a normal frame `ν₁ … νₘ` of P^⊥: the curve
//! `e_j(t) = e_j + t Σ_α ω_{jα} ν_α` has velocity ω.
//!
//! Relative to a reference plane P₀ the Jordan angles θ_i come from the singular
//! values μ_i = cos θ_i of `W = (⟨e_i, f_j⟩)`. With `λ_i = tan θ_i`,
//! `v = ∏ √(1 + λ_i²) = 1/|w|` where `w = det W`.
//!
//! The closed forms [`hess_v_form`], [`dlogv_form`] and [`hess_logv_form`] only
//! hold for coefficients expressed in the Jordan-adapted frame returned by
//! [`adapted_frame`]. Use [`TangentCoeffs::change_frame`] to move coefficients
//! there from any other frame.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, axpy, dot, norm, orthonormality_defect, scaled};

/// Rows must be orthonormal to this tolerance.
pub const FRAME_TOL: f64 = 1e-12;

/// Singular values at or below this are treated as μ = 0 (a right angle).
pub const MU_ZERO: f64 = 1e-14;

/// Angles with sin θ below this are treated as θ = 0 when building the
/// adapted normal frame.
const SIN_FLOOR: f64 = 1e-9;

/// n orthonormal vectors of ℝⁿ⁺ᵐ; their order fixes the orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedFrame {
    n: usize,
    m: usize,
    rows: Vec<Vec<f64>>,
}

impl OrientedFrame {
    pub fn new(rows: Vec<Vec<f64>>, m: usize) -> Result<Self> {
        let n = rows.len();
        if n == 0 || m == 0 {
            return Err(Error::invalid("need n >= 1 and m >= 1"));
        }
        for r in &rows {
            if r.len() != n + m {
                return Err(Error::DimensionMismatch {
                    expected: n + m,
                    got: r.len(),
                });
            }
        }
        let defect = orthonormality_defect(&rows);
        if !(defect <= FRAME_TOL) {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(OrientedFrame { n, m, rows })
    }

    /// Gram–Schmidt of arbitrary independent rows; orientation is preserved.
    pub fn orthonormalized(rows: &[Vec<f64>], m: usize) -> Result<Self> {
        let q = linalg::gram_schmidt(rows)?;
        OrientedFrame::new(q, m)
    }

    /// P₀ = span(ε₁, …, εₙ) with its standard orientation.
    pub fn reference(n: usize, m: usize) -> Self {
        OrientedFrame {
            n,
            m,
            rows: (0..n).map(|i| linalg::unit(n + m, i)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ambient(&self) -> usize {
        self.n + self.m
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Orthonormal basis of P^⊥ chosen deterministically and oriented so that
    /// `det[e₁ … eₙ ν₁ … νₘ] > 0`.
    pub fn complement(&self) -> Vec<Vec<f64>> {
        let mut nu = linalg::complete_orthonormal(&self.rows, self.ambient(), self.m);
        let mut all = self.rows.clone();
        all.extend(nu.iter().cloned());
        if linalg::det(&all) < 0.0 {
            let last = nu.last_mut().expect("m >= 1");
            for x in last.iter_mut() {
                *x = -*x;
            }
        }
        nu
    }

    /// Plücker coordinates: the n×n minors over column subsets in
    /// lexicographic order.
    pub fn plucker(&self) -> Vec<f64> {
        plucker(&self.rows)
    }

    /// Applies the same ambient linear map to every row.
    pub fn mapped(&self, q: &DMatrix<f64>) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let v = q * nalgebra::DVector::from_column_slice(r);
                v.iter().cloned().collect()
            })
            .collect();
        OrientedFrame::new(rows, self.m)
    }

    fn check_compatible(&self, other: &OrientedFrame) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        if self.m != other.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: other.m,
            });
        }
        Ok(())
    }
}

/// All k-subsets of 0..len in lexicographic order.
pub fn subsets(len: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > len {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < len - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Plücker coordinates of the n-vector `rows[0] ∧ … ∧ rows[n−1]`.
pub fn plucker(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let dim = rows[0].len();
    subsets(dim, n)
        .into_iter()
        .map(|cols| DMatrix::from_fn(n, n, |i, j| rows[i][cols[j]]).determinant())
        .collect()
}

fn inner_matrix(p: &OrientedFrame, q: &OrientedFrame) -> DMatrix<f64> {
    DMatrix::from_fn(p.n, q.n, |i, j| dot(&p.rows[i], &q.rows[j]))
}

/// `w(P, Q) = det(⟨e_i, f_j⟩)`.
pub fn w_product(p: &OrientedFrame, q: &OrientedFrame) -> Result<f64> {
    p.check_compatible(q)?;
    Ok(inner_matrix(p, q).determinant())
}

/// Jordan angle data of P relative to a reference plane.
///
/// Holds the p = min(n, m) smallest singular values (the remaining n − p are
/// 1 exactly when n > m), sorted descending in μ.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanSpectrum {
    pub n: usize,
    pub m: usize,
    pub mu: Vec<f64>,
    /// `tan θ_i`; `f64::INFINITY` where μ_i = 0.
    pub lambda: Vec<f64>,
    pub theta: Vec<f64>,
}

impl JordanSpectrum {
    /// Spectrum from prescribed λ values (all finite, any order).
    pub fn from_lambda(n: usize, m: usize, lambda: &[f64]) -> Result<Self> {
        let p = n.min(m);
        if lambda.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: lambda.len(),
            });
        }
        let mut lam: Vec<f64> = lambda.iter().map(|l| l.abs()).collect();
        lam.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let mu = lam.iter().map(|l| 1.0 / (1.0 + l * l).sqrt()).collect();
        let theta = lam.iter().map(|l| l.atan()).collect();
        Ok(JordanSpectrum {
            n,
            m,
            mu,
            lambda: lam,
            theta,
        })
    }

    fn from_mu(n: usize, m: usize, mut mu: Vec<f64>) -> Self {
        for x in mu.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        let lambda = mu
            .iter()
            .map(|&u| {
                if u <= MU_ZERO {
                    f64::INFINITY
                } else {
                    (1.0 - u * u).max(0.0).sqrt() / u
                }
            })
            .collect();
        let theta = mu.iter().map(|&u| u.acos()).collect();
        JordanSpectrum {
            n,
            m,
            mu,
            lambda,
            theta,
        }
    }

    pub fn p(&self) -> usize {
        self.mu.len()
    }

    fn finite_lambda(&self) -> Result<&[f64]> {
        match self.lambda.iter().position(|l| !l.is_finite()) {
            Some(index) => Err(Error::InfiniteV { index }),
            None => Ok(&self.lambda),
        }
    }
}

/// Jordan-adapted frames at P relative to P₀.
///
/// `tangent[j] = cos θ_j f'_j + sin θ_j g_j` and `normal[j] = −sin θ_j f'_j +
/// cos θ_j g_j` for j < p, where f'_j are the matching directions of P₀ and g_j
/// unit vectors orthogonal to P₀. Moving `tangent[j]` toward `normal[j]`
/// increases θ_j.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrame {
    pub spectrum: JordanSpectrum,
    pub tangent: Vec<Vec<f64>>,
    pub normal: Vec<Vec<f64>>,
}

fn combine_rows(coeffs: impl Iterator<Item = f64>, rows: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; rows[0].len()];
    for (c, r) in coeffs.zip(rows) {
        axpy(c, r, &mut out);
    }
    out
}

/// SVD of W with singular triples reordered so that the p smallest singular
/// values come first (descending among themselves) and the rest follow.
fn ordered_svd(w: &DMatrix<f64>, p: usize) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = w.nrows();
    let (u, s, v) = linalg::svd_jacobi(w);
    let mut idx: Vec<usize> = (0..n).collect();
    // Ascending, ties by index, so the choice is deterministic.
    idx.sort_by(|&a, &b| s[a].partial_cmp(&s[b]).expect("finite").then(a.cmp(&b)));
    let mut order: Vec<usize> = idx[..p].iter().rev().cloned().collect();
    order.extend(idx[p..].iter().cloned());
    let mu = order.iter().map(|&k| s[k]).collect();
    let uu = DMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    let vv = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    (mu, uu, vv)
}

/// μ_i are the singular values of W clamped to [0, 1].
pub fn jordan_spectrum(p: &OrientedFrame, q: &OrientedFrame) -> Result<JordanSpectrum> {
    p.check_compatible(q)?;
    let pp = p.n.min(p.m);
    let (mu, _, _) = ordered_svd(&inner_matrix(p, q), pp);
    Ok(JordanSpectrum::from_mu(p.n, p.m, mu[..pp].to_vec()))
}

/// Spectrum of `plane` relative to `reference` together with adapted tangent
/// and normal frames at `plane`.
pub fn adapted_frame(plane: &OrientedFrame, reference: &OrientedFrame) -> Result<AdaptedFrame> {
    plane.check_compatible(reference)?;
    let (n, m) = (plane.n, plane.m);
    let p = n.min(m);
    let dim = n + m;
    let w = inner_matrix(plane, reference);
    let (mu, u, v) = ordered_svd(&w, p);
    let tangent: Vec<Vec<f64>> = (0..n)
        .map(|i| combine_rows(u.column(i).iter().cloned(), &plane.rows))
        .collect();
    let fprime: Vec<Vec<f64>> = (0..n)
        .map(|i| combine_rows(v.column(i).iter().cloned(), &reference.rows))
        .collect();
    let spectrum = JordanSpectrum::from_mu(n, m, mu[..p].to_vec());

    // g_j for the genuinely tilted directions.
    let mut g: Vec<Option<Vec<f64>>> = vec![None; m];
    let mut known: Vec<Vec<f64>> = fprime.clone();
    for j in 0..p {
        let mu_j = spectrum.mu[j];
        let sin_j = (1.0 - mu_j * mu_j).max(0.0).sqrt();
        if sin_j > SIN_FLOOR {
            let mut vert = tangent[j].clone();
            axpy(-mu_j, &fprime[j], &mut vert);
            // Clean against P₀ and previously found g's.
            for q in &known {
                let c = dot(&vert, q);
                axpy(-c, q, &mut vert);
            }
            let l = norm(&vert);
            if l > SIN_FLOOR {
                let gj = scaled(1.0 / l, &vert);
                known.push(gj.clone());
                g[j] = Some(gj);
            }
        }
    }
    let missing = g.iter().filter(|x| x.is_none()).count();
    let mut filler = linalg::complete_orthonormal(&known, dim, missing).into_iter();
    let big_g: Vec<Vec<f64>> = g
        .into_iter()
        .map(|x| x.unwrap_or_else(|| filler.next().expect("enough completion vectors")))
        .collect();

    let mut normal: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (a, ga) in big_g.iter().enumerate() {
        if a < p {
            let mu_a = spectrum.mu[a];
            let sin_a = (1.0 - mu_a * mu_a).max(0.0).sqrt();
            let mut na = scaled(mu_a, ga);
            axpy(-sin_a, &fprime[a], &mut na);
            normal.push(na);
        } else {
            normal.push(ga.clone());
        }
    }
    // Remove round-off leakage into P and re-orthonormalise.
    for na in normal.iter_mut() {
        for _ in 0..2 {
            for e in &tangent {
                let c = dot(na, e);
                axpy(-c, e, na);
            }
        }
    }
    let normal = linalg::gram_schmidt(&normal)?;
    Ok(AdaptedFrame {
        spectrum,
        tangent,
        normal,
    })
}

/// `v = ∏ √(1 + λ_i²)`.
pub fn v_value(spec: &JordanSpectrum) -> Result<f64> {
    let lam = spec.finite_lambda()?;
    Ok(lam.iter().map(|l| (1.0 + l * l).sqrt()).product())
}

/// Coefficients ω_{jα} of a tangent vector of G(n, m).
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCoeffs {
    omega: DMatrix<f64>,
}

impl TangentCoeffs {
    pub fn new(omega: DMatrix<f64>) -> Result<Self> {
        if omega.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite tangent coefficient"));
        }
        Ok(TangentCoeffs { omega })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        TangentCoeffs {
            omega: DMatrix::zeros(n, m),
        }
    }

    /// Unit coefficient on e_{αj}.
    pub fn basis(n: usize, m: usize, j: usize, alpha: usize) -> Self {
        let mut z = Self::zeros(n, m);
        z.omega[(j, alpha)] = 1.0;
        z
    }

    pub fn n(&self) -> usize {
        self.omega.nrows()
    }

    pub fn m(&self) -> usize {
        self.omega.ncols()
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn get(&self, j: usize, alpha: usize) -> f64 {
        self.omega[(j, alpha)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.omega.norm_squared()
    }

    pub fn scale(&self, c: f64) -> Self {
        TangentCoeffs { omega: &self.omega * c }
    }

    pub fn plus(&self, other: &Self) -> Self {
        TangentCoeffs {
            omega: &self.omega + &other.omega,
        }
    }

    /// Re-expresses the tangent vector given in frames `(from_t, from_n)` in the
    /// frames `(to_t, to_n)` of the same plane: `ω' = Uᵀ ω R` with
    /// `U_jk = ⟨e_j, e'_k⟩`, `R_αβ = ⟨ν_α, ν'_β⟩`.
    pub fn change_frame(&self, from_t: &[Vec<f64>], from_n: &[Vec<f64>], to_t: &[Vec<f64>], to_n: &[Vec<f64>]) -> Self {
        let n = self.n();
        let m = self.m();
        let u = DMatrix::from_fn(n, n, |j, k| dot(&from_t[j], &to_t[k]));
        let r = DMatrix::from_fn(m, m, |a, b| dot(&from_n[a], &to_n[b]));
        TangentCoeffs {
            omega: u.transpose() * &self.omega * r,
        }
    }
}

fn check_coeffs(spec: &JordanSpectrum, z: &TangentCoeffs) -> Result<()> {
    if z.n() != spec.n || z.m() != spec.m {
        return Err(Error::DimensionMismatch {
            expected: spec.n * spec.m,
            got: z.n() * z.m(),
        });
    }
    Ok(())
}

/// Hess v(Z, Z) in the adapted frame:
/// `v [Σ_{j≠α} ω_{jα}² + Σ_j (1 + 2λ_j²) ω_{jj}² + Σ_{j≠k} λ_jλ_k (ω_{jj}ω_{kk} + ω_{jk}ω_{kj})]`.
pub fn hess_v_form(spec: &JordanSpectrum, z: &TangentCoeffs) -> Result<f64> {
    check_coeffs(spec, z)?;
    let lam = spec.finite_lambda()?;
    let v = v_value(spec)?;
    let w = z.omega();
    let p = spec.p();
    let mut s = 0.0;
    for j in 0..z.n() {
        for a in 0..z.m() {
            if j != a {
                s += w[(j, a)] * w[(j, a)];
            }
        }
    }
    for j in 0..p {
        s += (1.0 + 2.0 * lam[j] * lam[j]) * w[(j, j)] * w[(j, j)];
        for k in 0..p {
            if k != j {
                s += lam[j] * lam[k] * (w[(j, j)] * w[(k, k)] + w[(j, k)] * w[(k, j)]);
            }
        }
    }
    Ok(v * s)
}

/// dv(Z) = v Σ_j λ_j ω_{jj}.
pub fn dv_form(spec: &JordanSpectrum, z: &TangentCoeffs) -> Result<f64> {
    Ok(v_value(spec)? * dlogv_form(spec, z)?)
}

/// d log v(Z) = Σ_j λ_j ω_{jj}.
pub fn dlogv_form(spec: &JordanSpectrum, z: &TangentCoeffs) -> Result<f64> {
    check_coeffs(spec, z)?;
    let lam = spec.finite_lambda()?;
    Ok((0..spec.p()).map(|j| lam[j] * z.get(j, j)).sum())
}

/// Hess log v(Z, Z) = |Z|² + Σ_j λ_j² ω_{jj}² + Σ_{j≠k} λ_jλ_k ω_{jk} ω_{kj}.
pub fn hess_logv_form(spec: &JordanSpectrum, z: &TangentCoeffs) -> Result<f64> {
    check_coeffs(spec, z)?;
    let lam = spec.finite_lambda()?;
    let w = z.omega();
    let p = spec.p();
    let mut s = z.norm_sq();
    for j in 0..p {
        s += lam[j] * lam[j] * w[(j, j)] * w[(j, j)];
        for k in 0..p {
            if k != j {
                s += lam[j] * lam[k] * w[(j, k)] * w[(k, j)];
            }
        }
    }
    Ok(s)
}

/// Rotates `e_j` toward `ν_j` by angle `angles[j]·t` for j < `normals.len()`.
pub fn grassmann_geodesic(p: &OrientedFrame, normals: &[Vec<f64>], angles: &[f64], t: f64) -> Result<OrientedFrame> {
    if normals.len() != angles.len() || normals.len() > p.n.min(p.m) {
        return Err(Error::DimensionMismatch {
            expected: normals.len(),
            got: angles.len(),
        });
    }
    let defect = orthonormality_defect(normals);
    let leak = normals
        .iter()
        .flat_map(|nu| p.rows.iter().map(move |e| dot(nu, e).abs()))
        .fold(0.0_f64, f64::max);
    if !(defect.max(leak) <= 1e-10) {
        return Err(Error::NotOrthonormal {
            defect: defect.max(leak),
        });
    }
    let mut rows = p.rows.clone();
    for (j, (nu, a)) in normals.iter().zip(angles).enumerate() {
        let (s, c) = (a * t).sin_cos();
        let mut r = scaled(c, &p.rows[j]);
        axpy(s, nu, &mut r);
        rows[j] = r;
    }
    // Round-off in the rotation can exceed the strict frame tolerance slightly;
    // re-orthonormalise, which does not change the plane or orientation.
    OrientedFrame::orthonormalized(&rows, p.m)
}

/// The geodesic `t ↦ exp_P(tZ)` for Z given in the frames `(tangent, normal)`
/// of P. Uses the SVD `ω = A S Cᵀ` to reduce to principal rotations.
pub fn tangent_geodesic(tangent: &[Vec<f64>], normal: &[Vec<f64>], z: &TangentCoeffs, t: f64) -> Result<OrientedFrame> {
    let n = tangent.len();
    let m = normal.len();
    if z.n() != n || z.m() != m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            got: z.n() * z.m(),
        });
    }
    let (a, s, c) = linalg::svd_jacobi(z.omega());
    let r = s.len();
    // Principal directions e''_k = Σ_j A_jk e_j, completed inside P when m < n.
    let mut base: Vec<Vec<f64>> = (0..r)
        .map(|k| combine_rows(a.column(k).iter().cloned(), tangent))
        .collect();
    let mut known = base.clone();
    known.extend(normal.iter().cloned());
    base.extend(linalg::complete_orthonormal(&known, n + m, n - r));
    // Keep the orientation of the original tangent frame.
    let turn = DMatrix::from_fn(n, n, |k, j| dot(&base[k], &tangent[j]));
    if turn.determinant() < 0.0 {
        for x in base[0].iter_mut() {
            *x = -*x;
        }
    }
    let mut rows = base;
    for k in 0..r {
        let mut nu = combine_rows(c.column(k).iter().cloned(), normal);
        if k == 0 && turn.determinant() < 0.0 {
            for x in nu.iter_mut() {
                *x = -*x;
            }
        }
        let (sn, cs) = (s[k] * t).sin_cos();
        let mut row = scaled(cs, &rows[k]);
        axpy(sn, &nu, &mut row);
        rows[k] = row;
    }
    OrientedFrame::orthonormalized(&rows, m)
}

/// A random plane: Gram–Schmidt of Gaussian rows.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> OrientedFrame {
    loop {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n + m).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        if let Ok(f) = OrientedFrame::orthonormalized(&rows, m) {
            return f;
        }
    }
}

/// A random plane whose Jordan angles to P₀ are exactly `theta` (length p):
/// `e_j = cos θ_j ε_j + sin θ_j ε_{n+j}` in randomly rotated bases of P₀ and P₀^⊥.
pub fn frame_with_angles<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, theta: &[f64]) -> OrientedFrame {
    let p = n.min(m);
    assert_eq!(theta.len(), p);
    let qa = random_orthogonal(rng, n);
    let qb = random_orthogonal(rng, m);
    let mut rows = Vec::with_capacity(n);
    for j in 0..n {
        let mut r = vec![0.0; n + m];
        let (s, c) = if j < p { theta[j].sin_cos() } else { (0.0, 1.0) };
        for i in 0..n {
            r[i] = c * qa[j][i];
        }
        if j < p {
            for i in 0..m {
                r[n + i] = s * qb[j][i];
            }
        }
        rows.push(r);
    }
    OrientedFrame::orthonormalized(&rows, m).expect("orthonormal by construction")
}

/// Random k×k orthogonal matrix (rows).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<Vec<f64>> {
    loop {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..k).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        if let Ok(q) = linalg::gram_schmidt(&rows) {
            return q;
        }
    }
}
