//! Small dense helpers on `&[f64]` vectors plus a banded LU solver.
//!
//! Anything that needs an SVD or a symmetric eigendecomposition goes through
//! `nalgebra`; this module only holds the pieces that are simpler written directly.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn unit(dim: usize, index: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[index] = 1.0;
    e
}

/// Largest deviation of the Gram matrix of `rows` from the identity.
pub fn orthonormality_defect(rows: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(a, b) - target).abs());
        }
    }
    worst
}

/// Modified Gram–Schmidt with one re-orthogonalisation pass.
///
/// Fails if a row is (numerically) in the span of the previous ones.
pub fn gram_schmidt(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    for row in rows {
        let scale = norm(row);
        let mut v = row.clone();
        for _ in 0..2 {
            for q in &out {
                let c = dot(&v, q);
                axpy(-c, q, &mut v);
            }
        }
        let len = norm(&v);
        if !(len > 1e-12 * scale.max(1e-300)) {
            return Err(Error::invalid("rows are linearly dependent"));
        }
        out.push(scaled(1.0 / len, &v));
    }
    Ok(out)
}

/// Extends the orthonormal rows `basis` (vectors in ℝ^dim) by `count` further
/// orthonormal vectors.
///
/// Candidates are the standard basis vectors; at each step the one with the
/// largest residual after projection is taken, ties going to the lowest index.
pub fn complete_orthonormal(basis: &[Vec<f64>], dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut all: Vec<Vec<f64>> = basis.to_vec();
    let mut extra = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..dim {
            let mut v = unit(dim, k);
            for _ in 0..2 {
                for q in &all {
                    let c = dot(&v, q);
                    axpy(-c, q, &mut v);
                }
            }
            let len = norm(&v);
            let better = match &best {
                None => true,
                Some((l, _)) => len > *l + 1e-12,
            };
            if better {
                best = Some((len, v));
            }
        }
        let (len, v) = best.expect("dim > 0");
        let q = scaled(1.0 / len, &v);
        all.push(q.clone());
        extra.push(q);
    }
    extra
}

/// Row-stacked matrix with `rows.len()` rows.
pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, |x| x.len());
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn det(rows: &[Vec<f64>]) -> f64 {
    to_matrix(rows).determinant()
}

/// Inverse of a small symmetric positive definite matrix stored row-major.
pub fn spd_inverse(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = DMatrix::from_row_slice(n, n, a);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::invalid("matrix is not positive definite"))?;
    let inv = chol.inverse();
    Ok((0..n * n).map(|k| inv[(k / n, k % n)]).collect())
}

/// Extreme eigenvalues `(min, max)` of a small symmetric matrix stored row-major.
pub fn sym_eig_range(a: &[f64], n: usize) -> (f64, f64) {
    let m = DMatrix::from_row_slice(n, n, a);
    let eig = m.symmetric_eigenvalues();
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Thin singular value decomposition `A = U diag(s) Vᵀ` by one-sided Jacobi
/// rotations, with `k = min(rows, cols)`: U is rows×k, V is cols×k, both with
/// orthonormal columns, and s ≥ 0 (unsorted).
///
/// nalgebra 0.35's `svd(true, true)` returns inaccurate factors for some
/// matrices with clustered singular values (observed recomposition error of
/// 2e−2 on a 4×4 matrix with three unit singular values), so the Grassmannian
/// code uses this routine instead. It is accurate to roundoff for the small
/// matrices that occur here.
pub fn svd_jacobi(a: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    if a.nrows() < a.ncols() {
        let (u, s, v) = svd_jacobi(&a.transpose());
        return (v, s, u);
    }
    let (rows, cols) = (a.nrows(), a.ncols());
    let mut w = a.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut w, &mut v] {
                    for r in 0..mat.nrows() {
                        let x = mat[(r, i)];
                        let y = mat[(r, j)];
                        mat[(r, i)] = c * x - s * y;
                        mat[(r, j)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = (0..cols).map(|k| w.column(k).norm()).collect();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let mut ucols: Vec<Option<Vec<f64>>> = (0..cols)
        .map(|k| {
            if s[k] > 1e-300 && s[k] > 1e-14 * smax {
                Some(w.column(k).iter().map(|x| x / s[k]).collect())
            } else {
                None
            }
        })
        .collect();
    let known: Vec<Vec<f64>> = ucols.iter().flatten().cloned().collect();
    let missing = ucols.iter().filter(|c| c.is_none()).count();
    let mut extra = complete_orthonormal(&known, rows, missing).into_iter();
    for c in ucols.iter_mut() {
        if c.is_none() {
            *c = extra.next();
        }
    }
    let u = DMatrix::from_fn(rows, cols, |r, k| ucols[k].as_ref().expect("completed")[r]);
    (u, s, v)
}

/// Banded matrix with LU factorisation by partial pivoting.
///
/// Row `i` stores columns `i - kl ..= i + ku + kl`; the extra `kl` upper
/// diagonals hold pivoting fill-in. Multipliers are not permuted after they are
/// written, so the solve replays the row swaps step by step.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    factored: bool,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    /// Adds `value` at `(i, j)`; `j` must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(!self.factored, "matrix already factored");
        assert!(j + self.kl >= i && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let s = self.slot(i, j);
        self.data[s] += value;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::invalid("singular banded matrix"));
            }
            self.pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let a = self.slot(k, j);
                    let b = self.slot(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l == 0.0 {
                    continue;
                }
                let row_k = k * self.width + kl - k;
                let row_i = i * self.width + kl - i;
                for j in k + 1..=last_col {
                    self.data[row_i + j] -= l * self.data[row_k + j];
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place; requires [`factor`](Self::factor) first.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert!(self.factored, "factor() must be called before solve");
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n - 1) {
                    b[i] -= self.data[self.slot(i, k)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            let row = i * self.width + kl - i;
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                acc -= self.data[row + j] * b[j];
            }
            b[i] = acc / self.data[row + i];
        }
    }
}
