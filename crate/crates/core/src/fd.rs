//! Central finite differences.
//!
//! Scalar stencils along a curve (used by the geodesic oracles) and 4th-order
//! jets of vector-valued functions of several variables (used for user-supplied
//! immersions and for derivatives of derived fields such as H + ½X^N).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;

/// `f'(0)` by the 2nd-order central difference.
pub fn d1(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// `f''(0)` by the 2nd-order central difference.
pub fn d2(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
}

/// `f'(0)` by the 4th-order central difference.
pub fn d1_o4(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

/// `f''(0)` by the 4th-order central difference.
pub fn d2_o4(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h)) / (12.0 * h * h)
}

const O4_OFFSETS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
const O4_D1: [f64; 4] = [1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0];

/// Value, first and second partial derivatives of a map ℝⁿ → ℝᵏ at a point.
///
/// `d1[a][k] = ∂_a f_k` and `d2[a][b][k] = ∂_a∂_b f_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Vec<f64>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<Vec<f64>>>,
}

impl Jet {
    pub fn zeros(n: usize, k: usize) -> Self {
        Jet {
            value: vec![0.0; k],
            d1: vec![vec![0.0; k]; n],
            d2: vec![vec![vec![0.0; k]; n]; n],
        }
    }

    pub fn params(&self) -> usize {
        self.d1.len()
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(a, s) in moves {
        y[a] += s;
    }
    y
}

/// First partial derivatives by the 4th-order stencil.
pub fn jacobian_o4<F>(f: &F, x: &[f64], h: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let mut out = Vec::with_capacity(x.len());
    for a in 0..x.len() {
        let mut acc: Option<Vec<f64>> = None;
        for (s, c) in O4_OFFSETS.iter().zip(O4_D1) {
            let v = f(&shifted(x, &[(a, s * h)]))?;
            let acc = acc.get_or_insert_with(|| vec![0.0; v.len()]);
            for (t, vi) in acc.iter_mut().zip(&v) {
                *t += c * vi / h;
            }
        }
        out.push(acc.unwrap_or_default());
    }
    Ok(out)
}

/// Full 4th-order jet of `f` at `x` with step `h` on every axis.
///
/// Diagonal second derivatives use the five-point stencil; mixed ones use the
/// tensor product of two 4th-order first-derivative stencils (16 evaluations).
pub fn jet_o4<F>(f: &F, x: &[f64], h: f64) -> Result<Jet>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let n = x.len();
    let value = f(x)?;
    let k = value.len();
    let mut jet = Jet::zeros(n, k);
    jet.value = value.clone();
    jet.d1 = jacobian_o4(f, x, h)?;
    for a in 0..n {
        let p1 = f(&shifted(x, &[(a, h)]))?;
        let m1 = f(&shifted(x, &[(a, -h)]))?;
        let p2 = f(&shifted(x, &[(a, 2.0 * h)]))?;
        let m2 = f(&shifted(x, &[(a, -2.0 * h)]))?;
        for c in 0..k {
            jet.d2[a][a][c] = (-p2[c] + 16.0 * p1[c] - 30.0 * value[c] + 16.0 * m1[c] - m2[c]) / (12.0 * h * h);
        }
        for b in a + 1..n {
            let mut acc = vec![0.0; k];
            for (sa, ca) in O4_OFFSETS.iter().zip(O4_D1) {
                for (sb, cb) in O4_OFFSETS.iter().zip(O4_D1) {
                    let v = f(&shifted(x, &[(a, sa * h), (b, sb * h)]))?;
                    for (t, vi) in acc.iter_mut().zip(&v) {
                        *t += ca * cb * vi;
                    }
                }
            }
            for c in 0..k {
                let val = acc[c] / (h * h);
                jet.d2[a][b][c] = val;
                jet.d2[b][a][c] = val;
            }
        }
    }
    Ok(jet)
}

/// Scalar variant of [`jet_o4`].
pub fn scalar_jet_o4<F>(f: &F, x: &[f64], h: f64) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>)>
where
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let wrapped = |p: &[f64]| f(p).map(|v| vec![v]);
    let jet = jet_o4(&wrapped, x, h)?;
    let grad = jet.d1.iter().map(|row| row[0]).collect();
    let hess = jet.d2.iter().map(|row| row.iter().map(|c| c[0]).collect()).collect();
    Ok((jet.value[0], grad, hess))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_stencils_on_exp() {
        let f = |t: f64| (0.3 + t).exp();
        let e = 0.3_f64.exp();
        assert!((d1(f, 1e-4) - e).abs() < 1e-8);
        assert!((d2(f, 1e-4) - e).abs() < 1e-6);
        assert!((d1_o4(f, 1e-3) - e).abs() < 1e-11);
        assert!((d2_o4(f, 1e-3) - e).abs() < 1e-8);
    }

    #[test]
    fn jet_of_polynomial_is_exact_up_to_roundoff() {
        // Cubic polynomials are differentiated exactly by 4th-order stencils.
        let f = |p: &[f64]| -> Result<Vec<f64>> {
            let (x, y) = (p[0], p[1]);
            Ok(vec![x * x * y + y * y * y, 3.0 * x - x * y])
        };
        let jet = jet_o4(&f, &[0.4, -0.7], 1e-2).unwrap();
        let (x, y) = (0.4, -0.7);
        assert!((jet.d1[0][0] - 2.0 * x * y).abs() < 1e-10);
        assert!((jet.d1[1][0] - (x * x + 3.0 * y * y)).abs() < 1e-10);
        assert!((jet.d2[0][0][0] - 2.0 * y).abs() < 1e-8);
        assert!((jet.d2[0][1][0] - 2.0 * x).abs() < 1e-8);
        assert!((jet.d2[1][1][0] - 6.0 * y).abs() < 1e-8);
        assert!((jet.d2[0][1][1] + 1.0).abs() < 1e-8);
        assert!(jet.d2[0][0][1].abs() < 1e-8);
    }
}
