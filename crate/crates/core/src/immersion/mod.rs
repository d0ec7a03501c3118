//! Immersed submanifolds X: M → ℝⁿ⁺ᵐ given on a parameter box.
//!
//! Sign conventions: `h_{α,ij} = ⟨∂²X(e_i, e_j), ν_α⟩`, `H_α = Σ_i h_{α,ii}`, so H
//! is the trace of the second fundamental form as a vector and the shrinker
//! residual `H + ½X^N` does not depend on the orientation of the normal frame.
//! The round sphere of radius √(2n) about the origin has zero residual.
//!
//! Normal frames are oriented so that `det[e₁ … eₙ ν₁ … νₘ] > 0`; for a
//! hypersurface this makes ν₁ the oriented unit normal that identifies the
//! Gauss map with a map into Sⁿ.

pub mod catalog;
pub mod quadrature;
pub mod target;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fd::{self, Jet};
use crate::grassmann::{self, OrientedFrame, TangentCoeffs};
use crate::linalg::{self, axpy, dot, norm_sq};

pub use catalog::{parse_surface, FdImmersion, GraphImmersion, GraphProfile, ProductSurface, Rotated};
pub use quadrature::{
    first_variation_check, stability_convergence, stability_identity_check, stability_identity_from_field,
    weighted_energy, weighted_integral, ConvergenceStudy, FirstVariation, MeshNode, ScalarFieldOnPatch, StabilityCheck,
    WeightedPatchMesh,
};
pub use target::{composition_check, CompositionResidual, Height, LogV, Longitude, TargetFunction, VFunction};

/// Axis-aligned parameter box; periodic axes wrap and never leave the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub periodic: Vec<bool>,
}

impl ChartBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, periodic: Vec<bool>) -> Self {
        assert!(lo.len() == hi.len() && hi.len() == periodic.len());
        ChartBox { lo, hi, periodic }
    }

    /// The cube [−l, l]ⁿ without periodic axes.
    pub fn cube(n: usize, l: f64) -> Self {
        ChartBox::new(vec![-l; n], vec![l; n], vec![false; n])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Largest side length.
    pub fn size(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).fold(0.0, f64::max)
    }

    /// Default finite-difference step: chart size × 1e−3.
    pub fn fd_step(&self) -> f64 {
        self.size() * 1e-3
    }

    pub fn contains(&self, param: &[f64]) -> bool {
        param.len() == self.dim()
            && (0..self.dim()).all(|a| self.periodic[a] || (param[a] >= self.lo[a] && param[a] <= self.hi[a]))
    }

    pub fn check(&self, param: &[f64]) -> Result<()> {
        if param.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: param.len(),
            });
        }
        if !self.contains(param) {
            return Err(Error::OutsideDomain { param: param.to_vec() });
        }
        Ok(())
    }

    /// Checks that the 4th-order stencil of half-width `2h` around `param` stays
    /// inside the chart.
    pub fn check_stencil(&self, param: &[f64], h: f64) -> Result<()> {
        self.check(param)?;
        for a in 0..self.dim() {
            if self.periodic[a] {
                continue;
            }
            if param[a] - 2.0 * h < self.lo[a] || param[a] + 2.0 * h > self.hi[a] {
                return Err(Error::OutsideDomain { param: param.to_vec() });
            }
        }
        Ok(())
    }
}

/// A parametrised immersion with position jets.
pub trait Immersion: Send + Sync {
    /// Dimension n of M.
    fn dim(&self) -> usize;
    /// Codimension m.
    fn codim(&self) -> usize;
    fn chart(&self) -> &ChartBox;
    /// X, ∂_a X and ∂_a∂_b X at a parameter point.
    fn jet(&self, param: &[f64]) -> Result<Jet>;
    /// Whether the chart covers a closed manifold up to a null set, so that
    /// integrals over the chart have no boundary terms.
    fn closed(&self) -> bool {
        false
    }
    /// Whether `jet` is exact (as opposed to finite differences).
    fn analytic(&self) -> bool {
        true
    }
    fn name(&self) -> String;

    fn ambient(&self) -> usize {
        self.dim() + self.codim()
    }
}

impl<T: Immersion + ?Sized> Immersion for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn codim(&self) -> usize {
        (**self).codim()
    }
    fn chart(&self) -> &ChartBox {
        (**self).chart()
    }
    fn jet(&self, param: &[f64]) -> Result<Jet> {
        (**self).jet(param)
    }
    fn closed(&self) -> bool {
        (**self).closed()
    }
    fn analytic(&self) -> bool {
        (**self).analytic()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// Local geometry of an immersion at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFrame {
    pub param: Vec<f64>,
    pub position: Vec<f64>,
    /// Orthonormal tangent frame e_i (Gram–Schmidt of ∂_a X, chart orientation).
    pub tangent: Vec<Vec<f64>>,
    /// Orthonormal normal frame ν_α.
    pub normal: Vec<Vec<f64>>,
    /// `h[α][i][j]`.
    pub h: Vec<Vec<Vec<f64>>>,
    /// `H_α = Σ_i h_{α,ii}`.
    pub mean: Vec<f64>,
    /// `ρ = exp(−|X|²/4)`.
    pub rho: f64,
    /// Induced metric g_ab, row-major.
    pub metric: Vec<f64>,
    pub metric_inv: Vec<f64>,
    /// `e_i = Σ_a C_ia ∂_a X`, row-major.
    pub coframe: Vec<f64>,
    /// √det g.
    pub volume: f64,
}

impl PointFrame {
    pub fn n(&self) -> usize {
        self.tangent.len()
    }

    pub fn m(&self) -> usize {
        self.normal.len()
    }

    /// `X^α = ⟨X, ν_α⟩`.
    pub fn x_normal(&self) -> Vec<f64> {
        self.normal.iter().map(|nu| dot(&self.position, nu)).collect()
    }

    /// `|B|² = Σ h_{α,ij}²`.
    pub fn b_norm_sq(&self) -> f64 {
        self.h
            .iter()
            .flat_map(|a| a.iter().flat_map(|r| r.iter()))
            .map(|x| x * x)
            .sum()
    }

    /// Ambient normal vector `Σ_α c_α ν_α`.
    pub fn normal_vector(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.position.len()];
        for (c, nu) in coeffs.iter().zip(&self.normal) {
            axpy(*c, nu, &mut out);
        }
        out
    }

    /// `H + ½X^N` as an ambient vector.
    pub fn shrinker_vector(&self) -> Vec<f64> {
        self.normal_vector(&shrinker_residual(self))
    }

    pub fn gauss_map(&self) -> OrientedFrame {
        gauss_map(self)
    }

    /// `Σ_a C_ia v_a`: the frame component i of a parameter covector v.
    pub fn frame_derivative(&self, i: usize, partials: &[Vec<f64>]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; partials[0].len()];
        for a in 0..n {
            axpy(self.coframe[i * n + a], &partials[a], &mut out);
        }
        out
    }
}

/// Builds the [`PointFrame`] from a position jet.
pub fn frame_from_jet(param: &[f64], jet: &Jet, codim: usize) -> Result<PointFrame> {
    let n = jet.params();
    let dim = jet.len();
    if dim != n + codim {
        return Err(Error::DimensionMismatch {
            expected: n + codim,
            got: dim,
        });
    }
    let d = &jet.d1;
    let mut metric = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            metric[a * n + b] = dot(&d[a], &d[b]);
        }
    }
    let (lo, hi) = linalg::sym_eig_range(&metric, n);
    if !(lo > 1e-12 * hi) || !hi.is_finite() {
        return Err(Error::DegenerateMetric {
            condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
        });
    }
    let metric_inv = linalg::spd_inverse(&metric, n)?;
    let tangent = linalg::gram_schmidt(d)?;
    // C = (E Dᵀ) g⁻¹
    let mut ed = vec![0.0; n * n];
    for i in 0..n {
        for a in 0..n {
            ed[i * n + a] = dot(&tangent[i], &d[a]);
        }
    }
    let mut coframe = vec![0.0; n * n];
    for i in 0..n {
        for a in 0..n {
            coframe[i * n + a] = (0..n).map(|b| ed[i * n + b] * metric_inv[b * n + a]).sum();
        }
    }
    let frame = OrientedFrame::new(tangent.clone(), codim).or_else(|_| {
        // Gram–Schmidt output is orthonormal to ~1e−15; tolerate slightly more.
        OrientedFrame::orthonormalized(&tangent, codim)
    })?;
    let normal = frame.complement();
    let mut h = vec![vec![vec![0.0; n]; n]; codim];
    for (alpha, nu) in normal.iter().enumerate() {
        // k_ab = ⟨∂_a∂_b X, ν_α⟩
        let k: Vec<f64> = (0..n * n).map(|ab| dot(&jet.d2[ab / n][ab % n], nu)).collect();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += coframe[i * n + a] * coframe[j * n + b] * k[a * n + b];
                    }
                }
                h[alpha][i][j] = s;
            }
        }
        // Symmetrise away round-off.
        for i in 0..n {
            for j in i + 1..n {
                let s = 0.5 * (h[alpha][i][j] + h[alpha][j][i]);
                h[alpha][i][j] = s;
                h[alpha][j][i] = s;
            }
        }
    }
    let mean = h.iter().map(|ha| (0..n).map(|i| ha[i][i]).sum()).collect();
    let det_g = DMatrix::from_row_slice(n, n, &metric).determinant();
    Ok(PointFrame {
        param: param.to_vec(),
        position: jet.value.clone(),
        tangent,
        normal,
        h,
        mean,
        rho: (-norm_sq(&jet.value) / 4.0).exp(),
        metric,
        metric_inv,
        coframe,
        volume: det_g.sqrt(),
    })
}

/// Frame, second fundamental form, mean curvature and weight at `param`.
pub fn point_frame<I: Immersion + ?Sized>(imm: &I, param: &[f64]) -> Result<PointFrame> {
    imm.chart().check(param)?;
    let jet = imm.jet(param)?;
    frame_from_jet(param, &jet, imm.codim())
}

/// `H_α + X^α/2` for each normal direction.
pub fn shrinker_residual(pf: &PointFrame) -> Vec<f64> {
    pf.mean.iter().zip(pf.x_normal()).map(|(h, x)| h + 0.5 * x).collect()
}

/// The tangent plane e₁ ∧ … ∧ eₙ.
pub fn gauss_map(pf: &PointFrame) -> OrientedFrame {
    OrientedFrame::new(pf.tangent.clone(), pf.m())
        .or_else(|_| OrientedFrame::orthonormalized(&pf.tangent, pf.m()))
        .expect("tangent frame is orthonormal")
}

/// `γ_* e_i` for each i, as coefficients `ω_{jα} = h_{α,ij}` in the frame
/// `(pf.tangent, pf.normal)`.
pub fn gauss_pushforward(pf: &PointFrame) -> Vec<TangentCoeffs> {
    let (n, m) = (pf.n(), pf.m());
    (0..n)
        .map(|i| {
            TangentCoeffs::new(DMatrix::from_fn(n, m, |j, a| pf.h[a][i][j])).expect("finite second fundamental form")
        })
        .collect()
}

/// `½|dγ|²ρ` from the pushforward coefficients.
pub fn gauss_energy_density(pf: &PointFrame) -> f64 {
    0.5 * gauss_pushforward(pf).iter().map(|z| z.norm_sq()).sum::<f64>() * pf.rho
}

/// Weighted tension `τ_{αj} = ⟨D_{e_j}(H + ½X^N), ν_α⟩`, returned as `[α][j]`.
///
/// `H + ½X^N` is differentiated as an ambient vector field by 4th-order central
/// differences with step `chart.fd_step()`.
pub fn weighted_tension<I: Immersion + ?Sized>(imm: &I, param: &[f64]) -> Result<Vec<Vec<f64>>> {
    let h = imm.chart().fd_step();
    weighted_tension_with_step(imm, param, h)
}

pub fn weighted_tension_with_step<I: Immersion + ?Sized>(imm: &I, param: &[f64], h: f64) -> Result<Vec<Vec<f64>>> {
    imm.chart().check_stencil(param, h)?;
    let pf = point_frame(imm, param)?;
    let field = |p: &[f64]| -> Result<Vec<f64>> {
        let q = frame_from_jet(p, &imm.jet(p)?, imm.codim())?;
        Ok(q.shrinker_vector())
    };
    let partials = fd::jacobian_o4(&field, param, h)?;
    let n = pf.n();
    Ok(pf
        .normal
        .iter()
        .map(|nu| (0..n).map(|j| dot(&pf.frame_derivative(j, &partials), nu)).collect())
        .collect())
}

/// The tension as tangent coefficients `ω_{jα} = τ_{αj}`.
pub fn tension_coeffs(tau: &[Vec<f64>]) -> TangentCoeffs {
    let m = tau.len();
    let n = tau[0].len();
    TangentCoeffs::new(DMatrix::from_fn(n, m, |j, a| tau[a][j])).expect("finite tension")
}

/// Euclidean norm of a tension array.
pub fn tension_norm(tau: &[Vec<f64>]) -> f64 {
    tau.iter().flat_map(|r| r.iter()).map(|x| x * x).sum::<f64>().sqrt()
}

/// Value, parameter gradient and parameter Hessian of a scalar function.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

/// Weighted Laplacian `Δf + ⟨∇ log w, ∇f⟩` from a position jet, a scalar jet
/// and the parameter gradient of `log w`:
/// `g^{ab}(f_ab − Γ^c_ab f_c) + g^{ab} ∂_a(log w) f_b`.
pub fn weighted_laplacian_from_jets(x: &Jet, f: &ScalarJet, dlogw: &[f64]) -> Result<f64> {
    let n = x.params();
    let mut metric = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            metric[a * n + b] = dot(&x.d1[a], &x.d1[b]);
        }
    }
    let ginv = linalg::spd_inverse(&metric, n)?;
    // Γ^c_ab f_c = g^{cd} ⟨∂_a∂_b X, ∂_d X⟩ f_c
    let mut grad_up = vec![0.0; n];
    for d in 0..n {
        grad_up[d] = (0..n).map(|c| ginv[d * n + c] * f.grad[c]).sum();
    }
    let mut lap = 0.0;
    let mut drift = 0.0;
    for a in 0..n {
        for b in 0..n {
            let gab = ginv[a * n + b];
            let mut christoffel_term = 0.0;
            for d in 0..n {
                christoffel_term += dot(&x.d2[a][b], &x.d1[d]) * grad_up[d];
            }
            lap += gab * (f.hess[a][b] - christoffel_term);
            drift += gab * dlogw[a] * f.grad[b];
        }
    }
    Ok(lap + drift)
}

/// Drift Laplacian `L f = Δf − ½⟨X, ∇f⟩`, the weighted Laplacian for
/// `w = ρ`, whose log has parameter gradient `−½⟨X, ∂_a X⟩`.
pub fn drift_laplacian_from_jets(x: &Jet, f: &ScalarJet) -> Result<f64> {
    let dlogrho: Vec<f64> = x.d1.iter().map(|d| -0.5 * dot(&x.value, d)).collect();
    weighted_laplacian_from_jets(x, f, &dlogrho)
}

/// Drift Laplacian of `f` (a function of the parameters) at `param`, with the
/// jet of f from 4th-order differences with step `chart.fd_step()`.
pub fn drift_laplacian<I, F>(imm: &I, param: &[f64], f: &F) -> Result<f64>
where
    I: Immersion + ?Sized,
    F: Fn(&[f64]) -> Result<f64> + ?Sized,
{
    let h = imm.chart().fd_step();
    imm.chart().check_stencil(param, h)?;
    let (value, grad, hess) = fd::scalar_jet_o4(f, param, h)?;
    drift_laplacian_from_jets(&imm.jet(param)?, &ScalarJet { value, grad, hess })
}

/// Tension of the Gauss map computed from its definition: the tangential
/// part of the drift Laplacian of the Plücker embedding, paired with the
/// Plücker vectors of `e_{αj}`. Returned as `[α][j]`.
///
/// This needs one more derivative than [`weighted_tension`] and is used as an
/// independent check of it.
pub fn weighted_tension_plucker<I: Immersion + ?Sized>(imm: &I, param: &[f64]) -> Result<Vec<Vec<f64>>> {
    let h = imm.chart().fd_step();
    imm.chart().check_stencil(param, h)?;
    let pf = point_frame(imm, param)?;
    let plucker_at = |p: &[f64]| -> Result<Vec<f64>> {
        let jet = imm.jet(p)?;
        let q = frame_from_jet(p, &jet, imm.codim())?;
        Ok(grassmann::plucker(&q.tangent))
    };
    let pj = fd::jet_o4(&plucker_at, param, h)?;
    let xjet = imm.jet(param)?;
    let k = pj.len();
    let mut lgamma = vec![0.0; k];
    for c in 0..k {
        let sj = ScalarJet {
            value: pj.value[c],
            grad: pj.d1.iter().map(|r| r[c]).collect(),
            hess: pj.d2.iter().map(|r| r.iter().map(|v| v[c]).collect()).collect(),
        };
        lgamma[c] = drift_laplacian_from_jets(&xjet, &sj)?;
    }
    let n = pf.n();
    let mut out = vec![vec![0.0; n]; pf.m()];
    for (alpha, nu) in pf.normal.iter().enumerate() {
        for j in 0..n {
            let mut rows = pf.tangent.clone();
            rows[j] = nu.clone();
            out[alpha][j] = dot(&lgamma, &grassmann::plucker(&rows));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
