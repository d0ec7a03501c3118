//! Functions on the target of the Gauss map, and the composition formula
//! `L(F∘γ) = Σ_i Hess F(γ_*e_i, γ_*e_i) + dF(τ_ρ(γ))`.
//!
//! Tangent vectors of the target are passed as [`TangentCoeffs`] in the frame
//! `(pf.tangent, pf.normal)` of the point frame. For hypersurfaces the Gauss
//! map is read as the unit normal ν₁ ∈ Sⁿ; the coefficient column `ω_{j1}`
//! then corresponds to the sphere tangent vector `−Σ_j ω_{j1} e_j`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use super::{
    drift_laplacian, gauss_map, gauss_pushforward, point_frame, tension_coeffs, weighted_tension, Immersion, PointFrame,
};
use crate::error::{Error, Result};
use crate::grassmann::{self, OrientedFrame, TangentCoeffs};
use crate::sphere::{self, TangentFrame, UnitVector};

/// A smooth function on the target of the Gauss map with closed-form first
/// and second derivatives.
pub trait TargetFunction: Send + Sync {
    fn name(&self) -> String;
    /// `F(γ(p))`.
    fn value(&self, pf: &PointFrame) -> Result<f64>;
    /// `dF(Z)` at `γ(p)`.
    fn differential(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64>;
    /// `Hess F(Z, Z)` at `γ(p)`.
    fn hessian(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64>;
}

/// The unit normal of a hypersurface frame, its tangent basis, and the sphere
/// coefficients of a Grassmannian tangent vector.
fn sphere_view(pf: &PointFrame, z: Option<&TangentCoeffs>) -> Result<(UnitVector, TangentFrame, Vec<f64>)> {
    if pf.m() != 1 {
        return Err(Error::Unsupported("sphere targets need codimension one"));
    }
    let x = UnitVector::normalized(&pf.normal[0])?;
    let basis = TangentFrame::new(&x, pf.tangent.clone())?;
    let c = match z {
        Some(z) => {
            if z.n() != pf.n() || z.m() != 1 {
                return Err(Error::DimensionMismatch {
                    expected: pf.n(),
                    got: z.n() * z.m(),
                });
            }
            (0..pf.n()).map(|j| -z.get(j, 0)).collect()
        }
        None => Vec::new(),
    };
    Ok((x, basis, c))
}

/// `F(x) = 1 − ⟨x, a⟩` on Sⁿ, composed with the unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Height {
    pub a: UnitVector,
}

impl Height {
    pub fn new(a: UnitVector) -> Self {
        Height { a }
    }
}

impl TargetFunction for Height {
    fn name(&self) -> String {
        format!("height(a={:?})", self.a.coords())
    }

    fn value(&self, pf: &PointFrame) -> Result<f64> {
        let (x, _, _) = sphere_view(pf, None)?;
        sphere::height_value(&x, &self.a)
    }

    fn differential(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64> {
        let (x, basis, c) = sphere_view(pf, Some(z))?;
        let d = sphere::height_differential(&x, &self.a, &basis)?;
        Ok(d.iter().zip(&c).map(|(a, b)| a * b).sum())
    }

    fn hessian(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64> {
        let (x, basis, c) = sphere_view(pf, Some(z))?;
        // hess_height is Hess⟨·, a⟩; F = 1 − ⟨·, a⟩ flips its sign.
        Ok(-sphere::hess_height(&x, &self.a, &basis)?.quad(&c))
    }
}

/// The longitude θ on 𝕍, composed with the unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Longitude;

impl TargetFunction for Longitude {
    fn name(&self) -> String {
        "theta".into()
    }

    fn value(&self, pf: &PointFrame) -> Result<f64> {
        let (x, _, _) = sphere_view(pf, None)?;
        Ok(sphere::longitude_coords(&x)?.theta)
    }

    fn differential(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64> {
        let (x, basis, c) = sphere_view(pf, Some(z))?;
        let (_, dth) = sphere::longitude_differentials(&x, &basis)?;
        Ok(dth.iter().zip(&c).map(|(a, b)| a * b).sum())
    }

    fn hessian(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64> {
        let (x, basis, c) = sphere_view(pf, Some(z))?;
        Ok(sphere::hess_r_theta(&x, &basis)?.1.quad(&c))
    }
}

fn adapted(
    pf: &PointFrame,
    reference: &OrientedFrame,
    z: &TangentCoeffs,
) -> Result<(grassmann::JordanSpectrum, TangentCoeffs)> {
    let af = grassmann::adapted_frame(&gauss_map(pf), reference)?;
    let w = z.change_frame(&pf.tangent, &pf.normal, &af.tangent, &af.normal);
    Ok((af.spectrum, w))
}

/// `v(·, P₀) = 1/w(·, P₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VFunction {
    pub reference: OrientedFrame,
}

/// `log v(·, P₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogV {
    pub reference: OrientedFrame,
}

impl TargetFunction for VFunction {
    fn name(&self) -> String {
        "v".into()
    }

    fn value(&self, pf: &PointFrame) -> Result<f64> {
        grassmann::v_value(&grassmann::jordan_spectrum(&gauss_map(pf), &self.reference)?)
    }

    fn differential(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64> {
        let (spec, w) = adapted(pf, &self.reference, z)?;
        grassmann::dv_form(&spec, &w)
    }

    fn hessian(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64> {
        let (spec, w) = adapted(pf, &self.reference, z)?;
        grassmann::hess_v_form(&spec, &w)
    }
}

impl TargetFunction for LogV {
    fn name(&self) -> String {
        "log v".into()
    }

    fn value(&self, pf: &PointFrame) -> Result<f64> {
        Ok(grassmann::v_value(&grassmann::jordan_spectrum(&gauss_map(pf), &self.reference)?)?.ln())
    }

    fn differential(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64> {
        let (spec, w) = adapted(pf, &self.reference, z)?;
        grassmann::dlogv_form(&spec, &w)
    }

    fn hessian(&self, pf: &PointFrame, z: &TangentCoeffs) -> Result<f64> {
        let (spec, w) = adapted(pf, &self.reference, z)?;
        grassmann::hess_logv_form(&spec, &w)
    }
}

/// The three terms of the composition formula at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositionResidual {
    /// `L(F∘γ)` by differences of `F∘γ` over the chart.
    pub lhs: f64,
    /// `Σ_i Hess F(γ_*e_i, γ_*e_i)`.
    pub hess_term: f64,
    /// `dF(τ_ρ(γ))`.
    pub tension_term: f64,
    pub residual: f64,
}

/// `L(F∘γ) − Σ_i Hess F(γ_*e_i, γ_*e_i) − dF(τ_ρ(γ))` at `param`.
pub fn composition_check<I, F>(imm: &I, param: &[f64], target: &F) -> Result<CompositionResidual>
where
    I: Immersion + ?Sized,
    F: TargetFunction + ?Sized,
{
    let pf = point_frame(imm, param)?;
    // Fail early if F is undefined at γ(p).
    target.value(&pf)?;
    let composed = |p: &[f64]| -> Result<f64> {
        let q = super::frame_from_jet(p, &imm.jet(p)?, imm.codim())?;
        target.value(&q)
    };
    let lhs = drift_laplacian(imm, param, &composed)?;
    let mut hess_term = 0.0;
    for z in gauss_pushforward(&pf) {
        hess_term += target.hessian(&pf, &z)?;
    }
    let tau = weighted_tension(imm, param)?;
    let tension_term = target.differential(&pf, &tension_coeffs(&tau))?;
    Ok(CompositionResidual {
        lhs,
        hess_term,
        tension_term,
        residual: lhs - hess_term - tension_term,
    })
}

/// The horizontal reference plane `span(ε₁ … εₙ)` for graphs over ℝⁿ.
pub fn horizontal_plane(n: usize, m: usize) -> OrientedFrame {
    OrientedFrame::reference(n, m)
}

/// Rotates a reference plane by an ambient orthogonal matrix.
pub fn rotated_reference(reference: &OrientedFrame, q: &DMatrix<f64>) -> Result<OrientedFrame> {
    reference.mapped(q)
}
