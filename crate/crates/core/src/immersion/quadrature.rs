//! Tensor-product midpoint quadrature against `ρ dμ` on a chart, and the
//! integrated identities built on it.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use super::{frame_from_jet, gauss_pushforward, Immersion, PointFrame, ScalarJet};
use crate::error::{Error, Result};
use crate::fd::{self, Jet};
use crate::linalg::{dot, norm_sq};
use crate::sphere::UnitVector;

use super::target::{Height, TargetFunction};

/// One quadrature node.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshNode {
    pub param: Vec<f64>,
    /// Cell volume in parameter space times √det g.
    pub weight: f64,
    pub frame: PointFrame,
    pub jet: Jet,
}

/// Midpoint nodes of a uniform grid on the chart of an immersion.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPatchMesh {
    pub nodes: Vec<MeshNode>,
    pub resolution: Vec<usize>,
    /// Parameter cell widths.
    pub cell: Vec<f64>,
    /// Whether the chart covers a closed manifold (no boundary terms).
    pub closed: bool,
    lo: Vec<f64>,
    hi: Vec<f64>,
    periodic: Vec<bool>,
}

impl WeightedPatchMesh {
    /// Builds the mesh with `resolution[a]` cells along axis a.
    pub fn midpoint<I: Immersion + ?Sized>(imm: &I, resolution: &[usize]) -> Result<Self> {
        let chart = imm.chart();
        let n = chart.dim();
        if resolution.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: resolution.len(),
            });
        }
        if resolution.contains(&0) {
            return Err(Error::invalid("mesh resolution must be positive"));
        }
        let cell: Vec<f64> = (0..n)
            .map(|a| (chart.hi[a] - chart.lo[a]) / resolution[a] as f64)
            .collect();
        let cell_volume: f64 = cell.iter().product();
        let total: usize = resolution.iter().product();
        let mut nodes = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            let param: Vec<f64> = (0..n).map(|a| chart.lo[a] + (idx[a] as f64 + 0.5) * cell[a]).collect();
            let jet = imm.jet(&param)?;
            let frame = frame_from_jet(&param, &jet, imm.codim())?;
            let weight = cell_volume * frame.volume;
            if !(weight > 0.0) {
                return Err(Error::DegenerateMetric {
                    condition: f64::INFINITY,
                });
            }
            nodes.push(MeshNode {
                param,
                weight,
                frame,
                jet,
            });
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < resolution[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(WeightedPatchMesh {
            nodes,
            resolution: resolution.to_vec(),
            cell,
            closed: imm.closed(),
            lo: chart.lo.clone(),
            hi: chart.hi.clone(),
            periodic: chart.periodic.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Unweighted area `∫ dμ`.
    pub fn area(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Whether the node sits in the outermost cell layer of a non-periodic axis.
    pub fn on_rim(&self, node: usize) -> bool {
        let p = &self.nodes[node].param;
        (0..p.len())
            .any(|a| !self.periodic[a] && (p[a] - self.lo[a] < self.cell[a] || self.hi[a] - p[a] < self.cell[a]))
    }

    /// Finite-difference step at a node: `h`, shrunk so that a ±2h stencil
    /// stays inside the chart.
    fn node_step(&self, node: usize, h: f64) -> f64 {
        let p = &self.nodes[node].param;
        let mut step = h;
        for a in 0..p.len() {
            if !self.periodic[a] {
                let room = (p[a] - self.lo[a]).min(self.hi[a] - p[a]);
                step = step.min(0.4 * room);
            }
        }
        step
    }
}

/// A scalar field sampled at the nodes of a mesh, with its gradient in the
/// orthonormal tangent frame of each node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldOnPatch {
    pub values: Vec<f64>,
    /// `gradients[node][i] = e_i(f)`.
    pub gradients: Vec<Vec<f64>>,
}

impl ScalarFieldOnPatch {
    /// `f = F∘γ`, with `e_i(f) = dF(γ_*e_i)`.
    pub fn from_target<F: TargetFunction + ?Sized>(mesh: &WeightedPatchMesh, target: &F) -> Result<Self> {
        let mut values = Vec::with_capacity(mesh.len());
        let mut gradients = Vec::with_capacity(mesh.len());
        for node in &mesh.nodes {
            values.push(target.value(&node.frame)?);
            let mut g = Vec::with_capacity(node.frame.n());
            for z in gauss_pushforward(&node.frame) {
                g.push(target.differential(&node.frame, &z)?);
            }
            gradients.push(g);
        }
        Ok(ScalarFieldOnPatch { values, gradients })
    }

    /// A field from a closure returning value and frame gradient per node.
    pub fn from_fn(mesh: &WeightedPatchMesh, f: impl Fn(&MeshNode) -> Result<(f64, Vec<f64>)>) -> Result<Self> {
        let mut values = Vec::with_capacity(mesh.len());
        let mut gradients = Vec::with_capacity(mesh.len());
        for node in &mesh.nodes {
            let (v, g) = f(node)?;
            values.push(v);
            gradients.push(g);
        }
        Ok(ScalarFieldOnPatch { values, gradients })
    }

    pub fn constant(mesh: &WeightedPatchMesh, c: f64) -> Self {
        ScalarFieldOnPatch {
            values: vec![c; mesh.len()],
            gradients: mesh.nodes.iter().map(|n| vec![0.0; n.frame.n()]).collect(),
        }
    }

    fn check(&self, mesh: &WeightedPatchMesh) -> Result<()> {
        if self.values.len() != mesh.len() || self.gradients.len() != mesh.len() {
            return Err(Error::DimensionMismatch {
                expected: mesh.len(),
                got: self.values.len(),
            });
        }
        Ok(())
    }
}

/// `Σ_nodes f ρ √det g · cell`.
pub fn weighted_integral(mesh: &WeightedPatchMesh, f: &ScalarFieldOnPatch) -> Result<f64> {
    f.check(mesh)?;
    Ok(mesh
        .nodes
        .iter()
        .zip(&f.values)
        .map(|(node, v)| v * node.frame.rho * node.weight)
        .sum())
}

/// Both sides of `∫ f(1−f)|B|²ρ = −∫|∇f|²ρ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `|lhs − rhs| / max(|lhs|, 1)`.
    pub relative: f64,
}

/// The integrated identity for a given field on a closed mesh.
pub fn stability_identity_from_field(mesh: &WeightedPatchMesh, f: &ScalarFieldOnPatch) -> Result<StabilityCheck> {
    if !mesh.closed {
        return Err(Error::Unsupported(
            "the integrated identity needs a closed surface; boundary terms are not modelled",
        ));
    }
    f.check(mesh)?;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for ((node, v), g) in mesh.nodes.iter().zip(&f.values).zip(&f.gradients) {
        let w = node.frame.rho * node.weight;
        lhs += v * (1.0 - v) * node.frame.b_norm_sq() * w;
        rhs -= norm_sq(g) * w;
    }
    let residual = lhs - rhs;
    Ok(StabilityCheck {
        lhs,
        rhs,
        residual,
        relative: residual.abs() / lhs.abs().max(1.0),
    })
}

/// The identity for `f = 1 − ⟨γ, a⟩` on a closed hypersurface mesh.
pub fn stability_identity_check(mesh: &WeightedPatchMesh, a: &UnitVector) -> Result<StabilityCheck> {
    if !mesh.closed {
        return Err(Error::Unsupported(
            "the integrated identity needs a closed surface; boundary terms are not modelled",
        ));
    }
    let field = ScalarFieldOnPatch::from_target(mesh, &Height::new(a.clone()))?;
    stability_identity_from_field(mesh, &field)
}

/// Residuals of the integrated identity over successive refinements.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub levels: Vec<(Vec<usize>, StabilityCheck)>,
    /// `log₂(|r_k| / |r_{k+1}|)` for consecutive levels.
    pub orders: Vec<f64>,
}

/// Runs [`stability_identity_check`] at each resolution in turn.
pub fn stability_convergence<I: Immersion + ?Sized>(
    imm: &I,
    a: &UnitVector,
    resolutions: &[Vec<usize>],
) -> Result<ConvergenceStudy> {
    let mut levels = Vec::with_capacity(resolutions.len());
    for res in resolutions {
        let mesh = WeightedPatchMesh::midpoint(imm, res)?;
        levels.push((res.clone(), stability_identity_check(&mesh, a)?));
    }
    let orders = levels
        .windows(2)
        .map(|w| (w[0].1.residual.abs() / w[1].1.residual.abs()).log2())
        .collect();
    Ok(ConvergenceStudy { levels, orders })
}

/// A map `M → ℝᴷ` given on the chart (for maps into a submanifold N ⊂ ℝᴷ
/// with the induced metric, such as the Gauss map in Plücker coordinates).
pub type MapFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a;

fn frame_jacobian(mesh: &WeightedPatchMesh, node: usize, map: &MapFn<'_>, h: f64) -> Result<Vec<Vec<f64>>> {
    let step = mesh.node_step(node, h);
    let partials = fd::jacobian_o4(map, &mesh.nodes[node].param, step)?;
    let pf = &mesh.nodes[node].frame;
    Ok((0..pf.n()).map(|i| pf.frame_derivative(i, &partials)).collect())
}

/// `E_w(f) = ∫ ½ Σ_i |f_*e_i|² w dμ` with `f_*` from 4th-order differences of
/// step `h` (shrunk near chart edges).
pub fn weighted_energy(
    mesh: &WeightedPatchMesh,
    map: &MapFn<'_>,
    weight: &dyn Fn(&MeshNode) -> f64,
    h: f64,
) -> Result<f64> {
    let mut e = 0.0;
    for (k, node) in mesh.nodes.iter().enumerate() {
        let df = frame_jacobian(mesh, k, map, h)?;
        let density: f64 = df.iter().map(|v| norm_sq(v)).sum();
        e += 0.5 * density * weight(node) * node.weight;
    }
    Ok(e)
}

/// Outcome of a first-variation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstVariation {
    /// `dE_w(f_t)/dt` at t = 0 by central differences of the energy.
    pub fd_derivative: f64,
    /// `−∫⟨∂_t f, τ_w(f)⟩ w dμ`.
    pub formula: f64,
    pub residual: f64,
    /// The variation does not vanish on the outer cell layer of an open
    /// chart, so boundary terms may contribute.
    pub boundary_warning: bool,
}

/// Compares `dE_w/dt` with `−∫⟨∂_t f, τ_w(f)⟩ w` for a family `f_t`.
///
/// `τ_w(f) = w⁻¹ div(w df)` is computed componentwise as the weighted
/// Laplacian of `f_0`. For maps into a submanifold N ⊂ ℝᴷ whose variation
/// stays in N this equals the pairing with the intrinsic tension, because
/// `∂_t f` is tangent to N.
#[allow(clippy::type_complexity)]
pub fn first_variation_check(
    mesh: &WeightedPatchMesh,
    family: &dyn Fn(&[f64], f64) -> Result<Vec<f64>>,
    log_weight: &dyn Fn(&[f64]) -> Result<f64>,
    h: f64,
    dt: f64,
) -> Result<FirstVariation> {
    let weight = |p: &[f64]| -> Result<f64> { Ok(log_weight(p)?.exp()) };
    let energy = |t: f64| -> Result<f64> {
        let map = |p: &[f64]| family(p, t);
        let mut e = 0.0;
        for (k, node) in mesh.nodes.iter().enumerate() {
            let df = frame_jacobian(mesh, k, &map, h)?;
            let density: f64 = df.iter().map(|v| norm_sq(v)).sum();
            e += 0.5 * density * weight(&node.param)? * node.weight;
        }
        Ok(e)
    };
    let mut es = [0.0; 4];
    for (slot, s) in es.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
        *slot = energy(s * dt)?;
    }
    let fd_derivative = (es[0] - 8.0 * es[1] + 8.0 * es[2] - es[3]) / (12.0 * dt);

    let map0 = |p: &[f64]| family(p, 0.0);
    let mut formula = 0.0;
    let mut rim_max: f64 = 0.0;
    let mut all_max: f64 = 0.0;
    for (k, node) in mesh.nodes.iter().enumerate() {
        let step = mesh.node_step(k, h);
        let fjet = fd::jet_o4(&map0, &node.param, step)?;
        let (_, dlogw, _) = fd::scalar_jet_o4(log_weight, &node.param, step)?;
        let dtf = fd::jacobian_o4(&|t: &[f64]| family(&node.param, t[0]), &[0.0], dt)?.remove(0);
        let mut pairing = 0.0;
        for c in 0..fjet.len() {
            let sj = ScalarJet {
                value: fjet.value[c],
                grad: fjet.d1.iter().map(|r| r[c]).collect(),
                hess: fjet.d2.iter().map(|r| r.iter().map(|v| v[c]).collect()).collect(),
            };
            let tau_c = super::weighted_laplacian_from_jets(&node.jet, &sj, &dlogw)?;
            pairing += dtf[c] * tau_c;
        }
        formula -= pairing * weight(&node.param)? * node.weight;
        let size = norm_sq(&dtf).sqrt();
        all_max = all_max.max(size);
        if mesh.on_rim(k) {
            rim_max = rim_max.max(size);
        }
    }
    Ok(FirstVariation {
        fd_derivative,
        formula,
        residual: fd_derivative - formula,
        boundary_warning: !mesh.closed && rim_max > 1e-12 * all_max.max(f64::MIN_POSITIVE),
    })
}

/// `log ρ = −|X|²/4` as a function of the parameters.
pub fn log_rho<I: Immersion + ?Sized>(imm: &I) -> impl Fn(&[f64]) -> Result<f64> + '_ {
    move |p: &[f64]| Ok(-norm_sq(&imm.jet(p)?.value) / 4.0)
}

/// Gauss map in Plücker coordinates as a function of the parameters.
pub fn plucker_gauss_map<I: Immersion + ?Sized>(imm: &I) -> impl Fn(&[f64]) -> Result<Vec<f64>> + '_ {
    move |p: &[f64]| {
        let q = frame_from_jet(p, &imm.jet(p)?, imm.codim())?;
        Ok(crate::grassmann::plucker(&q.tangent))
    }
}

/// `Σ_i ⟨f_*e_i, f_*e_i⟩` at a node; exposed for energy-density checks.
pub fn energy_density_at(mesh: &WeightedPatchMesh, node: usize, map: &MapFn<'_>, h: f64) -> Result<f64> {
    Ok(frame_jacobian(mesh, node, map, h)?.iter().map(|v| dot(v, v)).sum())
}
