//! Graphic self-shrinkers `x ↦ (x, u(x))` over a grid on `[−L, L]ⁿ`.
//!
//! The graph of u: ℝⁿ → ℝᵐ is a self-shrinker iff
//! `g^{ij} u^α_{ij} = ½(x·Du^α − u^α)` with `g_ij = δ_ij + u^α_i u^α_j`.
//! [`system_residual`] evaluates the difference of the two sides with central
//! differences; [`flow::relax_flow`] drives it to zero with Dirichlet data.
//!
//! Nodes are numbered row-major with axis 0 slowest. Boundary nodes are those
//! with some index equal to 0 or N − 1; derivatives are only taken at interior
//! nodes.

pub mod flow;

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fd::Jet;
use crate::grassmann::{self, OrientedFrame};
use crate::immersion::{frame_from_jet, shrinker_residual, PointFrame};
use crate::sphere::{self, Region, UnitVector};

pub use flow::{relax_flow, FlowError, FlowSample, FlowTrace, Scheme, SolverConfig, StepPolicy};

/// Minimum number of nodes per axis.
pub const MIN_RESOLUTION: usize = 5;

/// Central-difference order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StencilOrder {
    #[default]
    Second,
    Fourth,
}

impl StencilOrder {
    /// Half-width of the stencil in nodes.
    pub fn reach(self) -> usize {
        match self {
            StencilOrder::Second => 1,
            StencilOrder::Fourth => 2,
        }
    }

    fn d1(self) -> &'static [(isize, f64)] {
        match self {
            StencilOrder::Second => &[(-1, -0.5), (1, 0.5)],
            StencilOrder::Fourth => &[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        }
    }

    fn d2(self) -> &'static [(isize, f64)] {
        match self {
            StencilOrder::Second => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
            StencilOrder::Fourth => &[
                (-2, -1.0 / 12.0),
                (-1, 16.0 / 12.0),
                (0, -30.0 / 12.0),
                (1, 16.0 / 12.0),
                (2, -1.0 / 12.0),
            ],
        }
    }
}

/// Dirichlet data on the boundary of the box.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    /// `u = A x + b` on boundary nodes.
    Affine { a: DMatrix<f64>, b: Vec<f64> },
    /// Boundary nodes keep whatever values they hold.
    Frozen,
}

impl BoundaryCondition {
    pub fn linear(a: DMatrix<f64>) -> Self {
        let m = a.nrows();
        BoundaryCondition::Affine { a, b: vec![0.0; m] }
    }
}

/// Values of u: [−L, L]ⁿ → ℝᵐ on a uniform tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    m: usize,
    half_width: f64,
    resolution: Vec<usize>,
    strides: Vec<usize>,
    /// `values[node * m + α]`.
    values: Vec<f64>,
    pub boundary: BoundaryCondition,
}

/// First and second derivatives of a field at one node, `(Du[α][i], D²u[α][i][j])`.
pub type Derivatives = (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>);

impl GridField {
    /// The zero field. Boundary data is not applied.
    pub fn zeros(
        n: usize,
        m: usize,
        half_width: f64,
        resolution: Vec<usize>,
        boundary: BoundaryCondition,
    ) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::invalid("grid fields need n, m >= 1"));
        }
        if resolution.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: resolution.len(),
            });
        }
        if resolution.iter().any(|&r| r < MIN_RESOLUTION) {
            return Err(Error::invalid("resolution must be at least 5 nodes per axis"));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid("box half-width must be positive"));
        }
        if let BoundaryCondition::Affine { a, b } = &boundary {
            if a.nrows() != m || a.ncols() != n || b.len() != m {
                return Err(Error::invalid("affine boundary data has the wrong shape"));
            }
        }
        let mut strides = vec![1; n];
        for a in (0..n - 1).rev() {
            strides[a] = strides[a + 1] * resolution[a + 1];
        }
        let count: usize = resolution.iter().product();
        Ok(GridField {
            n,
            m,
            half_width,
            resolution,
            strides,
            values: vec![0.0; count * m],
            boundary,
        })
    }

    /// Samples `f` at every node, then applies the boundary data.
    pub fn from_fn(
        n: usize,
        m: usize,
        half_width: f64,
        resolution: Vec<usize>,
        boundary: BoundaryCondition,
        f: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let mut g = GridField::zeros(n, m, half_width, resolution, boundary)?;
        for node in 0..g.node_count() {
            let v = f(&g.coords(node));
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: v.len(),
                });
            }
            g.values[node * m..(node + 1) * m].copy_from_slice(&v);
        }
        g.apply_boundary();
        Ok(g)
    }

    /// The affine field `A x + b` with matching boundary data.
    pub fn affine(half_width: f64, resolution: Vec<usize>, a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let (m, n) = a.shape();
        let (aa, bb) = (a.clone(), b.clone());
        GridField::from_fn(
            n,
            m,
            half_width,
            resolution,
            BoundaryCondition::Affine { a, b },
            move |x| {
                (0..m)
                    .map(|al| bb[al] + (0..n).map(|i| aa[(al, i)] * x[i]).sum::<f64>())
                    .collect()
            },
        )
    }

    /// Rebuilds a field from raw node values (e.g. read from a file).
    pub fn from_values(
        n: usize,
        m: usize,
        half_width: f64,
        resolution: Vec<usize>,
        boundary: BoundaryCondition,
        values: Vec<f64>,
    ) -> Result<Self> {
        let mut g = GridField::zeros(n, m, half_width, resolution, boundary)?;
        if values.len() != g.values.len() {
            return Err(Error::DimensionMismatch {
                expected: g.values.len(),
                got: values.len(),
            });
        }
        g.values = values;
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn node_count(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Grid spacing along an axis.
    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_width / (self.resolution[axis] - 1) as f64
    }

    pub fn index(&self, node: usize) -> Vec<usize> {
        let mut rest = node;
        self.strides
            .iter()
            .map(|s| {
                let i = rest / s;
                rest %= s;
                i
            })
            .collect()
    }

    pub fn node(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.index(node)
            .iter()
            .enumerate()
            .map(|(a, &i)| -self.half_width + i as f64 * self.spacing(a))
            .collect()
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    /// Number of nodes between `node` and the nearest boundary face.
    pub fn depth(&self, node: usize) -> usize {
        self.index(node)
            .iter()
            .zip(&self.resolution)
            .map(|(&i, &r)| i.min(r - 1 - i))
            .min()
            .unwrap_or(0)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.depth(node) == 0
    }

    /// Nodes where the full stencil of the given order fits.
    pub fn interior(&self, order: StencilOrder) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&k| self.depth(k) >= order.reach())
            .collect()
    }

    /// Overwrites boundary nodes with affine data (no-op for frozen data).
    pub fn apply_boundary(&mut self) {
        if let BoundaryCondition::Affine { a, b } = &self.boundary {
            let (a, b) = (a.clone(), b.clone());
            for node in 0..self.node_count() {
                if self.is_boundary(node) {
                    let x = self.coords(node);
                    for al in 0..self.m {
                        self.values[node * self.m + al] = b[al] + (0..self.n).map(|i| a[(al, i)] * x[i]).sum::<f64>();
                    }
                }
            }
        }
    }

    /// `max |u − (A x + b)|` over all nodes, for affine boundary data.
    pub fn deviation_from_affine(&self) -> Option<f64> {
        let BoundaryCondition::Affine { a, b } = &self.boundary else {
            return None;
        };
        let mut worst: f64 = 0.0;
        for node in 0..self.node_count() {
            let x = self.coords(node);
            for al in 0..self.m {
                let target = b[al] + (0..self.n).map(|i| a[(al, i)] * x[i]).sum::<f64>();
                worst = worst.max((self.values[node * self.m + al] - target).abs());
            }
        }
        Some(worst)
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |s, v| s.max(v.abs()))
    }

    /// Stencil order usable at a node: the requested one where it fits,
    /// second order in the first interior layer.
    pub(crate) fn order_at(&self, node: usize, order: StencilOrder) -> StencilOrder {
        if self.depth(node) >= order.reach() {
            order
        } else {
            StencilOrder::Second
        }
    }

    /// Weights of `∂_i` at a node, as (node, weight) pairs.
    pub(crate) fn d1_weights(&self, node: usize, i: usize, order: StencilOrder) -> Vec<(usize, f64)> {
        let h = self.spacing(i);
        let s = self.strides[i] as isize;
        order
            .d1()
            .iter()
            .map(|&(o, w)| ((node as isize + o * s) as usize, w / h))
            .collect()
    }

    /// Weights of `∂_i∂_j` at a node.
    pub(crate) fn d2_weights(&self, node: usize, i: usize, j: usize, order: StencilOrder) -> Vec<(usize, f64)> {
        if i == j {
            let h = self.spacing(i);
            let s = self.strides[i] as isize;
            return order
                .d2()
                .iter()
                .map(|&(o, w)| ((node as isize + o * s) as usize, w / (h * h)))
                .collect();
        }
        let (hi, hj) = (self.spacing(i), self.spacing(j));
        let (si, sj) = (self.strides[i] as isize, self.strides[j] as isize);
        let mut out = Vec::with_capacity(16);
        for &(oi, wi) in order.d1() {
            for &(oj, wj) in order.d1() {
                out.push(((node as isize + oi * si + oj * sj) as usize, wi * wj / (hi * hj)));
            }
        }
        out
    }

    fn apply(&self, weights: &[(usize, f64)], al: usize) -> f64 {
        weights.iter().map(|&(k, w)| w * self.values[k * self.m + al]).sum()
    }

    /// `Du[α][i]` and `D²u[α][i][j]` at an interior node.
    pub fn derivatives(&self, node: usize, order: StencilOrder) -> Result<Derivatives> {
        if self.is_boundary(node) {
            return Err(Error::OutsideDomain {
                param: self.coords(node),
            });
        }
        let order = self.order_at(node, order);
        let (n, m) = (self.n, self.m);
        let mut du = vec![vec![0.0; n]; m];
        let mut ddu = vec![vec![vec![0.0; n]; n]; m];
        for i in 0..n {
            let w1 = self.d1_weights(node, i, order);
            for al in 0..m {
                du[al][i] = self.apply(&w1, al);
            }
            for j in i..n {
                let w2 = self.d2_weights(node, i, j, order);
                for al in 0..m {
                    let v = self.apply(&w2, al);
                    ddu[al][i][j] = v;
                    ddu[al][j][i] = v;
                }
            }
        }
        Ok((du, ddu))
    }

    /// Jet of the graph immersion `x ↦ (x, u(x))` at an interior node.
    pub fn graph_jet(&self, node: usize, order: StencilOrder) -> Result<Jet> {
        let (du, ddu) = self.derivatives(node, order)?;
        let (n, m) = (self.n, self.m);
        let x = self.coords(node);
        let mut jet = Jet::zeros(n, n + m);
        for i in 0..n {
            jet.value[i] = x[i];
            jet.d1[i][i] = 1.0;
        }
        for al in 0..m {
            jet.value[n + al] = self.values[node * m + al];
            for i in 0..n {
                jet.d1[i][n + al] = du[al][i];
                for j in 0..n {
                    jet.d2[i][j][n + al] = ddu[al][i][j];
                }
            }
        }
        Ok(jet)
    }

    /// Point frame of the graph at an interior node.
    pub fn point_frame(&self, node: usize, order: StencilOrder) -> Result<PointFrame> {
        let jet = self.graph_jet(node, order)?;
        frame_from_jet(&self.coords(node), &jet, self.m)
    }
}

/// `g_ij = δ_ij + Σ_α u^α_i u^α_j`.
pub fn graph_metric(du: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta + du.iter().map(|d| d[i] * d[j]).sum::<f64>()
    })
}

/// `g^{ij}` by Cholesky; g ≥ I so this cannot fail.
pub fn inverse_graph_metric(du: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    graph_metric(du, n)
        .cholesky()
        .expect("g = I + DuᵀDu is positive definite")
        .inverse()
}

/// A scalar or vector quantity on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorField {
    pub nodes: Vec<usize>,
    /// One row per entry of `nodes`.
    pub values: Vec<Vec<f64>>,
}

impl InteriorField {
    pub fn sup_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |s, v| s.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|r| r.iter())
            .fold(f64::NEG_INFINITY, |s, &v| s.max(v))
    }

    pub fn min(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|r| r.iter())
            .fold(f64::INFINITY, |s, &v| s.min(v))
    }
}

/// `g^{ij} u^α_{ij} − ½(x·Du^α − u^α)` at one interior node.
pub fn node_residual(u: &GridField, node: usize, order: StencilOrder) -> Result<Vec<f64>> {
    let (du, ddu) = u.derivatives(node, order)?;
    let n = u.n();
    let ginv = inverse_graph_metric(&du, n);
    let x = u.coords(node);
    Ok((0..u.m())
        .map(|al| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += ginv[(i, j)] * ddu[al][i][j];
                }
            }
            let xdu: f64 = (0..n).map(|i| x[i] * du[al][i]).sum();
            s - 0.5 * (xdu - u.value(node)[al])
        })
        .collect())
}

/// The system residual on nodes where the full stencil fits.
pub fn system_residual(u: &GridField, order: StencilOrder) -> Result<InteriorField> {
    let nodes = u.interior(order);
    let values = nodes
        .iter()
        .map(|&k| node_residual(u, k, order))
        .collect::<Result<Vec<_>>>()?;
    Ok(InteriorField { nodes, values })
}

/// `Δ_u = det(δ_ij + Σ u^α_i u^α_j)^{1/2}` on interior nodes.
pub fn slope(u: &GridField, order: StencilOrder) -> Result<InteriorField> {
    let nodes = u.interior(order);
    let values = nodes
        .iter()
        .map(|&k| {
            let (du, _) = u.derivatives(k, order)?;
            Ok(vec![graph_metric(&du, u.n()).determinant().sqrt()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InteriorField { nodes, values })
}

/// `|B|²` of the graph on interior nodes.
pub fn second_fundamental_form_sq(u: &GridField, order: StencilOrder) -> Result<InteriorField> {
    let nodes = u.interior(order);
    let values = nodes
        .iter()
        .map(|&k| Ok(vec![u.point_frame(k, order)?.b_norm_sq()]))
        .collect::<Result<Vec<_>>>()?;
    Ok(InteriorField { nodes, values })
}

/// `H + ½X^N` of the graph at an interior node, in the frame of
/// [`GridField::point_frame`].
pub fn graph_shrinker_residual(u: &GridField, node: usize, order: StencilOrder) -> Result<Vec<f64>> {
    Ok(shrinker_residual(&u.point_frame(node, order)?))
}

/// Counts of Gauss-image points per region of the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RegionCounts {
    pub open_hemisphere: usize,
    pub hemisphere_boundary: usize,
    pub v_region: usize,
    pub outside: usize,
}

/// Gauss-image summary against the hypotheses of the rigidity theorems.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussImageReport {
    pub nodes: usize,
    /// `min w(γ, P₀)` over interior nodes.
    pub min_w: f64,
    /// `max v(γ, P₀)`; infinite if some tangent plane is orthogonal to P₀.
    pub max_v: f64,
    /// `min ⟨γ, a⟩` (m = 1 with a pole).
    pub min_pole_dot: Option<f64>,
    pub regions: Option<RegionCounts>,
    /// Gauss image in the open hemisphere about a.
    pub open_hemisphere: Option<bool>,
    /// Gauss image in the closed hemisphere, touching its boundary.
    pub closed_hemisphere_boundary_case: Option<bool>,
    /// Gauss image avoids the closed half great sphere removed from 𝕍.
    pub in_v_region: Option<bool>,
    /// `sup v < 3`.
    pub v_below_three: bool,
}

/// Evaluates the Gauss map on interior nodes and summarises it.
///
/// For m = 1 the Gauss map is the unit normal whose last component is
/// positive for graphs. Region counts follow the sphere classification with
/// the default tolerance.
pub fn gauss_image_report(
    u: &GridField,
    reference: &OrientedFrame,
    pole: Option<&UnitVector>,
    order: StencilOrder,
) -> Result<GaussImageReport> {
    let nodes = u.interior(order);
    let mut min_w = f64::INFINITY;
    let mut max_v: f64 = 0.0;
    let mut min_dot = f64::INFINITY;
    let mut counts = RegionCounts::default();
    let mut all_v = true;
    let sphere_case = u.m() == 1 && pole.is_some();
    for &k in &nodes {
        let pf = u.point_frame(k, order)?;
        let gamma = pf.gauss_map();
        let w = grassmann::w_product(&gamma, reference)?;
        min_w = min_w.min(w);
        let spec = grassmann::jordan_spectrum(&gamma, reference)?;
        max_v = max_v.max(grassmann::v_value(&spec).unwrap_or(f64::INFINITY));
        if let (true, Some(a)) = (sphere_case, pole) {
            let nu = UnitVector::normalized(&pf.normal[0])?;
            min_dot = min_dot.min(nu.dot(a));
            match sphere::region_membership(&nu, a)? {
                Region::OpenHemisphere => counts.open_hemisphere += 1,
                Region::ClosedHemisphereBoundary => counts.hemisphere_boundary += 1,
                Region::VRegion => counts.v_region += 1,
                Region::Outside => counts.outside += 1,
            }
            all_v &= sphere::in_v_region(&nu);
        }
    }
    let total = nodes.len();
    Ok(GaussImageReport {
        nodes: total,
        min_w,
        max_v,
        min_pole_dot: sphere_case.then_some(min_dot),
        regions: sphere_case.then_some(counts),
        open_hemisphere: sphere_case.then_some(counts.open_hemisphere == total),
        closed_hemisphere_boundary_case: sphere_case
            .then_some(counts.hemisphere_boundary > 0 && counts.open_hemisphere + counts.hemisphere_boundary == total),
        in_v_region: sphere_case.then_some(all_v),
        v_below_three: max_v < 3.0,
    })
}
