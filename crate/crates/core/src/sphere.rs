//! The sphere target Sⁿ ⊂ ℝⁿ⁺¹.
//!
//! Points are [`UnitVector`]s, tangent spaces are described by caller-supplied
//! orthonormal frames ([`TangentFrame`]) and every second-order quantity comes
//! back as a [`SymBilinearForm`] in the coordinates of that frame.
//!
//! Two families of functions are implemented in closed form:
//!
//! * the height functions `(·, a)` and `F = 1 − (·, a)`, whose Hessian is
//!   `−(x, a) g_s`;
//! * the longitude chart `(r, θ)` on 𝕍, the sphere with the closed half great
//!   sphere `{x₂ = 0, x₁ ≤ 0}` removed. With `r = √(x₁² + x₂²)` and
//!   `θ = atan2(x₂, x₁)`,
//!   `Hess r = −r g_s + r dθ⊗dθ` and `Hess θ = −r⁻¹ (dr⊗dθ + dθ⊗dr)`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::DMatrix;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, orthonormality_defect, scaled};

/// Norm tolerance accepted by [`UnitVector::new`].
pub const UNIT_TOL: f64 = 1e-12;

/// Default tolerance for [`classify_region`].
pub const REGION_TOL: f64 = 1e-9;

/// A point of Sⁿ in Euclidean coordinates of ℝⁿ⁺¹.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Accepts `coords` only if `||coords| − 1| ≤ 1e−12`.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if coords.len() < 2 || !((n - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::NotUnit { norm: n });
        }
        Ok(UnitVector { coords })
    }

    /// Rescales a nonzero vector onto the sphere.
    pub fn normalized(coords: &[f64]) -> Result<Self> {
        let n = norm(coords);
        if !(n > 0.0) || !n.is_finite() || coords.len() < 2 {
            return Err(Error::NotUnit { norm: n });
        }
        Ok(UnitVector {
            coords: scaled(1.0 / n, coords),
        })
    }

    /// The standard basis vector εᵢ (0-based) of ℝ^{dim}.
    pub fn basis(dim: usize, i: usize) -> Self {
        UnitVector {
            coords: crate::linalg::unit(dim, i),
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Ambient dimension n + 1.
    pub fn ambient_dim(&self) -> usize {
        self.coords.len()
    }

    /// Dimension n of the sphere.
    pub fn sphere_dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }
}

/// An orthonormal basis of T_x Sⁿ, stored as n vectors of ℝⁿ⁺¹.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame {
    vectors: Vec<Vec<f64>>,
}

impl TangentFrame {
    /// Validates that `vectors` are n orthonormal vectors orthogonal to `x`
    /// (tolerance 1e−10).
    pub fn new(x: &UnitVector, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let n = x.sphere_dim();
        if vectors.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: vectors.len(),
            });
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != x.ambient_dim() {
                return Err(Error::DimensionMismatch {
                    expected: x.ambient_dim(),
                    got: v.len(),
                });
            }
            let defect = dot(v, x.coords()).abs().max((norm(v) - 1.0).abs());
            if !(defect <= 1e-10) {
                return Err(Error::BadTangentBasis { index: i, defect });
            }
        }
        let defect = orthonormality_defect(&vectors);
        if !(defect <= 1e-10) {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(TangentFrame { vectors })
    }

    /// A deterministic orthonormal tangent frame at `x`.
    pub fn complete(x: &UnitVector) -> Self {
        let n = x.sphere_dim();
        let vectors = crate::linalg::complete_orthonormal(&[x.coords().to_vec()], x.ambient_dim(), n);
        TangentFrame { vectors }
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// The ambient vector Σ cᵢ bᵢ.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.vectors[0].len()];
        for (c, b) in coeffs.iter().zip(&self.vectors) {
            axpy(*c, b, &mut out);
        }
        out
    }

    /// Coordinates ⟨v, bᵢ⟩ of an ambient vector.
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|b| dot(b, v)).collect()
    }
}

/// A symmetric bilinear form on a d-dimensional space, in a fixed basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBilinearForm {
    entries: DMatrix<f64>,
}

impl SymBilinearForm {
    /// Accepts a square matrix whose asymmetry is at most 1e−12 (relative to its
    /// largest entry, floored at 1).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let scale = entries.amax().max(1.0);
        let asym = (&entries - entries.transpose()).amax();
        if !(asym <= 1e-12 * scale) {
            return Err(Error::invalid("bilinear form is not symmetric"));
        }
        Ok(SymBilinearForm { entries })
    }

    pub fn zeros(d: usize) -> Self {
        SymBilinearForm {
            entries: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(d: usize) -> Self {
        SymBilinearForm {
            entries: DMatrix::identity(d, d),
        }
    }

    /// `a⊗b + b⊗a`.
    pub fn sym_outer(a: &[f64], b: &[f64]) -> Self {
        let d = a.len();
        SymBilinearForm {
            entries: DMatrix::from_fn(d, d, |i, j| a[i] * b[j] + b[i] * a[j]),
        }
    }

    /// `a⊗a`.
    pub fn square(a: &[f64]) -> Self {
        let d = a.len();
        SymBilinearForm {
            entries: DMatrix::from_fn(d, d, |i, j| a[i] * a[j]),
        }
    }

    pub fn dimension(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn scale(&self, c: f64) -> Self {
        SymBilinearForm {
            entries: &self.entries * c,
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        SymBilinearForm {
            entries: &self.entries + &other.entries,
        }
    }

    /// B(v, w) for coefficient vectors in the form's basis.
    pub fn eval(&self, v: &[f64], w: &[f64]) -> f64 {
        let d = self.dimension();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += v[i] * self.entries[(i, j)] * w[j];
            }
        }
        s
    }

    /// B(v, v).
    pub fn quad(&self, v: &[f64]) -> f64 {
        self.eval(v, v)
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.entries - &other.entries).amax()
    }
}

fn check_same_dim(x: &UnitVector, a: &UnitVector) -> Result<()> {
    if x.ambient_dim() != a.ambient_dim() {
        return Err(Error::DimensionMismatch {
            expected: x.ambient_dim(),
            got: a.ambient_dim(),
        });
    }
    Ok(())
}

fn check_frame(x: &UnitVector, basis: &TangentFrame) -> Result<()> {
    if basis.dim() != x.sphere_dim() {
        return Err(Error::DimensionMismatch {
            expected: x.sphere_dim(),
            got: basis.dim(),
        });
    }
    for (i, b) in basis.vectors().iter().enumerate() {
        let defect = dot(b, x.coords()).abs();
        if !(defect <= 1e-10) {
            return Err(Error::BadTangentBasis { index: i, defect });
        }
    }
    Ok(())
}

/// F(x) = 1 − ⟨x, a⟩ ∈ [0, 2].
pub fn height_value(x: &UnitVector, a: &UnitVector) -> Result<f64> {
    check_same_dim(x, a)?;
    Ok(1.0 - x.dot(a))
}

/// dF in the frame: dF(bᵢ) = −⟨bᵢ, a⟩.
pub fn height_differential(x: &UnitVector, a: &UnitVector, basis: &TangentFrame) -> Result<Vec<f64>> {
    check_same_dim(x, a)?;
    check_frame(x, basis)?;
    Ok(basis.vectors().iter().map(|b| -dot(b, a.coords())).collect())
}

/// Hess(·, a) at x: the form −⟨x, a⟩ g_s. This is also Hess F = (1 − F) g_s.
pub fn hess_height(x: &UnitVector, a: &UnitVector, basis: &TangentFrame) -> Result<SymBilinearForm> {
    check_same_dim(x, a)?;
    check_frame(x, basis)?;
    Ok(SymBilinearForm::identity(basis.dim()).scale(-x.dot(a)))
}

/// Polar coordinates of the projection p(x) = (x₁, x₂) = (r cos θ, r sin θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongitudeCoords {
    pub r: f64,
    pub theta: f64,
}

impl LongitudeCoords {
    /// (r cos θ, r sin θ).
    pub fn reconstruct(&self) -> (f64, f64) {
        (self.r * self.theta.cos(), self.r * self.theta.sin())
    }
}

/// Whether `x` lies in 𝕍, i.e. (x₁, x₂) avoids the ray {(t, 0) : t ≤ 0}.
pub fn in_v_region(x: &UnitVector) -> bool {
    let (x1, x2) = (x.coords()[0], x.coords()[1]);
    !(x2 == 0.0 && x1 <= 0.0)
}

/// Longitude coordinates of a point of 𝕍.
///
/// `atan2` returns θ = π on the deleted ray itself, so every accepted point has
/// θ ∈ (−π, π).
pub fn longitude_coords(x: &UnitVector) -> Result<LongitudeCoords> {
    let (x1, x2) = (x.coords()[0], x.coords()[1]);
    let theta = x2.atan2(x1);
    if !in_v_region(x) || !(theta.abs() < PI) {
        return Err(Error::OutsideChart {
            point: x.coords().to_vec(),
        });
    }
    Ok(LongitudeCoords { r: x1.hypot(x2), theta })
}

/// (dr, dθ) evaluated on the frame vectors:
/// `dr(b) = (x₁b₁ + x₂b₂)/r`, `dθ(b) = (x₁b₂ − x₂b₁)/r²`.
pub fn longitude_differentials(x: &UnitVector, basis: &TangentFrame) -> Result<(Vec<f64>, Vec<f64>)> {
    let lc = longitude_coords(x)?;
    check_frame(x, basis)?;
    let (x1, x2) = (x.coords()[0], x.coords()[1]);
    let r = lc.r;
    let dr = basis.vectors().iter().map(|b| (x1 * b[0] + x2 * b[1]) / r).collect();
    let dth = basis
        .vectors()
        .iter()
        .map(|b| (x1 * b[1] - x2 * b[0]) / (r * r))
        .collect();
    Ok((dr, dth))
}

/// (Hess r, Hess θ) at a point of 𝕍.
pub fn hess_r_theta(x: &UnitVector, basis: &TangentFrame) -> Result<(SymBilinearForm, SymBilinearForm)> {
    let r = longitude_coords(x)?.r;
    let (dr, dth) = longitude_differentials(x, basis)?;
    let d = basis.dim();
    let hess_r = SymBilinearForm::identity(d)
        .scale(-r)
        .plus(&SymBilinearForm::square(&dth).scale(r));
    let hess_theta = SymBilinearForm::sym_outer(&dr, &dth).scale(-1.0 / r);
    Ok((hess_r, hess_theta))
}

/// Classification of a point of Sⁿ relative to a pole `a` and the chart 𝕍.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// ⟨x, a⟩ > tol.
    OpenHemisphere,
    /// |⟨x, a⟩| ≤ tol.
    ClosedHemisphereBoundary,
    /// ⟨x, a⟩ < −tol but x ∈ 𝕍 (at distance > tol from the deleted set).
    VRegion,
    /// Everything else: the far hemisphere intersected with the deleted set.
    Outside,
}

/// Classifies `x` with the default tolerance 1e−9.
pub fn region_membership(x: &UnitVector, a: &UnitVector) -> Result<Region> {
    classify_region(x, a, REGION_TOL)
}

/// Hemisphere tests take precedence over 𝕍 membership. Points within `tol` of
/// the deleted ray (|x₂| ≤ tol and x₁ ≤ tol) count as outside 𝕍.
pub fn classify_region(x: &UnitVector, a: &UnitVector, tol: f64) -> Result<Region> {
    check_same_dim(x, a)?;
    let s = x.dot(a);
    if s.abs() <= tol {
        return Ok(Region::ClosedHemisphereBoundary);
    }
    if s > 0.0 {
        return Ok(Region::OpenHemisphere);
    }
    let (x1, x2) = (x.coords()[0], x.coords()[1]);
    if x2.abs() <= tol && x1 <= tol {
        Ok(Region::Outside)
    } else {
        Ok(Region::VRegion)
    }
}

/// The great circle `cos t · x + sin t · v` through x with unit tangent v.
pub fn great_circle(x: &UnitVector, v: &[f64], t: f64) -> Vec<f64> {
    let (s, c) = t.sin_cos();
    x.coords().iter().zip(v).map(|(xi, vi)| c * xi + s * vi).collect()
}

/// Uniform random point of Sⁿ (n + 1 = `ambient`).
pub fn random_point<R: Rng + ?Sized>(rng: &mut R, ambient: usize) -> UnitVector {
    loop {
        let v: Vec<f64> = (0..ambient).map(|_| rng.sample(StandardNormal)).collect();
        if norm(&v) > 1e-6 {
            return UnitVector::normalized(&v).expect("nonzero");
        }
    }
}

/// Random unit tangent vector at x.
pub fn random_tangent<R: Rng + ?Sized>(rng: &mut R, x: &UnitVector) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..x.ambient_dim()).map(|_| rng.sample(StandardNormal)).collect();
        let c = dot(&v, x.coords());
        axpy(-c, x.coords(), &mut v);
        let l = norm(&v);
        if l > 1e-6 {
            return scaled(1.0 / l, &v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn u(v: &[f64]) -> UnitVector {
        UnitVector::normalized(v).unwrap()
    }

    #[test]
    fn height_trivial_values() {
        let a = u(&[0.0, 0.6, 0.8]);
        let minus_a = u(&[0.0, -0.6, -0.8]);
        let perp = u(&[1.0, 0.0, 0.0]);
        assert_eq!(height_value(&a, &a).unwrap(), 0.0);
        assert!((height_value(&minus_a, &a).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(height_value(&perp, &a).unwrap(), 1.0);
    }

    #[test]
    fn unit_check_rejects_long_vectors() {
        assert!(matches!(
            UnitVector::new(vec![1.0, 1e-5, 0.0]),
            Err(Error::NotUnit { .. })
        ));
        let a = u(&[1.0, 0.0, 0.0]);
        let b = UnitVector::new(vec![0.0, 1.0]).unwrap();
        assert!(height_value(&a, &b).is_err());
    }

    #[test]
    fn hess_height_at_pole_and_equator() {
        let a = u(&[0.0, 0.0, 1.0]);
        let basis = TangentFrame::complete(&a);
        let h = hess_height(&a, &a, &basis).unwrap();
        assert_eq!(h, SymBilinearForm::identity(2).scale(-1.0));
        let x = u(&[1.0, 0.0, 0.0]);
        let basis = TangentFrame::complete(&x);
        let h = hess_height(&x, &a, &basis).unwrap();
        assert!(h.entries().amax() == 0.0);
    }

    #[test]
    fn non_tangent_basis_is_rejected() {
        let x = u(&[1.0, 0.0, 0.0]);
        let bad = TangentFrame::new(&x, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert!(matches!(bad, Err(Error::BadTangentBasis { index: 0, .. })));
    }

    #[test]
    fn longitude_trivial_points() {
        let lc = longitude_coords(&u(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!((lc.r, lc.theta), (1.0, 0.0));
        let lc = longitude_coords(&u(&[0.0, 1.0, 0.0])).unwrap();
        assert!((lc.r - 1.0).abs() < 1e-15 && (lc.theta - PI / 2.0).abs() < 1e-15);
        let err = longitude_coords(&u(&[-1.0, 0.0, 0.0])).unwrap_err();
        assert_eq!(
            err,
            Error::OutsideChart {
                point: vec![-1.0, 0.0, 0.0]
            }
        );
        // r = 0 is part of the deleted set.
        assert!(longitude_coords(&u(&[0.0, 0.0, 1.0])).is_err());
        // -0.0 in the second slot is still on the deleted ray.
        assert!(longitude_coords(&u(&[-1.0, -0.0, 0.0])).is_err());
    }

    #[test]
    fn hess_r_toward_third_axis() {
        let x = u(&[1.0, 0.0, 0.0]);
        let basis = TangentFrame::new(&x, vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let (hr, _) = hess_r_theta(&x, &basis).unwrap();
        assert!((hr.quad(&[0.0, 1.0]) + 1.0).abs() < 1e-15);
        let fd_val = fd::d2(
            |t| {
                let p = great_circle(&x, &[0.0, 0.0, 1.0], t);
                p[0].hypot(p[1])
            },
            1e-4,
        );
        assert!((fd_val + 1.0).abs() < 1e-6);
    }

    #[test]
    fn region_examples() {
        let a = u(&[1.0, 0.0, 0.0]);
        assert_eq!(region_membership(&a, &a).unwrap(), Region::OpenHemisphere);
        let eq = u(&[0.0, 0.0, 1.0]);
        assert_eq!(region_membership(&eq, &a).unwrap(), Region::ClosedHemisphereBoundary);
        let back = u(&[-1.0, 0.0, 0.0]);
        assert_eq!(region_membership(&back, &a).unwrap(), Region::Outside);
        let side = u(&[-1.0, 0.5, 0.0]);
        assert_eq!(region_membership(&side, &a).unwrap(), Region::VRegion);
    }

    /// Second derivative along the great circle through x with direction v.
    fn fd_hess(f: impl Fn(&[f64]) -> f64, x: &UnitVector, v: &[f64]) -> f64 {
        fd::d2(|t| f(&great_circle(x, v, t)), 1e-4)
    }

    #[test]
    fn height_hessian_matches_great_circle_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0_f64;
        for k in 0..1000 {
            let dim = 2 + k % 4;
            let x = random_point(&mut rng, dim);
            let a = random_point(&mut rng, dim);
            let v = random_tangent(&mut rng, &x);
            let fd_val = fd_hess(|p| dot(p, a.coords()), &x, &v);
            worst = worst.max((fd_val + x.dot(&a)).abs());
            let basis = TangentFrame::complete(&x);
            let h = hess_height(&x, &a, &basis).unwrap();
            let c = basis.coordinates(&v);
            assert!((h.quad(&c) + x.dot(&a)).abs() < 1e-12);
        }
        assert!(worst <= 1e-6, "worst {worst:e}");
    }

    #[test]
    fn longitude_hessians_match_great_circle_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut count = 0;
        while count < 600 {
            let dim = 3 + count % 3;
            let x = random_point(&mut rng, dim);
            let lc = longitude_coords(&x).unwrap();
            // Keep the stencil inside 𝕍 and away from the axis r = 0.
            if lc.r < 0.1 || PI - lc.theta.abs() < 0.01 {
                continue;
            }
            let v = random_tangent(&mut rng, &x);
            let basis = TangentFrame::complete(&x);
            let c = basis.coordinates(&v);
            let (hr, ht) = hess_r_theta(&x, &basis).unwrap();
            let fr = fd_hess(|p| p[0].hypot(p[1]), &x, &v);
            let ft = fd_hess(|p| p[1].atan2(p[0]), &x, &v);
            let er = (fr - hr.quad(&c)).abs() / hr.quad(&c).abs().max(1.0);
            let et = (ft - ht.quad(&c)).abs() / ht.quad(&c).abs().max(1.0);
            assert!(er <= 1e-6 && et <= 1e-6, "r {er:e} theta {et:e}");
            count += 1;
        }
    }

    #[test]
    fn level_sets_of_theta_are_totally_geodesic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let x = random_point(&mut rng, 4);
            let basis = TangentFrame::complete(&x);
            let (_, dth) = longitude_differentials(&x, &basis).unwrap();
            let (_, ht) = hess_r_theta(&x, &basis).unwrap();
            // Random coefficient vector projected onto ker dθ.
            let mut c: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let k = dot(&c, &dth) / dot(&dth, &dth);
            axpy(-k, &dth.clone(), &mut c);
            assert!(ht.quad(&c).abs() <= 1e-10);
        }
    }

    fn arb_point(dim: usize) -> impl Strategy<Value = UnitVector> {
        proptest::collection::vec(-1.0f64..1.0, dim)
            .prop_filter("nonzero", |v| norm(v) > 1e-3)
            .prop_map(|v| UnitVector::normalized(&v).unwrap())
    }

    proptest! {
        #[test]
        fn hess_height_is_one_minus_f_times_metric(x in arb_point(4), a in arb_point(4)) {
            let basis = TangentFrame::complete(&x);
            let h = hess_height(&x, &a, &basis).unwrap();
            let f = height_value(&x, &a).unwrap();
            // Hess F = −Hess(·,a) should be (1 − F) g_s.
            let expected = SymBilinearForm::identity(3).scale(1.0 - f);
            prop_assert!(h.scale(-1.0).max_abs_diff(&expected) <= 1e-12);
        }

        #[test]
        fn chart_reconstruction(x in arb_point(3)) {
            if let Ok(lc) = longitude_coords(&x) {
                let (a, b) = lc.reconstruct();
                prop_assert!((a - x.coords()[0]).abs() <= 1e-12);
                prop_assert!((b - x.coords()[1]).abs() <= 1e-12);
                prop_assert!(lc.r > 0.0 && lc.r <= 1.0 + 1e-15);
                prop_assert!(lc.theta.abs() < PI);
            }
        }

        #[test]
        fn polarisation_identity(x in arb_point(4), a in arb_point(4),
                                 v in proptest::collection::vec(-1.0f64..1.0, 3),
                                 w in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let basis = TangentFrame::complete(&x);
            let mut forms = vec![hess_height(&x, &a, &basis).unwrap()];
            if let Ok((hr, ht)) = hess_r_theta(&x, &basis) {
                if longitude_coords(&x).unwrap().r > 1e-3 {
                    forms.push(hr);
                    forms.push(ht);
                }
            }
            let vw: Vec<f64> = v.iter().zip(&w).map(|(p, q)| p + q).collect();
            for h in forms {
                let lhs = 2.0 * h.eval(&v, &w);
                let rhs = h.quad(&vw) - h.quad(&v) - h.quad(&w);
                prop_assert!((lhs - rhs).abs() <= 1e-10 * h.entries().amax().max(1.0));
            }
        }
    }
}
