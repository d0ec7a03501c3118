use super::catalog::*;
use super::quadrature::*;
use super::target::*;
use super::*;
use crate::grassmann::{random_orthogonal, w_product};
use crate::linalg::{norm, to_matrix};
use crate::sphere::UnitVector;
use alloc::boxed::Box;
use alloc::vec;
use core::f64::consts::{E, PI};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform parameter keeping a 4th-order stencil (plus slack) inside the chart.
fn random_param<R: Rng>(rng: &mut R, chart: &ChartBox) -> Vec<f64> {
    let pad = 3.0 * chart.fd_step();
    (0..chart.dim())
        .map(|a| {
            if chart.periodic[a] {
                rng.random_range(chart.lo[a]..chart.hi[a])
            } else {
                rng.random_range(chart.lo[a] + pad..chart.hi[a] - pad)
            }
        })
        .collect()
}

fn shrinker_catalog() -> Vec<Box<dyn Immersion>> {
    vec![
        Box::new(ProductSurface::plane(2, 2, 3.0)),
        Box::new(ProductSurface::plane(3, 1, 3.0)),
        Box::new(ProductSurface::shrinker_sphere(1)),
        Box::new(ProductSurface::shrinker_sphere(2)),
        Box::new(ProductSurface::shrinker_sphere(3)),
        Box::new(ProductSurface::cylinder(1, 2, 3.0)),
        Box::new(ProductSurface::cylinder(1, 3, 3.0)),
        Box::new(ProductSurface::cylinder(2, 3, 3.0)),
        Box::new(ProductSurface::area_sphere(2.0)),
        Box::new(ProductSurface::clifford_torus(
            core::f64::consts::SQRT_2,
            core::f64::consts::SQRT_2,
        )),
        Box::new(GraphImmersion::sphere_cap(2.0)),
    ]
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn catalog_shrinkers_have_zero_residual() {
    let mut r = rng(1);
    for imm in shrinker_catalog() {
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let p = random_param(&mut r, imm.chart());
            let pf = point_frame(&imm, &p).unwrap();
            worst = worst.max(max_abs(&shrinker_residual(&pf)));
        }
        assert!(worst <= 1e-10, "{}: residual {worst:e}", imm.name());
    }
}

#[test]
fn frames_are_orthonormal_and_h_symmetric() {
    let mut r = rng(2);
    let surfaces: Vec<Box<dyn Immersion>> = vec![
        Box::new(GraphImmersion::bump(2, 2, 0.7, 0.8, 2.0)),
        Box::new(ProductSurface::cylinder(2, 3, 2.0)),
        Box::new(ProductSurface::clifford_torus(1.0, 2.0)),
    ];
    for imm in surfaces {
        for _ in 0..100 {
            let p = random_param(&mut r, imm.chart());
            let pf = point_frame(&imm, &p).unwrap();
            let mut rows = pf.tangent.clone();
            rows.extend(pf.normal.iter().cloned());
            assert!(linalg::orthonormality_defect(&rows) < 1e-10);
            assert!(linalg::det(&rows) > 0.0);
            for ha in &pf.h {
                for i in 0..pf.n() {
                    for j in 0..pf.n() {
                        assert_eq!(ha[i][j], ha[j][i]);
                    }
                }
            }
            assert!((pf.rho - (-norm_sq(&pf.position) / 4.0).exp()).abs() < 1e-15);
        }
    }
}

#[test]
fn plane_is_flat() {
    let imm = ProductSurface::plane(2, 2, 3.0);
    let pf = point_frame(&imm, &[0.3, -1.2]).unwrap();
    assert!(pf.b_norm_sq() == 0.0);
    assert!(max_abs(&pf.mean) == 0.0);
    assert!(max_abs(&shrinker_residual(&pf)) == 0.0);
}

#[test]
fn parabola_has_unit_curvature_at_vertex() {
    let profile = GraphProfile::Smooth {
        a: DMatrix::zeros(1, 1),
        b: vec![0.0],
        quad: vec![DMatrix::from_element(1, 1, 1.0)],
        bumps: Vec::new(),
    };
    let imm = GraphImmersion::new(profile, ChartBox::cube(1, 1.0), "parabola");
    let pf = point_frame(&imm, &[0.0]).unwrap();
    assert!((pf.h[0][0][0] - 1.0).abs() < 1e-15);
}

#[test]
fn spheres_are_umbilic_with_mean_curvature_n_over_r() {
    let mut r = rng(3);
    for n in 1..=3 {
        for radius in [0.7, 1.0, 3.0] {
            let imm = ProductSurface::sphere(n, radius, vec![0.0; n + 1]);
            for _ in 0..50 {
                let p = random_param(&mut r, imm.chart());
                let pf = point_frame(&imm, &p).unwrap();
                assert!((pf.mean[0].abs() - n as f64 / radius).abs() < 1e-12);
                let sign = pf.h[0][0][0].signum();
                for i in 0..n {
                    for j in 0..n {
                        let expect = if i == j { sign / radius } else { 0.0 };
                        assert!((pf.h[0][i][j] - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn residual_and_b_are_invariant_under_normal_frame_rotation() {
    let mut r = rng(4);
    let imm = GraphImmersion::bump(2, 3, 0.8, 0.7, 2.0);
    for _ in 0..50 {
        let p = random_param(&mut r, imm.chart());
        let jet = imm.jet(&p).unwrap();
        let pf = frame_from_jet(&p, &jet, 3).unwrap();
        let q = random_orthogonal(&mut r, 3);
        let rotated: Vec<Vec<f64>> = (0..3)
            .map(|a| {
                let mut v = vec![0.0; 5];
                for b in 0..3 {
                    axpy(q[a][b], &pf.normal[b], &mut v);
                }
                v
            })
            .collect();
        // Recompute h and the residual directly from the jet in the new frame.
        let n = 2;
        let mut b2 = 0.0;
        let mut res2 = 0.0;
        for nu in &rotated {
            let mut trace = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            s += pf.coframe[i * n + a] * pf.coframe[j * n + b] * dot(&jet.d2[a][b], nu);
                        }
                    }
                    b2 += s * s;
                    if i == j {
                        trace += s;
                    }
                }
            }
            let x = trace + 0.5 * dot(&pf.position, nu);
            res2 += x * x;
        }
        assert!((b2 - pf.b_norm_sq()).abs() < 1e-10);
        assert!((res2 - norm_sq(&shrinker_residual(&pf))).abs() < 1e-10);
    }
}

#[test]
fn quantities_are_invariant_under_ambient_rotation() {
    let mut r = rng(5);
    let base = GraphImmersion::bump(2, 2, 0.6, 0.9, 2.0);
    let q = to_matrix(&random_orthogonal(&mut r, 4));
    let reference = OrientedFrame::reference(2, 2);
    let rotated_ref = reference.mapped(&q).unwrap();
    let moved = Rotated::new(base.clone(), q);
    for _ in 0..100 {
        let p = random_param(&mut r, base.chart());
        let a = point_frame(&base, &p).unwrap();
        let b = point_frame(&moved, &p).unwrap();
        assert!((norm(&shrinker_residual(&a)) - norm(&shrinker_residual(&b))).abs() < 1e-9);
        assert!((a.b_norm_sq() - b.b_norm_sq()).abs() < 1e-9);
        let va = VFunction {
            reference: reference.clone(),
        }
        .value(&a)
        .unwrap();
        let vb = VFunction {
            reference: rotated_ref.clone(),
        }
        .value(&b)
        .unwrap();
        assert!((va - vb).abs() < 1e-9 * va);
    }
}

#[test]
fn tension_vanishes_on_catalog_shrinkers() {
    let mut r = rng(6);
    for imm in shrinker_catalog() {
        let mut worst: f64 = 0.0;
        for _ in 0..40 {
            let p = random_param(&mut r, imm.chart());
            worst = worst.max(tension_norm(&weighted_tension(&imm, &p).unwrap()));
        }
        assert!(worst <= 1e-6, "{}: |τ| = {worst:e}", imm.name());
    }
}

#[test]
fn tension_of_centered_spheres_is_zero_even_off_shrinker_radius() {
    // H + ½X^N = (½R − n/R)ν_out with constant coefficient: a parallel field.
    let imm = ProductSurface::sphere(2, 1.0, vec![0.0; 3]);
    let mut r = rng(7);
    for _ in 0..20 {
        let p = random_param(&mut r, imm.chart());
        let pf = point_frame(&imm, &p).unwrap();
        assert!(norm(&shrinker_residual(&pf)) > 1.0);
        assert!(tension_norm(&weighted_tension(&imm, &p).unwrap()) < 1e-6);
    }
}

#[test]
fn tension_of_off_center_sphere_matches_symbolic_oracle() {
    // X = c + Rν_out: τ_j = ⟨c, e_j⟩/(2R) along ν_out.
    let mut r = rng(8);
    for (radius, center) in [(1.0, vec![0.0, 0.0, 1.0]), (1.3, vec![0.4, -0.2, 0.7])] {
        let imm = ProductSurface::sphere(2, radius, center.clone());
        let mut biggest: f64 = 0.0;
        for _ in 0..100 {
            let p = random_param(&mut r, imm.chart());
            let pf = point_frame(&imm, &p).unwrap();
            let tau = weighted_tension(&imm, &p).unwrap();
            let outward = dot(&pf.normal[0], &linalg::sub(&pf.position, &center)).signum();
            for j in 0..2 {
                let oracle = outward * dot(&center, &pf.tangent[j]) / (2.0 * radius);
                assert!((tau[0][j] - oracle).abs() < 1e-8, "{} vs {oracle}", tau[0][j]);
            }
            biggest = biggest.max(tension_norm(&tau));
        }
        assert!(biggest > 0.1);
    }
}

#[test]
fn plucker_route_agrees_with_tension_formula() {
    let mut r = rng(9);
    let surfaces: Vec<Box<dyn Immersion>> = vec![
        Box::new(GraphImmersion::bump(2, 1, 0.8, 0.8, 2.0)),
        Box::new(GraphImmersion::bump(2, 2, 0.6, 0.9, 2.0)),
        Box::new(ProductSurface::sphere(2, 1.0, vec![0.0, 0.0, 1.0])),
        Box::new(ProductSurface::cylinder(1, 2, 2.0)),
    ];
    for imm in surfaces {
        for _ in 0..20 {
            let p = random_param(&mut r, imm.chart());
            let a = weighted_tension(&imm, &p).unwrap();
            let b = weighted_tension_plucker(&imm, &p).unwrap();
            for (ra, rb) in a.iter().zip(&b) {
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).abs() < 1e-6, "{}: {x} vs {y}", imm.name());
                }
            }
        }
    }
}

#[test]
fn drift_laplacian_on_the_plane() {
    let imm = ProductSurface::plane(3, 1, 3.0);
    let f = |p: &[f64]| -> Result<f64> { Ok(norm_sq(p)) };
    let one = |_: &[f64]| -> Result<f64> { Ok(1.0) };
    let mut r = rng(10);
    for _ in 0..50 {
        let p = random_param(&mut r, imm.chart());
        let lf = drift_laplacian(&imm, &p, &f).unwrap();
        assert!((lf - (6.0 - norm_sq(&p))).abs() < 1e-8);
        assert!(drift_laplacian(&imm, &p, &one).unwrap().abs() < 1e-12);
    }
}

#[test]
fn graph_reduction_of_drift_laplacian_needs_a_shrinker() {
    // L f = g^{ij}f_ij − ½ x_j f_j on shrinker graphs only.
    let f = |p: &[f64]| -> Result<f64> { Ok((0.7 * p[0]).sin() + p[1] * p[1] - 0.3 * p[0] * p[1]) };
    let reduced = |imm: &GraphImmersion, p: &[f64]| -> f64 {
        let h = imm.chart().fd_step();
        let (_, grad, hess) = fd::scalar_jet_o4(&f, p, h).unwrap();
        let pf = point_frame(imm, p).unwrap();
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += pf.metric_inv[i * 2 + j] * hess[i][j];
            }
            s -= 0.5 * p[i] * grad[i];
        }
        s
    };
    let mut r = rng(11);
    let shrinker = GraphImmersion::sphere_cap(2.0);
    for _ in 0..50 {
        let p = random_param(&mut r, shrinker.chart());
        let lf = drift_laplacian(&shrinker, &p, &f).unwrap();
        assert!((lf - reduced(&shrinker, &p)).abs() < 1e-7);
    }
    let control = GraphImmersion::sphere_cap(1.5);
    let worst = (0..50)
        .map(|_| {
            let p = random_param(&mut r, control.chart());
            (drift_laplacian(&control, &p, &f).unwrap() - reduced(&control, &p)).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst > 1e-2);
}

fn height(a: [f64; 3]) -> Height {
    Height::new(UnitVector::normalized(&a).unwrap())
}

#[test]
fn composition_vanishes_on_the_plane() {
    let imm = ProductSurface::plane(2, 1, 3.0);
    let res = composition_check(&imm, &[0.4, 0.1], &height([0.2, 0.3, 1.0])).unwrap();
    assert!(res.residual.abs() < 1e-12);
    let imm = ProductSurface::plane(2, 2, 3.0);
    let res = composition_check(
        &imm,
        &[0.4, 0.1],
        &LogV {
            reference: horizontal_plane(2, 2),
        },
    )
    .unwrap();
    assert!(res.residual.abs() < 1e-12);
}

#[test]
fn composition_on_shrinker_sphere_with_height() {
    let imm = ProductSurface::shrinker_sphere(2);
    let mut r = rng(12);
    for _ in 0..30 {
        let p = random_param(&mut r, imm.chart());
        let a = crate::sphere::random_point(&mut r, 3);
        let res = composition_check(&imm, &p, &Height::new(a)).unwrap();
        assert!(res.residual.abs() <= 1e-5, "{res:?}");
        assert!(res.tension_term.abs() < 1e-6);
    }
}

#[test]
fn composition_on_non_shrinkers_needs_the_tension_term() {
    let mut r = rng(13);
    let graph = GraphImmersion::bump(2, 2, 0.8, 0.7, 2.0);
    let logv = LogV {
        reference: horizontal_plane(2, 2),
    };
    let v = VFunction {
        reference: horizontal_plane(2, 2),
    };
    let mut tension_seen: f64 = 0.0;
    for _ in 0..30 {
        let p = random_param(&mut r, graph.chart());
        for target in [&logv as &dyn TargetFunction, &v] {
            let res = composition_check(&graph, &p, target).unwrap();
            assert!(res.residual.abs() <= 1e-4, "{}: {res:?}", target.name());
            tension_seen = tension_seen.max(res.tension_term.abs());
        }
    }
    assert!(tension_seen > 1e-2);

    let hyper = GraphImmersion::bump(2, 1, 0.9, 0.6, 2.0);
    let sphere = ProductSurface::sphere(2, 1.0, vec![0.0, 0.0, 1.0]);
    for _ in 0..30 {
        let a = crate::sphere::random_point(&mut r, 3);
        for imm in [&hyper as &dyn Immersion, &sphere] {
            let p = random_param(&mut r, imm.chart());
            let res = composition_check(imm, &p, &Height::new(a.clone())).unwrap();
            assert!(res.residual.abs() <= 1e-4, "{}: {res:?}", imm.name());
        }
    }
}

#[test]
fn composition_with_longitude_where_defined() {
    let mut r = rng(14);
    let imm = GraphImmersion::bump(2, 1, 1.2, 0.6, 2.0);
    let mut tried = 0;
    while tried < 30 {
        let p = random_param(&mut r, imm.chart());
        let pf = point_frame(&imm, &p).unwrap();
        let nu = &pf.normal[0];
        if nu[0].hypot(nu[1]) < 0.05 || (nu[1].abs() < 0.05 && nu[0] < 0.0) {
            continue;
        }
        tried += 1;
        let res = composition_check(&imm, &p, &Longitude).unwrap();
        assert!(res.residual.abs() <= 1e-4, "{res:?}");
    }
}

#[test]
fn composition_on_fd_immersion() {
    // A wobbly sphere given only by its position; jets come from differences.
    let chart = ChartBox::new(vec![0.3, -PI], vec![PI - 0.3, PI], vec![false, true]);
    let imm = FdImmersion::new(1, chart, "wobbly sphere", |p: &[f64]| {
        let rad = 1.8 + 0.2 * (2.0 * p[0]).cos() * p[1].sin();
        vec![
            rad * p[0].sin() * p[1].cos(),
            rad * p[0].sin() * p[1].sin(),
            rad * p[0].cos(),
        ]
    });
    assert!(!imm.analytic());
    let mut r = rng(15);
    for _ in 0..20 {
        let p = random_param(&mut r, imm.chart());
        let a = crate::sphere::random_point(&mut r, 3);
        let res = composition_check(&imm, &p, &Height::new(a)).unwrap();
        assert!(res.residual.abs() <= 1e-4, "{res:?}");
    }
}

#[test]
fn v_is_undefined_on_vertical_planes() {
    let imm = ProductSurface::cylinder(1, 2, 2.0);
    // The cylinder's tangent planes all contain ε₃; take P₀ ⟂ ε₃.
    let reference = OrientedFrame::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], 1).unwrap();
    let err = composition_check(&imm, &[0.3, 0.2], &VFunction { reference }).unwrap_err();
    assert!(matches!(err, Error::InfiniteV { .. }));
}

#[test]
fn energy_density_is_half_b_squared() {
    let mut r = rng(16);
    let imm = GraphImmersion::bump(2, 2, 0.8, 0.7, 2.0);
    for _ in 0..100 {
        let p = random_param(&mut r, imm.chart());
        let pf = point_frame(&imm, &p).unwrap();
        assert!((gauss_energy_density(&pf) - 0.5 * pf.b_norm_sq() * pf.rho).abs() < 1e-10);
    }
    let sphere = ProductSurface::shrinker_sphere(2);
    let pf = point_frame(&sphere, &[1.0, 0.5]).unwrap();
    assert!((pf.b_norm_sq() - 0.5).abs() < 1e-14);
}

#[test]
fn pushforward_matches_differences_of_the_plucker_gauss_map() {
    let imm = GraphImmersion::bump(2, 2, 0.8, 0.7, 2.0);
    let mesh = WeightedPatchMesh::midpoint(&imm, &[6, 6]).unwrap();
    let map = plucker_gauss_map(&imm);
    for k in 0..mesh.len() {
        let fd_density = energy_density_at(&mesh, k, &map, 1e-3).unwrap();
        let b2 = mesh.nodes[k].frame.b_norm_sq();
        assert!((fd_density - b2).abs() < 1e-8 * b2.max(1.0));
    }
}

#[test]
fn graph_slope_times_w_is_one() {
    let mut r = rng(17);
    for (n, m) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
        let imm = GraphImmersion::bump(n, m, 1.1, 0.6, 2.0);
        let p0 = horizontal_plane(n, m);
        for _ in 0..50 {
            let p = random_param(&mut r, imm.chart());
            let pj = imm.profile.eval(&p).unwrap();
            let gram = DMatrix::from_fn(n, n, |i, j| {
                let delta = if i == j { 1.0 } else { 0.0 };
                delta + (0..m).map(|a| pj.du[a][i] * pj.du[a][j]).sum::<f64>()
            });
            let slope = gram.determinant().sqrt();
            let w = w_product(&gauss_map(&point_frame(&imm, &p).unwrap()), &p0).unwrap();
            assert!((slope * w - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn area_of_shrinker_sphere() {
    let imm = ProductSurface::area_sphere(2.0);
    let mesh = WeightedPatchMesh::midpoint(&imm, &[256, 512]).unwrap();
    let one = ScalarFieldOnPatch::constant(&mesh, 1.0);
    let expect = 16.0 * PI / E;
    assert!((weighted_integral(&mesh, &one).unwrap() - expect).abs() < 1e-6 * expect);
    assert!((mesh.area() - 16.0 * PI).abs() < 1e-9);
    assert_eq!(
        weighted_integral(&mesh, &ScalarFieldOnPatch::constant(&mesh, 0.0)).unwrap(),
        0.0
    );
    let odd = ScalarFieldOnPatch::from_fn(&mesh, |node| {
        let x = &node.frame.position;
        Ok((x[0] + x[1] * x[2] * x[2] - x[2].powi(3), vec![0.0; 2]))
    })
    .unwrap();
    assert!(weighted_integral(&mesh, &odd).unwrap().abs() < 1e-10);
}

#[test]
fn stability_identity_on_shrinker_sphere() {
    let imm = ProductSurface::area_sphere(2.0);
    let mesh = WeightedPatchMesh::midpoint(&imm, &[256, 512]).unwrap();
    // a = ε₃: both sides equal −(8π/3)/e.
    let e3 = UnitVector::basis(3, 2);
    let chk = stability_identity_check(&mesh, &e3).unwrap();
    let exact = -8.0 * PI / (3.0 * E);
    assert!((chk.lhs - exact).abs() < 1e-4 * exact.abs());
    assert!((chk.rhs - exact).abs() < 1e-4 * exact.abs());
    assert!(chk.relative <= 1e-4);
    let mut r = rng(18);
    for _ in 0..3 {
        let a = crate::sphere::random_point(&mut r, 3);
        assert!(stability_identity_check(&mesh, &a).unwrap().relative <= 1e-4);
    }
    let ones = ScalarFieldOnPatch::constant(&mesh, 1.0);
    let chk = stability_identity_from_field(&mesh, &ones).unwrap();
    assert_eq!((chk.lhs, chk.rhs), (0.0, 0.0));
}

#[test]
fn stability_identity_converges_at_second_order() {
    let imm = ProductSurface::area_sphere(2.0);
    let a = UnitVector::normalized(&[0.3, -0.5, 0.8]).unwrap();
    let study = stability_convergence(&imm, &a, &[vec![32, 64], vec![64, 128], vec![128, 256]]).unwrap();
    for order in &study.orders {
        assert!((order - 2.0).abs() < 0.1, "{:?}", study.orders);
    }
}

#[test]
fn stability_identity_refuses_open_patches() {
    let imm = ProductSurface::shrinker_sphere(2);
    let mesh = WeightedPatchMesh::midpoint(&imm, &[8, 8]).unwrap();
    let err = stability_identity_check(&mesh, &UnitVector::basis(3, 2)).unwrap_err();
    assert!(matches!(err, Error::Unsupported(_)));
}

#[test]
fn first_variation_without_variation_is_zero() {
    let imm = ProductSurface::clifford_torus(1.0, 1.0);
    let mesh = WeightedPatchMesh::midpoint(&imm, &[16, 16]).unwrap();
    let family = |p: &[f64], _t: f64| -> Result<Vec<f64>> { Ok(vec![p[0].sin() * p[1].cos()]) };
    let flat = |_: &[f64]| -> Result<f64> { Ok(0.0) };
    let fv = first_variation_check(&mesh, &family, &flat, 1e-3, 1e-3).unwrap();
    assert!(fv.fd_derivative.abs() < 1e-12 && fv.formula.abs() < 1e-12);
}

#[test]
fn first_variation_on_flat_torus() {
    let imm = ProductSurface::clifford_torus(1.0, 1.0);
    let mesh = WeightedPatchMesh::midpoint(&imm, &[48, 48]).unwrap();
    let family = |p: &[f64], t: f64| -> Result<Vec<f64>> {
        let (u, v) = (p[0], p[1]);
        Ok(vec![
            (u + 2.0 * v).sin() + t * (2.0 * u).cos() * v.sin(),
            u.cos() * v.sin() + t * (u - v).sin() + 0.5 * t * t * u.sin(),
        ])
    };
    let flat = |_: &[f64]| -> Result<f64> { Ok(0.0) };
    let fv = first_variation_check(&mesh, &family, &flat, 1e-3, 1e-3).unwrap();
    assert!(fv.fd_derivative.abs() > 0.1);
    assert!(fv.residual.abs() <= 1e-4 * fv.fd_derivative.abs(), "{fv:?}");
    assert!(!fv.boundary_warning);
}

/// Gauss maps of `X + tφV` on a polar band of a sphere, with φ supported
/// strictly inside the band.
fn gauss_family(radius: f64, cz: f64) -> impl Fn(&[f64], f64) -> Result<Vec<f64>> {
    move |p: &[f64], t: f64| {
        let sphere = ProductSurface::sphere(2, radius, vec![0.0, 0.0, cz]);
        let mut jet = sphere.jet(p)?;
        let (a, b) = (0.6, 2.4);
        let bump = |s: f64| -> (f64, f64) {
            if s <= a || s >= b {
                return (0.0, 0.0);
            }
            let arg = PI * (s - a) / (b - a);
            let k = PI / (b - a);
            (arg.sin().powi(6), 6.0 * arg.sin().powi(5) * arg.cos() * k)
        };
        let (phi, dphi) = bump(p[0]);
        let ang = (p[1].cos(), p[1].sin());
        let dir = [0.3, -0.2, 1.0];
        let g = phi * (1.0 + 0.5 * ang.0);
        let dg = [dphi * (1.0 + 0.5 * ang.0), -phi * 0.5 * ang.1];
        for k in 0..3 {
            jet.value[k] += t * g * dir[k];
            for a in 0..2 {
                jet.d1[a][k] += t * dg[a] * dir[k];
            }
        }
        let q = frame_from_jet(p, &jet, 1)?;
        Ok(crate::grassmann::plucker(&q.tangent))
    }
}

#[test]
fn first_variation_of_gauss_map_on_shrinker_sphere() {
    let imm = ProductSurface::shrinker_sphere(2);
    let mesh = WeightedPatchMesh::midpoint(&imm, &[64, 128]).unwrap();
    let family = gauss_family(2.0, 0.0);
    let lr = log_rho(&imm);
    let fv = first_variation_check(&mesh, &family, &lr, 1e-3, 1e-3).unwrap();
    assert!(!fv.boundary_warning);
    assert!(fv.fd_derivative.abs() <= 1e-4, "{fv:?}");
    assert!(fv.formula.abs() <= 1e-4, "{fv:?}");

    // Centred spheres of any radius have τ_ρ = 0; an off-centre one does not.
    let other = ProductSurface::sphere(2, 1.5, vec![0.0, 0.0, 1.0]);
    let mesh = WeightedPatchMesh::midpoint(&other, &[64, 128]).unwrap();
    let family = gauss_family(1.5, 1.0);
    let lr = log_rho(&other);
    let fv = first_variation_check(&mesh, &family, &lr, 1e-3, 1e-3).unwrap();
    assert!(fv.fd_derivative.abs() > 1e-2, "{fv:?}");
    assert!(fv.residual.abs() <= 1e-4 * fv.fd_derivative.abs().max(1.0), "{fv:?}");
}

#[test]
fn parse_surface_catalog() {
    for s in [
        "plane:n=2,m=2",
        "sphere:n=2,R=2",
        "sphere:n=2,R=1,cz=1",
        "sphere-area:R=2",
        "cylinder:k=1,n=3",
        "graph-bump:n=2,m=2,amp=0.5",
        "graph-cap:R=2",
        "torus",
    ] {
        let imm = parse_surface(s).unwrap();
        assert!(imm.dim() >= 1);
    }
    assert!(parse_surface("sphere:n=2,Q=1").is_err());
    assert!(parse_surface("donut:n=2").is_err());
    assert!(parse_surface("cylinder:k=3,n=2").is_err());
    assert!(parse_surface("plane:n=1.5").is_err());
}

#[test]
fn degenerate_metric_is_reported() {
    let chart = ChartBox::cube(2, 1.0);
    let imm = FdImmersion::new(1, chart, "fold", |p: &[f64]| vec![p[0], p[0], 0.0]);
    assert!(matches!(
        point_frame(&imm, &[0.1, 0.2]),
        Err(Error::DegenerateMetric { .. })
    ));
}

#[test]
fn stencil_leaving_the_chart_is_an_error() {
    let imm = GraphImmersion::bump(2, 1, 0.5, 1.0, 1.0);
    assert!(matches!(
        weighted_tension(&imm, &[0.9999, 0.0]),
        Err(Error::OutsideDomain { .. })
    ));
}
