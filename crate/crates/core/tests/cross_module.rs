//! Invariants that tie modules together: the v-function seen from the
//! Grassmannian, from a graph's Gauss map and from the grouped quadratic form
//! must all be the same number.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use shrinker_core::graph::{slope, GridField, StencilOrder};
use shrinker_core::grassmann::{frame_with_angles, jordan_spectrum, random_frame, v_value, w_product, OrientedFrame};
use shrinker_core::immersion::target::horizontal_plane;
use shrinker_core::immersion::{parse_surface, point_frame, shrinker_residual};
use shrinker_core::inequality::{
    exact_master_margin_nonnegative, master_inequality_check, sample_subcritical, GroupSample, HPattern,
};
use shrinker_core::linalg::norm;

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn v_is_the_reciprocal_of_the_w_product((n, m) in dims(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_frame(&mut rng, n, m);
        let reference = OrientedFrame::reference(n, m);
        let w = w_product(&p, &reference).unwrap().abs();
        prop_assume!(w > 1e-3);
        let v = v_value(&jordan_spectrum(&p, &reference).unwrap()).unwrap();
        prop_assert!((v * w - 1.0).abs() < 1e-9 * v, "v = {v}, w = {w}");
    }

    #[test]
    fn prescribed_angles_are_recovered_and_match_the_sample_v(
        (n, m) in dims(),
        seed in any::<u64>(),
        raw in proptest::collection::vec(0.0f64..1.2, 4),
    ) {
        let k = n.min(m);
        let theta = &raw[..k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frame = frame_with_angles(&mut rng, n, m, theta);
        let spec = jordan_spectrum(&frame, &OrientedFrame::reference(n, m)).unwrap();
        let mut want = theta.to_vec();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut got = spec.theta.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-9, "{got:?} vs {want:?}");
        }
        let lambda: Vec<f64> = theta.iter().map(|t| t.tan()).collect();
        let from_sample = GroupSample::zeros(n, m, lambda).unwrap().v();
        prop_assert!((from_sample - v_value(&spec).unwrap()).abs() < 1e-9 * from_sample);
    }

    #[test]
    fn affine_graph_slope_is_the_v_of_its_gauss_map(
        (n, m) in (1usize..=2, 1usize..=3),
        entries in proptest::collection::vec(-1.5f64..1.5, 6),
    ) {
        let a = DMatrix::from_fn(m, n, |al, i| entries[al * n + i]);
        let u = GridField::affine(1.0, vec![7; n], a, vec![0.0; m]).unwrap();
        let s = slope(&u, StencilOrder::Second).unwrap();
        let reference = horizontal_plane(n, m);
        for (&node, row) in s.nodes.iter().zip(&s.values) {
            let gauss = u.point_frame(node, StencilOrder::Second).unwrap().gauss_map();
            let v = v_value(&jordan_spectrum(&gauss, &reference).unwrap()).unwrap();
            prop_assert!((row[0] - v).abs() < 1e-9 * v, "slope {} vs v {v}", row[0]);
        }
        prop_assert!(u.deviation_from_affine().unwrap() < 1e-14);
    }

    #[test]
    fn master_inequality_holds_with_an_exact_recheck(
        (n, m) in (1usize..=5, 1usize..=5),
        seed in any::<u64>(),
        pattern in 0usize..HPattern::ALL.len(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sample_subcritical(&mut rng, n, m, HPattern::ALL[pattern], None).unwrap();
        let check = master_inequality_check(&s, 16.0).unwrap();
        prop_assert!(check.margin >= -1e-12 * s.b_norm_sq().max(1.0), "margin {}", check.margin);
        prop_assert!(exact_master_margin_nonnegative(&s, 16.0));
    }
}

#[test]
fn every_catalog_entry_parses_and_solves_the_shrinker_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for name in [
        "plane:n=2,m=2",
        "sphere:n=1",
        "sphere:n=2",
        "sphere:n=3",
        "cylinder:k=1,n=2",
        "cylinder:k=2,n=3",
        "torus",
        "graph-cap:R=2",
    ] {
        let imm = parse_surface(name).unwrap();
        let chart = imm.chart();
        for _ in 0..50 {
            let p: Vec<f64> = (0..chart.dim())
                .map(|a| {
                    let (lo, hi) = (chart.lo[a], chart.hi[a]);
                    lo + (hi - lo) * (0.05 + 0.9 * rand::Rng::random::<f64>(&mut rng))
                })
                .collect();
            let pf = point_frame(&imm, &p).unwrap();
            assert!(norm(&shrinker_residual(&pf)) < 1e-10, "{name} at {p:?}");
        }
    }
}

#[test]
fn non_shrinkers_have_a_visible_residual() {
    let imm = parse_surface("sphere:n=2,R=1,cz=1").unwrap();
    let pf = point_frame(&imm, &[0.3, 0.4]).unwrap();
    assert!(norm(&shrinker_residual(&pf)) > 0.1);
}
