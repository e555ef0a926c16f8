use approx::assert_relative_eq;
use proptest::prelude::*;

use maxshape::audit::*;
use maxshape::geometry::{total_length, CurveNetwork, Point2};

#[test]
fn dyadic_star_density_is_two_plus_n() {
    for n in [1usize, 3, 5, 10] {
        let s = dyadic_star(n + 52);
        let r = 0.5f64.powi(n as i32);
        let prof = ahlfors_profile(&s, Some(&[Point2::origin()]), &[r], &AhlforsOptions { r0: Some(1.0), ..Default::default() });
        assert_relative_eq!(prof[0].densities[0], (2 + n) as f64, max_relative = 1e-12);
        assert_relative_eq!(total_length(&dyadic_star(n)), 2.0 - r, max_relative = 1e-14);
    }
}

#[test]
fn dyadic_star_flagged_from_depth_five() {
    for n in 1..=8usize {
        let s = dyadic_star(n + 52);
        let r = 0.5f64.powi(n as i32);
        let prof = ahlfors_profile(&s, Some(&[Point2::origin()]), &[r], &AhlforsOptions { r0: Some(1.0), ..Default::default() });
        // 2 + n > 2π exactly when n ≥ 5.
        assert_eq!(!prof[0].pass(), n >= 5, "n = {n}");
    }
}

#[test]
fn regular_star_densities_between_one_and_three() {
    let s = regular_star();
    let radii = geometric_radii(0.5, 0.01, 15);
    for p in ahlfors_profile(&s, None, &radii, &AhlforsOptions::default()) {
        for &d in &p.densities {
            assert!((1.0 - 1e-12..=3.0 + 1e-12).contains(&d), "{d}");
        }
        assert!(p.pass());
    }
}

#[test]
fn golab_holds_on_converging_corpus() {
    for fx in converging_fixtures() {
        let rep = golab_check(&fx.sequence, &fx.limit, 1e-6).unwrap();
        assert!(rep.pass, "{}: {rep:?}", fx.name);
        assert!(rep.tail_min_length >= rep.limit_length - 1e-6);
    }
}

#[test]
fn constant_sequence_gives_equality() {
    let fx = converging_fixtures().into_iter().find(|f| f.name == "constant").unwrap();
    let rep = golab_check(&fx.sequence, &fx.limit, 0.0).unwrap();
    assert!(rep.distances.iter().all(|&d| d == 0.0));
    assert_eq!(rep.tail_min_length, rep.limit_length);
}

#[test]
fn diverging_sequence_rejected() {
    let seq = vec![sawtooth(8), sawtooth(2)];
    let unit = CurveNetwork::segment(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)).unwrap();
    assert!(matches!(golab_check(&seq, &unit, 1e-9), Err(AuditError::NotConverging { index: 1 })));
}

#[test]
fn monotone_union_on_nested_corpus() {
    for fx in converging_fixtures() {
        let Some(dom) = &fx.nested_in else { continue };
        let tol = fx.sequence.len() as f64;
        let rep = monotone_union_check(dom, &fx.sequence, &fx.limit, 0.5f64.powf(tol - 0.5)).unwrap();
        assert!(rep.pass, "{}: {rep:?}", fx.name);
    }
}

#[test]
fn isolated_points_are_the_negative_control() {
    let c = isolated_points_control(50);
    assert!(c.rejected_as_network);
    assert!(c.semicontinuity_fails);
    assert_eq!(c.lengths, 0.0);
    assert_eq!(c.limit_length, 1.0);
}

fn tree() -> impl Strategy<Value = CurveNetwork<f64>> {
    // Random trees: each new vertex hangs off an earlier one.
    prop::collection::vec((0usize..1000, -1.0f64..1.0, -1.0f64..1.0), 1..8).prop_filter_map("degenerate", |steps| {
        let mut verts = vec![Point2::new(0.0, 0.0)];
        let mut edges = Vec::new();
        for (parent, x, y) in steps {
            let pidx = parent % verts.len();
            let q = Point2::new(x, y);
            if verts.iter().any(|v| v.dist(q) < 0.05) {
                return None;
            }
            edges.push([pidx, verts.len()]);
            verts.push(q);
        }
        CurveNetwork::new(verts, edges, 1e-9).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn density_at_least_one_below_half_diameter(net in tree(), frac in 0.05f64..0.99) {
        let r = frac * net.diameter() / 2.0;
        for p in ahlfors_profile(&net, None, &[r], &AhlforsOptions::default()) {
            prop_assert!(p.densities[0] >= 1.0 - 1e-9, "{:?}", p);
        }
    }

    #[test]
    fn rigid_motions_keep_profiles(net in tree(), theta in -3.2f64..3.2, dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
        let moved = net.rigid_motion(theta, Point2::new(dx, dy));
        let radii = geometric_radii(net.diameter() / 2.0, net.diameter() / 64.0, 6);
        let a = ahlfors_profile(&net, None, &radii, &AhlforsOptions::default());
        let b = ahlfors_profile(&moved, None, &radii, &AhlforsOptions::default());
        for (p, q) in a.iter().zip(&b) {
            prop_assert_eq!(&p.radii, &q.radii);
            for (x, y) in p.densities.iter().zip(&q.densities) {
                prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
            }
        }
    }
}
