use std::sync::Arc;

use proptest::prelude::*;

use maxshape::functionals::{probe_decreasing, Composite};
use maxshape::geometry::{CurveNetwork, DomainSpec, Point2};
use maxshape::grid::{components, inradius, inradius_per_component, rasterize};

fn cut(net: Option<&CurveNetwork<f64>>) -> f64 {
    let g = rasterize(&DomainSpec::unit_square(), net, 1.0 / 32.0).unwrap();
    inradius(&components(Arc::new(g)))
}

fn pt() -> impl Strategy<Value = Point2<f64>> {
    (0.05f64..0.95, 0.05f64..0.95).prop_map(|(x, y)| Point2::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn composites_decrease_in_each_eigenvalue(mut l in prop::collection::vec(0.1f64..1e3, 1..6)) {
        l.sort_by(f64::total_cmp);
        prop_assert!(probe_decreasing(Composite::SumReciprocals, &l).is_ok());
        prop_assert!(probe_decreasing(Composite::ReciprocalKth, &l).is_ok());
    }

    #[test]
    fn inradius_is_max_over_components(a in pt(), b in pt(), c in pt()) {
        prop_assume!(a.dist(b) > 0.05 && a.dist(c) > 0.05);
        let net = CurveNetwork::star(a, &[b, c]).unwrap();
        let g = rasterize(&DomainSpec::unit_square(), Some(&net), 1.0 / 32.0).unwrap();
        let region = components(Arc::new(g));
        let per = inradius_per_component(&region);
        let m = per.iter().copied().fold(0.0, f64::max);
        prop_assert_eq!(inradius(&region), m);
    }

    #[test]
    fn adding_a_branch_never_raises_inradius(a in pt(), b in pt(), c in pt()) {
        prop_assume!(a.dist(b) > 0.05 && a.dist(c) > 0.05);
        let seg = CurveNetwork::segment(a, b).unwrap();
        let star = CurveNetwork::star(a, &[b, c]).unwrap();
        // Discrete inradius is accurate to h/2.
        let tol = 0.5 / 32.0;
        prop_assert!(cut(Some(&star)) <= cut(Some(&seg)) + tol);
        prop_assert!(cut(Some(&seg)) <= cut(None) + tol);
    }
}
