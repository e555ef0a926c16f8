use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use maxshape::functionals::SetFunctional;
use maxshape::geometry::{total_length, CurveNetwork, DomainSpec, Point2};
use maxshape::optimizer::*;

fn small_config(f: SetFunctional, iterations: usize, seed: u64) -> OptConfig {
    let mut c = OptConfig::new(0.6, f, 1.0 / 16.0);
    c.schedule.iterations = iterations;
    c.seed = seed;
    c
}

#[test]
fn initial_guess_on_square_is_centred_horizontal_segment() {
    let sq = DomainSpec::unit_square();
    let net = initial_guess(&sq, 0.5, 0).unwrap();
    let v = net.vertices();
    assert_eq!(v.len(), 2);
    let (a, b) = if v[0].x < v[1].x { (v[0], v[1]) } else { (v[1], v[0]) };
    assert_abs_diff_eq!(a.x, 0.25, epsilon = 1e-12);
    assert_abs_diff_eq!(b.x, 0.75, epsilon = 1e-12);
    assert_abs_diff_eq!(a.y, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(b.y, 0.5, epsilon = 1e-12);
}

#[test]
fn initial_guess_longer_than_diameter_is_enlarged() {
    let disk = DomainSpec::disk(Point2::new(0.0, 0.0), 1.0, 128).unwrap();
    let net = initial_guess(&disk, 3.0, 5).unwrap();
    assert!(net.is_connected());
    assert_abs_diff_eq!(total_length(&net), 3.0, epsilon = 1e-6);
    for &p in net.vertices() { assert!(disk.contains_closed(p), "{p:?} r={}", p.norm()); }
}

#[test]
fn repair_restores_length_and_containment() {
    let sq = DomainSpec::unit_square();
    // Sticks out of the square and is too long.
    let long = CurveNetwork::star(
        Point2::new(0.5, 0.5),
        &[Point2::new(1.4, 0.5), Point2::new(0.5, -0.3), Point2::new(0.1, 0.9)],
    )
    .unwrap();
    let fixed = repair(&long, &sq, 1.0, 1e-6, 3).unwrap();
    assert!(fixed.is_connected());
    assert!((total_length(&fixed) - 1.0).abs() <= 1e-6);
    assert!(fixed.vertices().iter().all(|&p| sq.contains_closed(p)));

    // Too short.
    let short = CurveNetwork::segment(Point2::new(0.4, 0.5), Point2::new(0.6, 0.5)).unwrap();
    let grown = repair(&short, &sq, 0.8, 1e-6, 3).unwrap();
    assert!((total_length(&grown) - 0.8).abs() <= 1e-6);
    assert!(grown.vertices().iter().all(|&p| sq.contains_closed(p)));
}

#[test]
fn zero_iterations_returns_initial_guess() {
    let sq = DomainSpec::unit_square();
    let res = minimize(&sq, &small_config(SetFunctional::Inradius, 0, 1)).unwrap();
    assert_eq!(res.best, res.initial);
    assert_eq!(res.best_value, res.initial_value);
}

#[test]
fn runs_are_deterministic_and_best_never_increases() {
    let sq = DomainSpec::unit_square();
    let cfg = small_config(SetFunctional::Inradius, 60, 11);
    let a = minimize(&sq, &cfg).unwrap();
    let b = minimize(&sq, &cfg).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.best_value.to_bits(), b.best_value.to_bits());
    assert_eq!(a.trace, b.trace);

    assert!(a.best_value <= a.initial_value);
    for w in a.trace.windows(2) {
        assert!(w[1].best_value <= w[0].best_value);
    }
    assert!((total_length(&a.best) - cfg.length).abs() <= cfg.length_tol);
    assert!(a.best.is_connected());
}

#[test]
fn infeasible_length_is_reported() {
    let sq = DomainSpec::unit_square();
    let mut cfg = small_config(SetFunctional::Inradius, 1, 0);
    cfg.length = 1e6;
    cfg.grid_h = 1.0 / 128.0;
    assert!(matches!(minimize(&sq, &cfg), Err(OptError::InfeasibleLength { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn repair_lands_in_domain_at_target_length(
        tips in prop::collection::vec((-0.5f64..1.5, -0.5f64..1.5), 1..5),
        target in 0.3f64..2.0,
        seed in 0u64..1000,
    ) {
        let sq = DomainSpec::unit_square();
        let tips: Vec<_> = tips.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
        prop_assume!(tips.iter().all(|t| t.dist(Point2::new(0.5, 0.5)) > 0.05));
        let Ok(net) = CurveNetwork::star(Point2::new(0.5, 0.5), &tips) else { return Ok(()) };
        let fixed = repair(&net, &sq, target, 1e-6, seed).unwrap();
        prop_assert!(fixed.is_connected());
        prop_assert!((total_length(&fixed) - target).abs() <= 1e-6);
        prop_assert!(fixed.vertices().iter().all(|&p| sq.contains_closed(p)));
    }
}
