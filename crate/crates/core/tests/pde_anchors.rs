use std::sync::Arc;
use std::time::Instant;

use maxshape::bessel::J01;
use maxshape::geometry::{DomainSpec, Point2};
use maxshape::grid::{rasterize, OpenRegion};
use maxshape::pde::{eigenvalues, solve_torsion, Coefficients, PdeOptions};

fn disk_region(r: f64, h: f64) -> OpenRegion<f64> {
    let d = DomainSpec::disk(Point2::new(0.0, 0.0), r, 1024).unwrap();
    OpenRegion::new(Arc::new(rasterize(&d, None, h).unwrap()))
}

#[test]
fn disk_first_eigenvalue_and_torsion_max() {
    for r in [1.0, 0.37] {
        let region = disk_region(r, r / 128.0);
        let t0 = Instant::now();
        let s = eigenvalues(&region, &Coefficients::laplacian(), 3, &PdeOptions::default()).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let exact = J01 * J01 / (r * r);
        let rel = (s.values[0] / exact - 1.0).abs();
        eprintln!("r={r} lambda1={} exact={exact} rel={rel:.2e} time={dt:.2}s", s.values[0]);
        assert!(rel < 0.02);
        assert!(dt < 30.0);
        let t = solve_torsion(&region, &PdeOptions::default()).unwrap();
        let rel = (t.max_value / (r * r / 4.0) - 1.0).abs();
        eprintln!("M={} rel={rel:.2e}", t.max_value);
        assert!(rel < 0.02);
    }
}
