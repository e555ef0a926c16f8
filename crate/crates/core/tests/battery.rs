use std::time::Instant;

use maxshape::battery::{run_battery, BatteryOptions};
use maxshape::pde::PdeOptions;

#[test]
fn full_battery_passes_on_shipped_fixtures() {
    let t = Instant::now();
    let reports = run_battery(&PdeOptions::default(), &BatteryOptions::default()).unwrap();
    for r in &reports {
        eprintln!("{:<32} {:<24} {:<28} pass={} gap={:.3e} tol={:.1e}", r.check, r.functional, r.fixture, r.pass, r.gap, r.tolerance);
    }
    eprintln!("{} reports in {:.1}s", reports.len(), t.elapsed().as_secs_f64());
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}
