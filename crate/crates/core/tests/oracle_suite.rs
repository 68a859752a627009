use std::time::Instant;

use kdtli::oracle;

fn run(fast: bool) {
    let start = Instant::now();
    let report = oracle::verify_all(fast);
    let elapsed = start.elapsed();
    for c in &report.checks {
        println!(
            "{:<28} max_error={:.3e} tol={:.1e} points={} {}",
            c.name,
            c.max_error,
            c.tolerance,
            c.points,
            if c.passed() { "PASS" } else { "FAIL" }
        );
    }
    println!("fast={fast} elapsed={elapsed:?}");
    assert!(report.all_passed());
}

#[test]
fn fast_suite_passes() {
    run(true);
}

#[test]
fn full_suite_passes() {
    run(false);
}
