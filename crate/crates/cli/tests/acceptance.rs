//! The numbered acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p fracperim --test acceptance -- --nocapture` to see
//! the lines. Checks listed in `KNOWN_FAILURES` fail at the tolerance as
//! stated and are left failing; any other failure fails the test.

use fracperim::suite::{Suite, SuiteOptions};

/// `sup_x H(x, p, 10⁴) = (4π·10⁴)^{-1/2} ≈ 2.8e-3` on the line, above the
/// stated 1e-4.
const KNOWN_FAILURES: &[(u8, &str)] = &[(11, "long-time dichotomy Euclidean(1)")];

#[test]
fn acceptance_criteria() {
    let suite = Suite::new(SuiteOptions::default());
    let mut unexpected = Vec::new();
    let mut known = Vec::new();
    for n in 1..=12u8 {
        let r = suite.criterion(n);
        println!("{}", r.line());
        for c in &r.checks {
            println!("    {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
            if !c.passed {
                if KNOWN_FAILURES.contains(&(n, c.name.as_str())) {
                    known.push((n, c.name.clone()));
                } else {
                    unexpected.push(format!("criterion {n}: {}: {}", c.name, c.detail));
                }
            }
        }
    }
    println!("known failures: {known:?}");
    assert!(unexpected.is_empty(), "unexpected failures:\n{}", unexpected.join("\n"));
    assert_eq!(known.len(), KNOWN_FAILURES.len(), "a known failure now passes; update KNOWN_FAILURES");
}
