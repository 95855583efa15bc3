use infogeo::verify::{run_suites, Fault, VerifyContext};

#[test]
fn every_suite_passes_clean() {
    let out = run_suites(&VerifyContext::new(7, None), None);
    for c in &out {
        println!("{}.{}: {} ({})", c.suite, c.check, if c.passed { "ok" } else { "FAIL" }, c.detail);
    }
    assert!(out.iter().all(|c| c.passed));
}

#[test]
fn fault_is_caught_by_the_deformed_suite_only_where_expected() {
    let out = run_suites(&VerifyContext::new(7, Some(Fault::SecondDerivative)), Some("deformed"));
    let failed: Vec<_> = out.iter().filter(|c| !c.passed).map(|c| c.check).collect();
    assert!(failed.contains(&"derivatives_vs_differences"), "{failed:?}");
    assert!(!failed.contains(&"round_trip"));
}

#[test]
fn filter_selects_checks() {
    let out = run_suites(&VerifyContext::new(7, None), Some("measure.c1"));
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].check, "c1_matching");
}
