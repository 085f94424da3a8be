use cr_core::invariants::{CrStructure, Mutation};
use cr_core::suites::{run_suite, Suite, SuiteConfig};

fn run(s: Suite, cfg: &SuiteConfig) -> cr_core::report::SuiteReport {
    let cr = CrStructure::generic().unwrap();
    let r = run_suite(s, &cr, cfg).unwrap();
    for c in &r.checks {
        eprintln!("{}: {} {:?} [{}] {:?}", r.suite, c.name, c.status, c.mode, c.residual);
    }
    r
}

#[test]
fn reality_suite_passes() {
    assert!(run(Suite::Reality, &SuiteConfig::default()).passed());
}

#[test]
fn brackets_suite_passes() {
    assert!(run(Suite::Brackets, &SuiteConfig::default()).passed());
}

#[test]
fn lemma_identities_suite_passes() {
    assert!(run(Suite::Jacobi4, &SuiteConfig::default()).passed());
}

#[test]
fn normalization_suite_passes() {
    assert!(run(Suite::W2Vanish, &SuiteConfig::default()).passed());
}

#[test]
fn corollary_suite_passes() {
    assert!(run(Suite::W1V2, &SuiteConfig::default()).passed());
}

#[test]
fn corollary_suite_detects_mutation() {
    let cfg = SuiteConfig { mutation: Mutation::SevenSixths, ..SuiteConfig::default() };
    let r = run(Suite::W1V2, &cfg);
    assert!(!r.passed());
    let bad: Vec<_> = r.failures().collect();
    assert!(bad.iter().all(|c| c.witness.is_some()));
}

#[test]
fn theorem_suite_passes() {
    assert!(run(Suite::Theorem, &SuiteConfig::default()).passed());
}

#[test]
fn rigid_report_suite_passes() {
    let r = run(Suite::RigidReport, &SuiteConfig::default());
    eprintln!("{:?}", r.counters);
    assert!(r.passed());
}

#[test]
fn displayed_w1_breaks_reality_and_corrected_restores_it() {
    use cr_core::invariants::{compute_w1_reading, GroupParams, W1Reading};
    use cr_core::zero::{is_identically_zero, ZeroMode};
    let cr = CrStructure::generic().unwrap();
    let gp = GroupParams::symbolic().bind_sbar(&cr).unwrap();
    let mode = ZeroMode::probabilistic();
    let res = |r| {
        let w1 = compute_w1_reading(&cr, &gp, r).unwrap();
        is_identically_zero(&(gp.conj(&w1) - &w1), &mode).unwrap().is_zero()
    };
    assert!(!res(W1Reading::Displayed));
    assert!(res(W1Reading::Corrected));
}
