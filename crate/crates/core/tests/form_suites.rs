use cr_core::invariants::CrStructure;
use cr_core::suites::{run_suite, Suite, SuiteConfig};

fn run(s: Suite) -> cr_core::report::SuiteReport {
    let cr = CrStructure::generic().unwrap();
    let r = run_suite(s, &cr, &SuiteConfig::default()).unwrap();
    for c in &r.checks {
        eprintln!("{}: {} {:?} [{}] {:?} {:?}", r.suite, c.name, c.status, c.mode, c.detail, c.residual);
    }
    r
}

#[test]
fn initial_structure_passes() {
    assert!(run(Suite::Initial).passed());
}

#[test]
fn varrho_proportionality_and_duality_pass() {
    assert!(run(Suite::RhoVarrho).passed());
}

#[test]
fn lifted_structure_passes() {
    assert!(run(Suite::Lifted).passed());
}

#[test]
fn prolonged_structure_passes() {
    assert!(run(Suite::Prolonged).passed());
}

#[test]
fn final_structure_passes() {
    assert!(run(Suite::Final).passed());
}

#[test]
fn tfrak_is_the_last_torsion() {
    assert!(run(Suite::Tfrak).passed());
}
