use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cr-cartan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn compute_on_the_model() {
    let p = run(&["compute", "--invariant", "P", "--phi", "z*zb"]);
    assert_eq!(p.status.code(), Some(0));
    assert_eq!(stdout(&p).trim(), "0");
    let ell = run(&["compute", "--invariant", "ell", "--phi", "z*zb"]);
    assert_eq!(stdout(&ell).trim(), "2");
}

#[test]
fn compute_rigid_json_reports_monomials() {
    let o = run(&["compute", "--invariant", "J", "--rigid", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v["results"][0];
    assert_eq!(r["name"], "J");
    assert!(r["expression"].as_str().unwrap().contains("phi"));
    assert!(r["numerator_monomials"].as_u64().unwrap() > 0);
}

#[test]
fn compute_reads_phi_from_a_file() {
    let dir = std::env::temp_dir().join(format!("cr-cartan-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("phi.txt");
    std::fs::write(&path, "z*zb\n").unwrap();
    let arg = format!("@{}", path.display());
    let o = run(&["compute", "--invariant", "ell", "--phi", &arg]);
    assert_eq!(stdout(&o).trim(), "2");
    let missing = run(&["compute", "--invariant", "ell", "--phi", "@/nonexistent/phi.txt"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn user_errors_exit_with_two() {
    for args in [
        &["compute", "--invariant", "nope"][..],
        &["compute", "--invariant", "P", "--phi", "z"],
        &["compute", "--invariant", "P", "--phi", "z*"],
        &["verify", "--suite", "nope"],
        &["verify", "--suite", "reality", "--trials", "0"],
        &["eval", "--phi", "z*zb", "--invariant", "P", "--point", "z=1"],
        &["eval", "--phi", "z*zb", "--invariant", "P", "--point", "z=0,u=i"],
        &["eval", "--phi", "z + zb", "--invariant", "P", "--point", "z=0,u=0"],
        &["bogus"],
    ] {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{:?}: {}", args, String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn eval_examples() {
    let j = run(&["eval", "--phi", "z*zb", "--invariant", "J", "--point", "z=1/2+1/3i,u=0"]);
    assert_eq!(j.status.code(), Some(0));
    assert_eq!(stdout(&j).lines().next(), Some("0"));
    let ell = run(&["eval", "--phi", "z*zb + z^2*zb^2", "--invariant", "ell", "--point", "z=0,u=0"]);
    assert_eq!(stdout(&ell).lines().next(), Some("2"));
}

#[test]
fn eval_finite_difference_check() {
    let o = run(&[
        "eval", "--phi", "z*zb + u*z*zb", "--invariant", "P", "--point", "z=1/4,u=1/8", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 2);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    assert!(v["values"][0]["relative_error"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn eval_numeric_only() {
    let o = run(&["eval", "--phi", "z*zb", "--invariant", "ell", "--point", "z=1/3,u=0", "--numeric", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["values"][0].get("exact").is_none());
    assert_eq!(v["values"][0]["numeric"]["re"].as_f64(), Some(2.0));
}

#[test]
fn verify_report_schema_and_key_order() {
    let o = run(&["verify", "--suite", "reality", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let top: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    assert_eq!(top, ["command", "config", "checks", "timings", "seed", "version"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["command"], "verify");
    assert_eq!(v["seed"], 7);
    for c in v["checks"].as_array().unwrap() {
        assert_eq!(c["status"], "pass");
        assert!(c["name"].is_string());
    }
}

#[test]
fn theorem_suite_passes() {
    let o = run(&["verify", "--suite", "theorem", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn mutation_is_caught_with_a_witness() {
    let o = run(&["verify", "--suite", "w1v2", "--seed", "7", "--mutate", "seven-sixths"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let failed: Vec<&serde_json::Value> =
        v["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "fail").collect();
    assert!(!failed.is_empty());
    for c in failed {
        assert!(c["witness"].as_object().is_some_and(|w| !w.is_empty()));
        assert_ne!(c["residual"], "0");
    }
}

#[test]
fn expand_rigid_reports_a_count() {
    let o = run(&["expand-rigid", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["numerator_monomials"].as_u64().unwrap() > 0);
    assert_eq!(v["nonzero"], true);
    assert_eq!(v["model_value"], "0");
    let tight = run(&["expand-rigid", "--budget", "10"]);
    assert_eq!(tight.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&tight.stderr).contains("--budget"));
}
