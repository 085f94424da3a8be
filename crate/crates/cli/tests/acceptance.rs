//! The acceptance criteria, one line each. Runs without the test harness so
//! the lines always reach the output.

mod series;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cr_cartan::numeric::{eval_exact_at, eval_f64_at, relative_error};
use cr_core::invariants::{compute_ell, compute_j, compute_p, CrStructure, GroupParams, Invariant};
use cr_core::jet::specialize_phi;
use cr_core::parser::parse_phi;
use cr_core::poly::{expand_canonical, DEFAULT_BUDGET};
use cr_core::report::SuiteReport;
use cr_core::scalar::GaussianRational as Q;
use cr_core::suites::{run_suite, Suite, SuiteConfig};

use series::{Graph, Series};

type Outcome = Result<String, String>;

fn suites(cr: &CrStructure, which: &[Suite], cfg: &SuiteConfig) -> Outcome {
    let mut n = 0;
    for s in which {
        let r: SuiteReport = run_suite(*s, cr, cfg).map_err(|e| e.to_string())?;
        if let Some(bad) = r.failures().next() {
            return Err(format!(
                "{}: `{}` failed ({})",
                r.suite,
                bad.name,
                bad.detail.as_deref().unwrap_or("no detail")
            ));
        }
        n += r.checks.len();
    }
    Ok(format!("{} checks", n))
}

fn model_vanishing() -> Outcome {
    let cr = CrStructure::generic().map_err(|e| e.to_string())?;
    let phi = parse_phi("z*zb").map_err(|e| e.to_string())?;
    let canon = |e| {
        specialize_phi(&e, &phi)
            .and_then(|s| expand_canonical(&s, DEFAULT_BUDGET))
            .map_err(|e| e.to_string())
    };
    let p = canon(compute_p(&cr))?;
    let j = canon(compute_j(&cr, &GroupParams::symbolic()).map_err(|e| e.to_string())?)?;
    let ell = canon(compute_ell(&cr))?;
    let two = expand_canonical(&cr_core::expr::Expr::int(2), DEFAULT_BUDGET).unwrap();
    match (p.is_zero(), j.is_zero(), ell == two) {
        (true, true, true) => Ok("P = 0, J = 0, ell = 2".into()),
        r => Err(format!("P zero, J zero, ell two: {:?}", r)),
    }
}

fn reality_lemma(cr: &CrStructure) -> Outcome {
    let lpb = cr.word("L Pb").map_err(|e| e.to_string())?;
    let lbp = cr.word("Lb P").map_err(|e| e.to_string())?;
    let v = cr_core::report::Verifier::new(7, 20, DEFAULT_BUDGET);
    let mut r = SuiteReport::new("reality");
    v.zero_checks("lemma-lp", &[("L(Pb) - Lb(P)".into(), lpb - lbp)], &mut r)
        .map_err(|e| e.to_string())?;
    if r.passed() {
        Ok(format!("decided {}", r.checks[0].mode))
    } else {
        Err("L(Pb) - Lb(P) is nonzero".into())
    }
}

fn rigid_report() -> Outcome {
    let (canon, model) = cr_cartan::rigid_report(DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    if canon.is_zero() {
        return Err("rigid J expanded to zero".into());
    }
    if !model.is_zero() {
        return Err("rigid J does not vanish on the model".into());
    }
    Ok(format!(
        "{} numerator monomials over {}, 7 expected",
        canon.num.len(),
        canon.den.len()
    ))
}

fn nondegenerate_example() -> Outcome {
    let cr = CrStructure::generic().map_err(|e| e.to_string())?;
    let phi = parse_phi("z*zb + z^2*zb^2").map_err(|e| e.to_string())?;
    let (z, u) = (Q::from_ratio(1, 2), Q::zero());
    let exact = eval_exact_at(&cr, &phi, Invariant::J, &z, &u).map_err(|e| e.to_string())?[0].1.clone();
    let approx = eval_f64_at(&cr, &phi, Invariant::J, z.to_complex64(), 0.0).map_err(|e| e.to_string())?[0].1;
    let one = Q::one();
    let terms = [(one.clone(), (1, 1, 0)), (one, (2, 2, 0))];
    let taylor = Series::polynomial(&terms, (&z, &z.conj(), &u), 8);
    let graph = Graph::new(&taylor);
    let oracle = graph.j().value();
    for (which, series) in [(Invariant::Ell, &graph.ell), (Invariant::P, &graph.p)] {
        let v = eval_exact_at(&cr, &phi, which, &z, &u).map_err(|e| e.to_string())?[0].1.clone();
        if v != series.value() {
            return Err(format!("{} = {} but the series oracle gives {}", which.name(), v, series.value()));
        }
    }
    let err = relative_error(exact.to_complex64(), approx);
    if exact.is_zero() {
        return Err("J vanishes at the point".into());
    }
    if exact != oracle {
        return Err(format!("engine J = {} but the series oracle gives {}", exact, oracle));
    }
    if err > 1e-9 {
        return Err(format!("exact and double precision differ by {:.3e}", err));
    }
    Ok(format!("J = {} (oracle agrees), relative error {:.1e}", exact, err))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_cr-cartan");
    let run = || {
        Command::new(bin)
            .args(["verify", "--suite", "all", "--seed", "7"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if a.status.code() != Some(0) {
        return Err(format!(
            "verify exited with {:?}: {}",
            a.status.code(),
            String::from_utf8_lossy(&a.stderr)
        ));
    }
    if a.stdout != b.stdout {
        return Err("reports differ between runs".into());
    }
    Ok(format!("{} identical bytes, all checks pass", a.stdout.len()))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: Box<dyn Fn() -> Outcome>,
}

fn criterion(name: &'static str, secs: Option<u64>, run: impl Fn() -> Outcome + 'static) -> Criterion {
    Criterion {
        name,
        limit: secs.map(Duration::from_secs),
        run: Box::new(run),
    }
}

fn generic() -> CrStructure {
    CrStructure::generic().expect("generic structure")
}

fn main() -> ExitCode {
    let cfg = SuiteConfig {
        seed: 7,
        ..SuiteConfig::default()
    };
    let c = cfg.clone();
    let list = vec![
        criterion("model vanishing", Some(1), model_vanishing),
        criterion("frame brackets", Some(10), move || suites(&generic(), &[Suite::Brackets], &c)),
        criterion("reality lemma", Some(10), || reality_lemma(&generic())),
        {
            let c = cfg.clone();
            criterion("initial structure", Some(10), move || suites(&generic(), &[Suite::Initial], &c))
        },
        {
            let c = cfg.clone();
            criterion("first-loop torsions", Some(30), move || suites(&generic(), &[Suite::Lifted], &c))
        },
        {
            let c = cfg.clone();
            criterion("normalization cascade", Some(60), move || suites(&generic(), &[Suite::W2Vanish], &c))
        },
        {
            let c = cfg.clone();
            criterion("lemma identities and corollary", Some(120), move || {
                suites(&generic(), &[Suite::Jacobi4, Suite::W1V2], &c)
            })
        },
        {
            let c = cfg.clone();
            criterion("comparison theorem", Some(120), move || suites(&generic(), &[Suite::Theorem], &c))
        },
        {
            let c = cfg.clone();
            criterion("final e-structure", Some(600), move || {
                suites(&generic(), &[Suite::Final, Suite::Tfrak], &c)
            })
        },
        criterion("rigid report", Some(60), rigid_report),
        criterion("nondegenerate example", Some(10), nondegenerate_example),
        criterion("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (k, c) in list.iter().enumerate() {
        let t = Instant::now();
        let out = (c.run)();
        let took = t.elapsed();
        let slow = c.limit.is_some_and(|l| took > l);
        let (ok, msg) = match out {
            Ok(m) if slow => (false, format!("{}; exceeded {:?}", m, c.limit.unwrap())),
            Ok(m) => (true, m),
            Err(m) => (false, m),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {} [{:.2}s] {}",
            k + 1,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            msg
        );
    }
    println!("acceptance: {} of {} criteria pass", list.len() - failed, list.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
