//! Verdicts of verification runs and the zero-testing driver that produces them.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::eval::Assignment;
use crate::expr::Expr;
use crate::poly::{expand_canonical, program_size};
use crate::sample::derive_seed;
use crate::scalar::GaussianRational;
use crate::zero::{Witness, ZeroTester, ZeroVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One named check and its outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// A check decided outside the zero tester.
    pub fn new(name: impl Into<String>, ok: bool, mode: &str, detail: Option<String>) -> Check {
        Check {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            mode: mode.to_string(),
            witness: None,
            residual: None,
            detail,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub counters: BTreeMap<String, u64>,
}

impl SuiteReport {
    pub fn new(suite: &str) -> SuiteReport {
        SuiteReport {
            suite: suite.to_string(),
            checks: Vec::new(),
            counters: BTreeMap::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn count(&mut self, key: &str, n: u64) {
        *self.counters.entry(key.to_string()).or_insert(0) += n;
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

pub fn witness_map(point: &Assignment) -> BTreeMap<String, String> {
    point.iter().map(|(v, x)| (v.to_string(), x.to_string())).collect()
}

fn short(x: &GaussianRational) -> String {
    let s = x.to_string();
    if s.len() > 160 {
        let c = x.to_complex64();
        format!("~({:.6e} + {:.6e}*i)", c.re, c.im)
    } else {
        s
    }
}

/// Decides many residuals: exactly when small, otherwise at shared random points.
#[derive(Clone, Debug)]
pub struct Verifier {
    pub seed: u64,
    pub trials: u32,
    pub budget: usize,
    /// Residuals whose DAG has at most this many nodes are expanded canonically.
    pub canonical_nodes: usize,
    /// Work limit for that opportunistic expansion, separate from `budget`.
    pub canonical_work: usize,
    pub exclusions: Vec<Expr>,
    pub fixed: Assignment,
}

impl Verifier {
    pub fn new(seed: u64, trials: u32, budget: usize) -> Verifier {
        Verifier {
            seed,
            trials,
            budget,
            canonical_nodes: 200,
            canonical_work: 50_000,
            exclusions: Vec::new(),
            fixed: Assignment::new(),
        }
    }

    pub fn with_exclusions(mut self, ex: Vec<Expr>) -> Verifier {
        self.exclusions = ex;
        self
    }

    pub fn with_fixed(mut self, fixed: Assignment) -> Verifier {
        self.fixed = fixed;
        self
    }

    /// Zero-test each `(name, residual)`; `label` separates random streams.
    pub fn zero_checks(&self, label: &str, items: &[(String, Expr)], report: &mut SuiteReport) -> Result<()> {
        let exprs: Vec<Expr> = items.iter().map(|(_, e)| e.clone()).collect();
        let decided = self.decide(label, &exprs, report)?;
        for ((name, _), (mode, verdict)) in items.iter().zip(decided) {
            report.checks.push(match verdict {
                ZeroVerdict::Zero => Check::new(name.clone(), true, mode, None),
                ZeroVerdict::NonZero(w) => failed(name.clone(), w, None),
            });
        }
        Ok(())
    }

    /// One check per group; a group passes when all of its members vanish.
    pub fn grouped_checks(
        &self,
        label: &str,
        groups: &[(String, Vec<(String, Expr)>)],
        report: &mut SuiteReport,
    ) -> Result<()> {
        let exprs: Vec<Expr> = groups
            .iter()
            .flat_map(|(_, g)| g.iter().map(|(_, e)| e.clone()))
            .collect();
        let decided = self.decide(label, &exprs, report)?;
        let mut it = decided.into_iter();
        for (name, members) in groups {
            let mut mode = "structural";
            let mut bad = None;
            for (part, _) in members {
                let (m, v) = it.next().expect("one verdict per member");
                if m == "probabilistic" || (m == "canonical" && mode == "structural") {
                    mode = m;
                }
                if bad.is_none() {
                    if let ZeroVerdict::NonZero(w) = v {
                        bad = Some((part.clone(), w));
                    }
                }
            }
            report.checks.push(match bad {
                None => Check::new(name.clone(), true, mode, Some(format!("{} components", members.len()))),
                Some((part, w)) => failed(name.clone(), w, Some(format!("component {}", part))),
            });
        }
        Ok(())
    }

    fn decide(&self, label: &str, exprs: &[Expr], report: &mut SuiteReport) -> Result<Vec<(&'static str, ZeroVerdict)>> {
        let mut out: Vec<Option<(&'static str, ZeroVerdict)>> = vec![None; exprs.len()];
        let mut pending = Vec::new();
        for (k, e) in exprs.iter().enumerate() {
            if e.is_zero() {
                out[k] = Some(("structural", ZeroVerdict::Zero));
                continue;
            }
            if self.fixed.is_empty() && program_size(e) <= self.canonical_nodes {
                if let Ok(c) = expand_canonical(e, self.canonical_work.min(self.budget)) {
                    report.count("canonical_expansions", 1);
                    if c.is_zero() {
                        out[k] = Some(("canonical", ZeroVerdict::Zero));
                        continue;
                    }
                }
            }
            pending.push(k);
        }
        if !pending.is_empty() {
            let roots: Vec<Expr> = pending.iter().map(|&k| exprs[k].clone()).collect();
            let tester = ZeroTester::new(self.trials, derive_seed(self.seed, label))
                .with_exclusions(self.exclusions.clone())
                .with_fixed(self.fixed.clone());
            report.count("program_nodes", program_size_many(&roots, &self.exclusions) as u64);
            report.count("trials", self.trials as u64);
            let verdicts = tester.test_many(&roots)?;
            for (&k, v) in pending.iter().zip(verdicts) {
                out[k] = Some(("probabilistic", v));
            }
        }
        Ok(out.into_iter().map(|x| x.expect("every residual decided")).collect())
    }
}

fn failed(name: String, w: Option<Witness>, detail: Option<String>) -> Check {
    let (witness, residual) = match w {
        Some(w) => (Some(witness_map(&w.point)), Some(short(&w.value))),
        None => (None, None),
    };
    Check {
        name,
        status: Status::Fail,
        mode: "probabilistic".into(),
        witness,
        residual,
        detail,
    }
}

fn program_size_many(roots: &[Expr], extra: &[Expr]) -> usize {
    let mut all = roots.to_vec();
    all.extend_from_slice(extra);
    crate::eval::Program::new(&all).len()
}
