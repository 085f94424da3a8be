//! Command-line surface over `cr-core`: compute, verify, eval and expand-rigid.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use cr_core::invariants::{compute_invariant, CrStructure, GroupParams, Invariant, Mutation};
use cr_core::report::{Check, SuiteReport};
use cr_core::suites::{run_suite, Suite, SuiteConfig};
use cr_core::zero::DEFAULT_SEED;

pub mod numeric;
mod output;

pub use output::{rigid_report, CanonicalText, ComputeOutput, EvalOutput, ExpandOutput, Report};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cr_core::Error),
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "cr-cartan", version, about = "Cartan invariants of Levi-nondegenerate real hypersurfaces in C^2")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print an invariant, generically or for a given defining function.
    Compute(ComputeArgs),
    /// Run verification suites and emit a JSON report.
    Verify(VerifyArgs),
    /// Evaluate an invariant of a defining function at a point.
    Eval(EvalArgs),
    /// Expand the essential invariant in the rigid case.
    ExpandRigid(ExpandArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Plain,
    Tex,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MutationArg {
    SevenSixths,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// Defining function, inline or `@path`; generic jets when absent.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub invariant: String,
    /// Restrict to jets without u-derivatives.
    #[arg(long)]
    pub rigid: bool,
    #[arg(long, default_value = "0")]
    pub b: String,
    #[arg(long, default_value = "1")]
    pub c: String,
    #[arg(long, default_value = "0")]
    pub s: String,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: OutputFormat,
    #[arg(long, default_value_t = cr_core::poly::DEFAULT_BUDGET)]
    pub budget: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// A suite name, or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = cr_core::zero::DEFAULT_TRIALS)]
    pub trials: u32,
    #[arg(long, default_value_t = cr_core::poly::DEFAULT_BUDGET)]
    pub budget: usize,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, hide = true)]
    pub mutate: Option<MutationArg>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub phi: String,
    #[arg(long)]
    pub invariant: String,
    /// `z=<a+bi>,u=<r>`
    #[arg(long)]
    pub point: String,
    /// Skip the exact path and report the double-precision value only.
    #[arg(long)]
    pub numeric: bool,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long, default_value_t = cr_core::poly::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, value_enum, default_value = "plain")]
    pub format: OutputFormat,
}

/// Text to print and whether every check passed.
pub struct Outcome {
    pub text: String,
    pub passed: bool,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Compute(a) => output::compute(a),
        Command::Verify(a) => {
            let report = verify(a)?;
            let text = report.to_json();
            if let Some(path) = &a.output {
                std::fs::write(path, &text).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
            }
            Ok(Outcome {
                passed: report.passed(),
                text,
            })
        }
        Command::Eval(a) => output::eval(a),
        Command::ExpandRigid(a) => output::expand(a),
    }
}

/// Read `@path` sources, pass inline text through.
pub fn read_source(src: &str) -> Result<String> {
    match src.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.into(),
            source,
        }),
        None => Ok(src.to_string()),
    }
}

pub fn parse_invariant(name: &str) -> Result<Invariant> {
    name.parse::<Invariant>().map_err(|_| {
        let names: Vec<&str> = Invariant::ALL.iter().map(|i| i.name()).collect();
        CliError::Usage(format!("unknown invariant `{}`; expected one of {}", name, names.join(", ")))
    })
}

pub fn suites_for(name: &str) -> Result<Vec<Suite>> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    name.parse::<Suite>().map(|s| vec![s]).map_err(|_| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        CliError::Usage(format!("unknown suite `{}`; expected all or one of {}", name, names.join(", ")))
    })
}

#[derive(Debug, Serialize)]
pub struct VerifyConfig {
    pub suite: String,
    pub seed: u64,
    pub trials: u32,
    pub budget: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SuiteCheck {
    pub suite: String,
    #[serde(flatten)]
    pub check: Check,
}

pub fn verify(a: &VerifyArgs) -> Result<Report<VerifyConfig, SuiteCheck>> {
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let suites = suites_for(&a.suite)?;
    let cfg = SuiteConfig {
        seed: a.seed,
        trials: a.trials,
        budget: a.budget,
        mutation: match a.mutate {
            Some(MutationArg::SevenSixths) => Mutation::SevenSixths,
            None => Mutation::None,
        },
    };
    let cr = CrStructure::generic()?;
    let mut checks = Vec::new();
    let mut timings: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for s in suites {
        let r: SuiteReport = run_suite(s, &cr, &cfg)?;
        timings.insert(r.suite.clone(), r.counters.clone());
        checks.extend(r.checks.into_iter().map(|check| SuiteCheck {
            suite: r.suite.clone(),
            check,
        }));
    }
    Ok(Report {
        command: "verify".into(),
        config: VerifyConfig {
            suite: a.suite.clone(),
            seed: a.seed,
            trials: a.trials,
            budget: a.budget,
            mutation: a.mutate.map(|_| "seven-sixths".to_string()),
        },
        checks,
        timings,
        seed: a.seed,
        version: VERSION.into(),
    })
}

impl SuiteCheck {
    pub fn passed(&self) -> bool {
        self.check.passed()
    }
}

/// Group parameters from `--b`, `--c`, `--s`.
pub fn group_slice(b: &str, c: &str, s: &str) -> Result<GroupParams> {
    let p = |x: &str| cr_core::parser::parse_expression(x);
    Ok(GroupParams::with_values(p(b)?, p(c)?, p(s)?)?)
}

/// The structure for generic or rigid jets.
pub fn structure(rigid: bool) -> Result<CrStructure> {
    Ok(if rigid {
        CrStructure::rigid()?
    } else {
        CrStructure::generic()?
    })
}

/// Named expressions for one invariant selector.
pub fn invariant_exprs(
    cr: &CrStructure,
    gp: &GroupParams,
    which: Invariant,
) -> Result<Vec<(String, cr_core::expr::Expr)>> {
    Ok(compute_invariant(cr, gp, which)?)
}
