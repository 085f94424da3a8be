use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use cr_core::error::Error;
use cr_core::expr::Expr;
use cr_core::jet::specialize_phi;
use cr_core::parser::parse_phi;
use cr_core::poly::{expand_canonical, Canonical};
use cr_core::render::{render, render_canonical, Format};
use cr_core::report::Check;
use cr_core::scalar::GaussianRational;
use cr_core::suites::rigid_expansion;

use crate::numeric::{eval_exact_at, eval_f64_at, fd_check, parse_point, relative_error, AGREEMENT_TOLERANCE, FD_TOLERANCE};
use crate::{
    group_slice, invariant_exprs, parse_invariant, read_source, structure, ComputeArgs, EvalArgs, ExpandArgs, Outcome,
    OutputFormat, Result, SuiteCheck, VERSION,
};

/// A verification report; field order is the serialized key order.
#[derive(Debug, Serialize)]
pub struct Report<C, K> {
    pub command: String,
    pub config: C,
    pub checks: Vec<K>,
    pub timings: BTreeMap<String, BTreeMap<String, u64>>,
    pub seed: u64,
    pub version: String,
}

impl<C: Serialize> Report<C, SuiteCheck> {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(SuiteCheck::passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Serialize)]
pub struct CanonicalText {
    pub name: String,
    pub expression: String,
    /// `canonical` when expanded, `tree` when printed as a DAG.
    pub form: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numerator_monomials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominator_monomials: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct ComputeConfig {
    pub invariant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    pub rigid: bool,
    pub b: String,
    pub c: String,
    pub s: String,
    pub budget: usize,
}

#[derive(Debug, Serialize)]
pub struct ComputeOutput {
    pub command: String,
    pub config: ComputeConfig,
    pub results: Vec<CanonicalText>,
    pub version: String,
}

fn core_format(f: OutputFormat) -> Format {
    match f {
        OutputFormat::Tex => Format::Tex,
        _ => Format::Plain,
    }
}

fn text_of(name: String, e: &Expr, budget: usize, format: Format) -> Result<CanonicalText> {
    match expand_canonical(e, budget) {
        Ok(c) => Ok(CanonicalText {
            name,
            expression: render_canonical(&c, format)?,
            form: "canonical",
            numerator_monomials: Some(c.num.len()),
            denominator_monomials: Some(c.den.len()),
        }),
        Err(Error::ExpansionOverflow { .. }) => Ok(CanonicalText {
            name,
            expression: render(e, format)?,
            form: "tree",
            numerator_monomials: None,
            denominator_monomials: None,
        }),
        Err(e) => Err(e.into()),
    }
}

pub fn compute(a: &ComputeArgs) -> Result<Outcome> {
    let which = parse_invariant(&a.invariant)?;
    let cr = structure(a.rigid)?;
    let gp = group_slice(&a.b, &a.c, &a.s)?;
    let phi_src = a.phi.as_deref().map(read_source).transpose()?;
    let phi = phi_src.as_deref().map(parse_phi).transpose()?;
    let format = core_format(a.format);
    let mut results = Vec::new();
    for (name, e) in invariant_exprs(&cr, &gp, which)? {
        let e = match &phi {
            Some(phi) => specialize_phi(&e, phi)?,
            None => e,
        };
        results.push(text_of(name, &e, a.budget, format)?);
    }
    let text = match a.format {
        OutputFormat::Json => {
            let out = ComputeOutput {
                command: "compute".into(),
                config: ComputeConfig {
                    invariant: which.name().into(),
                    phi: phi_src.map(|s| s.trim().to_string()),
                    rigid: a.rigid,
                    b: a.b.clone(),
                    c: a.c.clone(),
                    s: a.s.clone(),
                    budget: a.budget,
                },
                results,
                version: VERSION.into(),
            };
            serde_json::to_string_pretty(&out).expect("output serializes") + "\n"
        }
        _ if results.len() == 1 => format!("{}\n", results[0].expression),
        _ => results
            .iter()
            .map(|r| format!("{} = {}\n", r.name, r.expression))
            .collect(),
    };
    Ok(Outcome { text, passed: true })
}

#[derive(Debug, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(c: Complex64) -> Self {
        ComplexValue { re: c.re, im: c.im }
    }
}

#[derive(Debug, Serialize)]
pub struct EvalValue {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub numeric: ComplexValue,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_error: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EvalConfig {
    pub phi: String,
    pub invariant: String,
    pub point: String,
    pub numeric: bool,
}

#[derive(Debug, Serialize)]
pub struct EvalOutput {
    pub command: String,
    pub config: EvalConfig,
    pub values: Vec<EvalValue>,
    pub checks: Vec<Check>,
    pub version: String,
}

pub fn eval(a: &EvalArgs) -> Result<Outcome> {
    let which = parse_invariant(&a.invariant)?;
    let phi_src = read_source(&a.phi)?;
    let phi = parse_phi(&phi_src)?;
    let (z, u) = parse_point(&a.point)?;
    let cr = structure(false)?;
    let zc = z.to_complex64();
    let uf = u.to_complex64().re;
    let numeric = eval_f64_at(&cr, &phi, which, zc, uf)?;
    let exact: Option<Vec<(String, GaussianRational)>> = if a.numeric {
        None
    } else {
        Some(eval_exact_at(&cr, &phi, which, &z, &u)?)
    };
    let mut checks = Vec::new();
    let mut values = Vec::new();
    for (k, (name, x)) in numeric.into_iter().enumerate() {
        let ex = exact.as_ref().map(|v| &v[k].1);
        let err = ex.map(|e| relative_error(e.to_complex64(), x));
        values.push(EvalValue {
            name,
            exact: ex.map(|e| e.to_string()),
            numeric: x.into(),
            relative_error: err,
        });
    }
    if exact.is_some() {
        let worst = values.iter().filter_map(|v| v.relative_error).fold(0.0, f64::max);
        checks.push(Check::new(
            "exact and double-precision values agree",
            worst <= AGREEMENT_TOLERANCE,
            "numeric",
            Some(format!("relative error {:.3e}", worst)),
        ));
    }
    let fd = fd_check(&cr, &phi, which, zc, uf)?;
    checks.push(Check::new(
        "total derivative matches a central difference",
        fd.relative_error <= FD_TOLERANCE,
        "numeric",
        Some(format!("{}: relative error {:.3e}", fd.quantity, fd.relative_error)),
    ));
    let passed = checks.iter().all(Check::passed);
    let text = match a.format {
        OutputFormat::Json => {
            let out = EvalOutput {
                command: "eval".into(),
                config: EvalConfig {
                    phi: phi_src.trim().to_string(),
                    invariant: which.name().into(),
                    point: a.point.clone(),
                    numeric: a.numeric,
                },
                values,
                checks,
                version: VERSION.into(),
            };
            serde_json::to_string_pretty(&out).expect("output serializes") + "\n"
        }
        _ => {
            let mut s = String::new();
            for v in &values {
                let prefix = if values.len() > 1 { format!("{} = ", v.name) } else { String::new() };
                match &v.exact {
                    Some(e) => s += &format!("{}{}\n", prefix, e),
                    None => s += &format!("{}{} + {}*i\n", prefix, v.numeric.re, v.numeric.im),
                }
            }
            for c in &checks {
                s += &format!(
                    "# {}: {} ({})\n",
                    c.name,
                    if c.passed() { "pass" } else { "fail" },
                    c.detail.as_deref().unwrap_or("")
                );
            }
            s
        }
    };
    Ok(Outcome { text, passed })
}

#[derive(Debug, Serialize)]
pub struct ExpandOutput {
    pub command: String,
    pub budget: usize,
    pub numerator: String,
    pub denominator: String,
    pub numerator_monomials: usize,
    pub denominator_monomials: usize,
    pub nonzero: bool,
    pub model_value: String,
    pub version: String,
}

/// Rigid expansion of the essential invariant, and its value on the model.
pub fn rigid_report(budget: usize) -> Result<(Canonical, Canonical)> {
    let (_, canon) = rigid_expansion(budget)?;
    let model = specialize_phi(&canon.to_expr(), &parse_phi("z*zb")?)?;
    let m = expand_canonical(&model, budget)?;
    Ok((canon, m))
}

pub fn expand(a: &ExpandArgs) -> Result<Outcome> {
    let (canon, model) = match rigid_report(a.budget) {
        Err(crate::CliError::Core(Error::ExpansionOverflow { limit })) => {
            return Err(crate::CliError::Usage(format!(
                "rigid expansion exceeded the budget of {} terms; rerun with a larger --budget",
                limit
            )))
        }
        other => other?,
    };
    let format = core_format(a.format);
    let poly_text = |p: &cr_core::poly::Poly| -> Result<String> {
        Ok(render_canonical(&Canonical::from_poly(p.clone()), format)?)
    };
    let out = ExpandOutput {
        command: "expand-rigid".into(),
        budget: a.budget,
        numerator: poly_text(&canon.num)?,
        denominator: poly_text(&canon.den)?,
        numerator_monomials: canon.num.len(),
        denominator_monomials: canon.den.len(),
        nonzero: !canon.is_zero(),
        model_value: render_canonical(&model, Format::Plain)?,
        version: VERSION.into(),
    };
    let passed = out.nonzero && model.is_zero();
    let text = match a.format {
        OutputFormat::Json => serde_json::to_string_pretty(&out).expect("output serializes") + "\n",
        _ => format!(
            "numerator: {}\ndenominator: {}\nmonomials: {} over {}\nmodel z*zb: {}\n",
            out.numerator, out.denominator, out.numerator_monomials, out.denominator_monomials, out.model_value
        ),
    };
    Ok(Outcome { text, passed })
}
