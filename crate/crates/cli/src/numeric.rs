//! Evaluation of invariants of a concrete defining function at a base point,
//! exactly and in double precision, with a finite-difference derivative check.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use cr_core::error::Error;
use cr_core::eval::{eval_exact, Program};
use cr_core::expr::Expr;
use cr_core::invariants::{compute_ell, compute_p, CrStructure, GroupParams, Invariant};
use cr_core::jet::{base_point, jet_values, PhiJets};
use cr_core::parser::parse_constant;
use cr_core::scalar::GaussianRational;
use cr_core::var::{BaseVar, VarId};

use crate::{invariant_exprs, CliError, Result};

pub const FD_STEP: f64 = 1e-4;
pub const FD_TOLERANCE: f64 = 1e-6;
pub const AGREEMENT_TOLERANCE: f64 = 1e-9;

/// `z=<a+bi>,u=<r>`, with `u` real.
pub fn parse_point(src: &str) -> Result<(GaussianRational, GaussianRational)> {
    let mut z = None;
    let mut u = None;
    for part in src.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected `name=value` in `{}`", part)))?;
        let x = parse_constant(v.trim())?;
        match k.trim() {
            "z" => z = Some(x),
            "u" => {
                if !x.is_real() {
                    return Err(CliError::Usage("u must be real".into()));
                }
                u = Some(x)
            }
            other => return Err(CliError::Usage(format!("unknown coordinate `{}`; expected z or u", other))),
        }
    }
    Ok((
        z.ok_or_else(|| CliError::Usage("the point needs a value for z".into()))?,
        u.ok_or_else(|| CliError::Usage("the point needs a value for u".into()))?,
    ))
}

fn jets_in(exprs: &[Expr]) -> BTreeSet<VarId> {
    cr_core::expr::vars_of(exprs)
        .into_iter()
        .filter(|v| matches!(v, VarId::Jet(_)))
        .collect()
}

fn complex_point(z: Complex64, u: f64, jets: &BTreeSet<VarId>, pj: &mut PhiJets) -> Result<BTreeMap<VarId, Complex64>> {
    let mut p = BTreeMap::new();
    p.insert(VarId::Z, z);
    p.insert(VarId::ZB, z.conj());
    p.insert(VarId::U, Complex64::new(u, 0.0));
    let base = p.clone();
    for v in jets {
        if let VarId::Jet(j) = v {
            let e = pj.get(*j)?;
            p.insert(*v, Program::new(std::slice::from_ref(&e)).eval_complex(&base)?[0]);
        }
    }
    Ok(p)
}

/// Values of an invariant at the identity slice, exactly in Q(i).
pub fn eval_exact_at(
    cr: &CrStructure,
    phi: &Expr,
    which: Invariant,
    z: &GaussianRational,
    u: &GaussianRational,
) -> Result<Vec<(String, GaussianRational)>> {
    let exprs = invariant_exprs(cr, &GroupParams::identity(), which)?;
    let mut roots: Vec<Expr> = vec![compute_ell(cr)];
    roots.extend(exprs.iter().map(|(_, e)| e.clone()));
    let point = jet_values(phi, &jets_in(&roots), &base_point(z, u))?;
    let ell = eval_exact(&roots[0], &point)?;
    if ell.is_zero() {
        return Err(CliError::Usage("the point is Levi-degenerate (ell = 0)".into()));
    }
    let vals = Program::new(&roots[1..]).eval_exact(&point)?;
    Ok(exprs.into_iter().map(|(n, _)| n).zip(vals).collect())
}

/// Values of an invariant at the identity slice in double precision.
pub fn eval_f64_at(cr: &CrStructure, phi: &Expr, which: Invariant, z: Complex64, u: f64) -> Result<Vec<(String, Complex64)>> {
    let exprs = invariant_exprs(cr, &GroupParams::identity(), which)?;
    let mut roots: Vec<Expr> = vec![compute_ell(cr)];
    roots.extend(exprs.iter().map(|(_, e)| e.clone()));
    let mut pj = PhiJets::new(phi);
    let point = complex_point(z, u, &jets_in(&roots), &mut pj)?;
    let vals = Program::new(&roots).eval_complex(&point)?;
    if vals[0].norm() == 0.0 {
        return Err(CliError::Usage("the point is Levi-degenerate (ell = 0)".into()));
    }
    Ok(exprs.into_iter().map(|(n, _)| n).zip(vals.into_iter().skip(1)).collect())
}

/// `|a - b| / max(|a|, 1)`.
pub fn relative_error(exact: Complex64, approx: Complex64) -> f64 {
    (exact - approx).norm() / exact.norm().max(1.0)
}

#[derive(Clone, Debug)]
pub struct FdCheck {
    pub quantity: String,
    pub derivative: Complex64,
    pub difference: Complex64,
    pub relative_error: f64,
}

/// Compare the total `u`-derivative of the invariant's first component with a
/// central difference in `u`; falls back to `P` when the jet order runs out.
pub fn fd_check(cr: &CrStructure, phi: &Expr, which: Invariant, z: Complex64, u: f64) -> Result<FdCheck> {
    let (name, f) = invariant_exprs(cr, &GroupParams::identity(), which)?.remove(0);
    let (name, f, df) = match cr.ctx().total_derivative(&f, BaseVar::U) {
        Ok(df) => (name, f, df),
        Err(Error::JetOrderExceeded { .. }) => {
            let p = compute_p(cr);
            let dp = cr.ctx().total_derivative(&p, BaseVar::U)?;
            ("P".to_string(), p, dp)
        }
        Err(e) => return Err(e.into()),
    };
    let roots = [f, df];
    let jets = jets_in(&roots);
    let program = Program::new(&roots);
    let mut pj = PhiJets::new(phi);
    let at = |uu: f64, pj: &mut PhiJets| -> Result<Vec<Complex64>> {
        Ok(program.eval_complex(&complex_point(z, uu, &jets, pj)?)?)
    };
    let derivative = at(u, &mut pj)?[1];
    let plus = at(u + FD_STEP, &mut pj)?[0];
    let minus = at(u - FD_STEP, &mut pj)?[0];
    let difference = (plus - minus) / (2.0 * FD_STEP);
    Ok(FdCheck {
        quantity: format!("d/du {}", name),
        relative_error: relative_error(derivative, difference),
        derivative,
        difference,
    })
}
