//! Named verification suites over generic jets.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::invariants::{
    compute_deltas, compute_j, compute_v2, compute_v3_with, compute_w, compute_w1, corollary_residual,
    delta_coefficients, lemma_identities, r_rhs, sbar_rhs, w1_deltabar, w2_deltabar, CrStructure, GroupParams,
    Mutation,
};
use crate::jet::{lie_bracket, specialize_phi, VectorField};
use crate::parser::parse_phi;
use crate::poly::{expand_canonical, Canonical};
use crate::report::{Check, SuiteReport, Verifier};
use crate::var::{GroupVar, VarId};
use crate::zero::DEFAULT_SEED;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Reality,
    Brackets,
    Jacobi4,
    W2Vanish,
    W1V2,
    Theorem,
    RigidReport,
    Initial,
    RhoVarrho,
    Lifted,
    Prolonged,
    Final,
    Tfrak,
}

impl Suite {
    pub const ALL: [Suite; 13] = [
        Suite::Reality,
        Suite::Brackets,
        Suite::Jacobi4,
        Suite::W2Vanish,
        Suite::W1V2,
        Suite::Theorem,
        Suite::RigidReport,
        Suite::Initial,
        Suite::RhoVarrho,
        Suite::Lifted,
        Suite::Prolonged,
        Suite::Final,
        Suite::Tfrak,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Reality => "reality",
            Suite::Brackets => "brackets",
            Suite::Jacobi4 => "jacobi4",
            Suite::W2Vanish => "w2vanish",
            Suite::W1V2 => "w1v2",
            Suite::Theorem => "theorem",
            Suite::RigidReport => "rigid-report",
            Suite::Initial => "initial",
            Suite::RhoVarrho => "rho-varrho",
            Suite::Lifted => "lifted",
            Suite::Prolonged => "prolonged",
            Suite::Final => "final",
            Suite::Tfrak => "tfrak",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown suite `{}`", s)))
    }
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub trials: u32,
    pub budget: usize,
    pub mutation: Mutation,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: DEFAULT_SEED,
            trials: crate::zero::DEFAULT_TRIALS,
            budget: crate::poly::DEFAULT_BUDGET,
            mutation: Mutation::None,
        }
    }
}

impl SuiteConfig {
    pub fn verifier(&self, cr: &CrStructure) -> Verifier {
        let gp = GroupParams::symbolic();
        Verifier::new(self.seed, self.trials, self.budget)
            .with_exclusions(vec![cr.ell().clone(), gp.c.clone(), gp.cb.clone()])
    }
}

fn named(name: &str, e: Expr) -> (String, Expr) {
    (name.to_string(), e)
}

fn field_residuals(prefix: &str, x: &VectorField) -> Vec<(String, Expr)> {
    vec![
        named(&format!("{} [z]", prefix), x.z.clone()),
        named(&format!("{} [zb]", prefix), x.zb.clone()),
        named(&format!("{} [u]", prefix), x.u.clone()),
    ]
}

/// Run one suite. Form-level suites are delegated to [`crate::forms`].
pub fn run_suite(suite: Suite, cr: &CrStructure, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut report = SuiteReport::new(suite.name());
    let v = cfg.verifier(cr);
    let label = suite.name();
    let items = match suite {
        Suite::Reality => reality(cr)?,
        Suite::Brackets => brackets(cr)?,
        Suite::Jacobi4 => jacobi4(cr)?,
        Suite::W2Vanish => w2vanish(cr)?,
        Suite::W1V2 => w1v2(cr, cfg.mutation)?,
        Suite::Theorem => {
            theorem_audit(cr, &mut report)?;
            theorem(cr)?
        }
        Suite::RigidReport => {
            rigid_report(cfg, &mut report)?;
            Vec::new()
        }
        Suite::Initial
        | Suite::RhoVarrho
        | Suite::Lifted
        | Suite::Prolonged
        | Suite::Final
        | Suite::Tfrak => {
            crate::forms::run_form_suite(suite, cr, cfg, &mut report)?;
            Vec::new()
        }
    };
    if !items.is_empty() {
        v.zero_checks(label, &items, &mut report)?;
    }
    Ok(report)
}

fn reality(cr: &CrStructure) -> Result<Vec<(String, Expr)>> {
    let gp = GroupParams::symbolic();
    let bound = gp.bind_sbar(cr)?;
    let w = compute_w(cr, &gp)?;
    let w1 = compute_w1(cr, &bound)?;
    let sb = sbar_rhs(cr, &gp)?;
    let (d1, d4) = compute_deltas(cr)?;
    Ok(vec![
        named("L(Pb) - Lb(P)", cr.word("L Pb")? - cr.word("Lb P")?),
        named("conj(ell) - ell", cr.ell().conj() - cr.ell()),
        named("conj(W) - W", w.conj() - &w),
        named("conj(sbar) - s", bound.conj(&sb) - &gp.s),
        named("conj(W1) - W1", bound.conj(&w1) - &w1),
        named("conj(Delta1) - Delta1", d1.conj() - &d1),
        named("conj(Delta4) - Delta4", d4.conj() - &d4),
    ])
}

fn brackets(cr: &CrStructure) -> Result<Vec<(String, Expr)>> {
    let ctx = cr.ctx();
    let f = cr.frame();
    let i = Expr::i();
    let jets = |a, b, c| ctx.jet(a, b, c);
    let tangency = &i * cr.a() + cr.a() * jets(0, 0, 1) + jets(1, 0, 0);
    let llb = lie_bracket(ctx, &f.l, &f.lbar)?.add(&f.t.scale(&i));
    let tl = lie_bracket(ctx, &f.t, &f.l)?.add(&f.t.scale(cr.p()));
    let tlb = lie_bracket(ctx, &f.t, &f.lbar)?.add(&f.t.scale(cr.pbar()));
    let mut out = vec![named("tangency of A", tangency)];
    out.extend(field_residuals("[L,Lb] + i T", &llb));
    out.extend(field_residuals("[T,L] + P T", &tl));
    out.extend(field_residuals("[T,Lb] + Pb T", &tlb));
    Ok(out)
}

fn h_fields(cr: &CrStructure) -> (VectorField, VectorField) {
    let f = cr.frame();
    let h1 = f.l.add(&f.lbar);
    let h2 = f.l.sub(&f.lbar).scale(&Expr::i());
    (h1, h2)
}

fn jacobi4(cr: &CrStructure) -> Result<Vec<(String, Expr)>> {
    let ctx = cr.ctx();
    let (h1, h2) = h_fields(cr);
    let h12 = lie_bracket(ctx, &h1, &h2)?;
    let hyp1 = lie_bracket(ctx, &h1, &h12)?.sub(&h12.scale(&cr.phi1()));
    let hyp2 = lie_bracket(ctx, &h2, &h12)?.sub(&h12.scale(&cr.phi2()));
    let two_t = h12.add(&cr.frame().t.scale(&Expr::int(2)));
    let [i1, i2, i3, i4] = lemma_identities(cr)?;
    let mut out = Vec::new();
    out.extend(field_residuals("[H1,[H1,H2]] - Phi1 [H1,H2]", &hyp1));
    out.extend(field_residuals("[H2,[H1,H2]] - Phi2 [H1,H2]", &hyp2));
    out.extend(field_residuals("[H1,H2] + 2 T", &two_t));
    out.push(named("identity I", i1));
    out.push(named("identity II", i2));
    out.push(named("identity III", i3));
    out.push(named("identity IV", i4));
    Ok(out)
}

fn w2vanish(cr: &CrStructure) -> Result<Vec<(String, Expr)>> {
    let gp = GroupParams::symbolic();
    let w = compute_w(cr, &gp)?;
    let bound = gp.bind_sbar(cr)?;
    let full = bound.bind_r(cr)?;
    Ok(vec![
        named("conj(W) - W", w.conj() - &w),
        named("W after sbar binding", compute_w(cr, &bound)?),
        named("W2 after r binding", w2_deltabar(cr, &full)?),
    ])
}

fn w1v2(cr: &CrStructure, mutation: Mutation) -> Result<Vec<(String, Expr)>> {
    let gp = GroupParams::symbolic().bind_sbar(cr)?;
    let full = gp.bind_r(cr)?;
    let w1 = compute_w1(cr, &gp)?;
    let v2 = compute_v2(cr, &gp)?;
    let v3 = compute_v3_with(cr, &gp, mutation)?;
    let j = compute_j(cr, &gp)?;
    let delta = delta_coefficients(cr, &gp)?;
    Ok(vec![
        named("conj(V2) - i W1 - V2", gp.conj(&v2) - Expr::i() * &w1 - &v2),
        named("displayed corollary residual", corollary_residual(cr, &gp)?),
        named("W1 displays agree after r binding", w1_deltabar(cr, &full)? - &w1),
        named("rho coefficient of delta + V2", &delta.rho + &v2),
        named("J - V3", j - v3),
    ])
}

fn theorem(cr: &CrStructure) -> Result<Vec<(String, Expr)>> {
    let gp = GroupParams::symbolic();
    let j = compute_j(cr, &gp)?;
    let (d1, d4) = compute_deltas(cr)?;
    let scaled = j * &gp.c * gp.cb.pow(3) * Expr::rat(1, 4);
    Ok(vec![named("J c cb^3 / 4 - (Delta1 + i Delta4)", scaled - d1 - Expr::i() * d4)])
}

fn theorem_audit(cr: &CrStructure, report: &mut SuiteReport) -> Result<()> {
    let gp = GroupParams::symbolic();
    let j = compute_j(cr, &gp)?;
    let order = j.max_jet_order();
    report.checks.push(Check::new(
        "J involves jets of order at most 6",
        order <= 6,
        "structural",
        Some(format!("maximal jet order {}", order)),
    ));
    let forbidden = [GroupVar::B, GroupVar::Bb, GroupVar::S, GroupVar::Sb, GroupVar::R, GroupVar::Rb];
    let free = forbidden.iter().all(|g| !j.contains_var(VarId::Group(*g)));
    report.checks.push(Check::new("J is free of b, s, r", free, "structural", None));
    let r = r_rhs(cr, &gp)?;
    let rfree = !r.contains_var(VarId::Group(GroupVar::S));
    report.checks.push(Check::new("r is free of s", rfree, "structural", None));
    Ok(())
}

/// The essential invariant on rigid jets at the identity slice, and its expansion.
pub fn rigid_expansion(budget: usize) -> Result<(Expr, Canonical)> {
    let cr = CrStructure::rigid()?;
    let j = compute_j(&cr, &GroupParams::identity())?;
    let canon = expand_canonical(&j, budget)?;
    Ok((j, canon))
}

fn rigid_report(cfg: &SuiteConfig, report: &mut SuiteReport) -> Result<()> {
    match rigid_expansion(cfg.budget) {
        Ok((_, canon)) => {
            report.count("rigid_numerator_monomials", canon.num.len() as u64);
            report.count("rigid_denominator_monomials", canon.den.len() as u64);
            report.checks.push(Check::new(
                "rigid J is nonzero",
                !canon.is_zero(),
                "canonical",
                Some(format!(
                    "{} monomials ({} in the numerator, {} in the denominator)",
                    canon.monomial_count(),
                    canon.num.len(),
                    canon.den.len()
                )),
            ));
            let model = specialize_phi(&canon.to_expr(), &parse_phi("z*zb")?)?;
            let m = expand_canonical(&model, cfg.budget)?;
            report
                .checks
                .push(Check::new("rigid J vanishes on the model", m.is_zero(), "canonical", None));
        }
        Err(Error::ExpansionOverflow { limit }) => {
            report.checks.push(Check::new(
                "rigid J expansion within budget",
                false,
                "canonical",
                Some(format!("exceeded {} terms; raise --budget", limit)),
            ));
        }
        Err(e) => return Err(e),
    }
    Ok(())
}
