//! The invariant pipeline: `P`, the torsion coefficients of each loop, the
//! normalizations of `sb` and `r`, the essential invariants and the two real
//! curvature functions of the associated Cartan geometry.

use std::sync::Mutex;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{apply_field, make_frame, Frame, JetContext};
use crate::var::{BaseVar, GroupVar, VarId};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Field {
    L,
    Lb,
    T,
}

/// Frame, `P`, and memoized application of `L`, `Lb`, `T`.
pub struct CrStructure {
    ctx: JetContext,
    frame: Frame,
    p: Expr,
    pbar: Expr,
    memo: Mutex<FxHashMap<(u64, Field), Expr>>,
}

impl CrStructure {
    pub fn new(ctx: JetContext) -> Result<CrStructure> {
        let frame = make_frame(&ctx)?;
        let d = |e: &Expr, v| ctx.total_derivative(e, v);
        let ell = &frame.ell;
        let num = d(ell, BaseVar::Z)? - ell * d(&frame.a, BaseVar::U)? + &frame.a * d(ell, BaseVar::U)?;
        let p = num.try_div(ell)?;
        let pbar = p.conj();
        Ok(CrStructure {
            ctx,
            frame,
            p,
            pbar,
            memo: Mutex::new(FxHashMap::default()),
        })
    }

    pub fn generic() -> Result<CrStructure> {
        CrStructure::new(JetContext::default())
    }

    pub fn rigid() -> Result<CrStructure> {
        CrStructure::new(JetContext::rigid())
    }

    pub fn ctx(&self) -> &JetContext {
        &self.ctx
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn a(&self) -> &Expr {
        &self.frame.a
    }

    pub fn ell(&self) -> &Expr {
        &self.frame.ell
    }

    pub fn p(&self) -> &Expr {
        &self.p
    }

    pub fn pbar(&self) -> &Expr {
        &self.pbar
    }

    pub fn apply(&self, f: Field, e: &Expr) -> Result<Expr> {
        let key = (e.id(), f);
        if let Some(r) = self.memo.lock().unwrap_or_else(|p| p.into_inner()).get(&key) {
            return Ok(r.clone());
        }
        let x = match f {
            Field::L => &self.frame.l,
            Field::Lb => &self.frame.lbar,
            Field::T => &self.frame.t,
        };
        let r = apply_field(&self.ctx, x, e)?;
        self.memo
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(key, r.clone());
        Ok(r)
    }

    pub fn l(&self, e: &Expr) -> Result<Expr> {
        self.apply(Field::L, e)
    }

    pub fn lb(&self, e: &Expr) -> Result<Expr> {
        self.apply(Field::Lb, e)
    }

    pub fn t(&self, e: &Expr) -> Result<Expr> {
        self.apply(Field::T, e)
    }

    /// `H1 = L + Lb`.
    pub fn h1(&self, e: &Expr) -> Result<Expr> {
        Ok(self.l(e)? + self.lb(e)?)
    }

    /// `H2 = i (L - Lb)`.
    pub fn h2(&self, e: &Expr) -> Result<Expr> {
        Ok(Expr::i() * (self.l(e)? - self.lb(e)?))
    }

    pub fn phi1(&self) -> Expr {
        &self.p + &self.pbar
    }

    pub fn phi2(&self) -> Expr {
        Expr::i() * (&self.p - &self.pbar)
    }

    /// Evaluate a word such as `"L Lb Pb"`, applying operators right to left.
    ///
    /// Operators: `L`, `Lb`, `T`, `H1`, `H2`. Operands: `P`, `Pb`, `Phi1`, `Phi2`.
    pub fn word(&self, w: &str) -> Result<Expr> {
        let toks: Vec<&str> = w.split_whitespace().collect();
        let (last, ops) = toks
            .split_last()
            .ok_or_else(|| Error::Invalid("empty operator word".into()))?;
        let mut e = match *last {
            "P" => self.p.clone(),
            "Pb" => self.pbar.clone(),
            "Phi1" => self.phi1(),
            "Phi2" => self.phi2(),
            other => return Err(Error::Invalid(format!("unknown operand `{}`", other))),
        };
        for op in ops.iter().rev() {
            e = match *op {
                "L" => self.l(&e)?,
                "Lb" => self.lb(&e)?,
                "T" => self.t(&e)?,
                "H1" => self.h1(&e)?,
                "H2" => self.h2(&e)?,
                other => return Err(Error::Invalid(format!("unknown operator `{}`", other))),
            };
        }
        Ok(e)
    }
}

/// The structure-group parameters, with `a = c cb` built in.
#[derive(Clone, Debug)]
pub struct GroupParams {
    pub b: Expr,
    pub bb: Expr,
    pub c: Expr,
    pub cb: Expr,
    pub s: Expr,
    pub sb: Expr,
    pub r: Expr,
    pub rb: Expr,
    bindings: Vec<(GroupVar, Expr)>,
}

fn gv(g: GroupVar) -> Expr {
    Expr::var(VarId::Group(g))
}

impl Default for GroupParams {
    fn default() -> Self {
        GroupParams::symbolic()
    }
}

impl GroupParams {
    pub fn symbolic() -> GroupParams {
        GroupParams {
            b: gv(GroupVar::B),
            bb: gv(GroupVar::Bb),
            c: gv(GroupVar::C),
            cb: gv(GroupVar::Cb),
            s: gv(GroupVar::S),
            sb: gv(GroupVar::Sb),
            r: gv(GroupVar::R),
            rb: gv(GroupVar::Rb),
            bindings: Vec::new(),
        }
    }

    /// Fix `b`, `c`, `s`; the barred parameters become the conjugates.
    pub fn with_values(b: Expr, c: Expr, s: Expr) -> Result<GroupParams> {
        if c.is_zero() {
            return Err(Error::Invalid("the group parameter c must be nonzero".into()));
        }
        Ok(GroupParams {
            bb: b.conj(),
            cb: c.conj(),
            sb: s.conj(),
            b,
            c,
            s,
            r: gv(GroupVar::R),
            rb: gv(GroupVar::Rb),
            bindings: Vec::new(),
        })
    }

    /// `b = 0`, `c = cb = 1`, `s = 0`.
    pub fn identity() -> GroupParams {
        GroupParams::with_values(Expr::zero(), Expr::one(), Expr::zero()).unwrap()
    }

    pub fn is_bound(&self, g: GroupVar) -> bool {
        self.bindings.iter().any(|(v, _)| *v == g)
    }

    pub fn binding(&self, g: GroupVar) -> Option<&Expr> {
        self.bindings.iter().find(|(v, _)| *v == g).map(|(_, e)| e)
    }

    /// Replace bound parameters in `e` by their right-hand sides.
    pub fn resolve(&self, e: &Expr) -> Expr {
        if self.bindings.is_empty() {
            return e.clone();
        }
        let map: FxHashMap<VarId, Expr> = self
            .bindings
            .iter()
            .map(|(g, rhs)| (VarId::Group(*g), rhs.clone()))
            .collect();
        e.substitute(&map)
    }

    /// Conjugation that respects the bindings.
    pub fn conj(&self, e: &Expr) -> Expr {
        self.resolve(&e.conj())
    }

    /// Eliminate `sb` by the normalization `W = 0`.
    pub fn bind_sbar(&self, cr: &CrStructure) -> Result<GroupParams> {
        if self.is_bound(GroupVar::Sb) {
            return Err(Error::AlreadyBound("sb"));
        }
        let rhs = sbar_rhs(cr, self)?;
        let mut out = self.clone();
        out.sb = rhs.clone();
        out.bindings.push((GroupVar::Sb, rhs));
        Ok(out)
    }

    /// Eliminate `r` (and `rb`) by the normalization `W2 = 0`.
    pub fn bind_r(&self, cr: &CrStructure) -> Result<GroupParams> {
        if !self.is_bound(GroupVar::Sb) {
            return Err(Error::UnboundSbar);
        }
        if self.is_bound(GroupVar::R) {
            return Err(Error::AlreadyBound("r"));
        }
        let rhs = r_rhs(cr, self)?;
        let rhs_bar = self.conj(&rhs);
        let mut out = self.clone();
        out.r = rhs.clone();
        out.rb = rhs_bar.clone();
        out.bindings.push((GroupVar::R, rhs));
        out.bindings.push((GroupVar::Rb, rhs_bar));
        Ok(out)
    }
}

fn k(n: i64, d: i64) -> Expr {
    Expr::rat(n, d)
}

fn ki(n: i64, d: i64) -> Expr {
    Expr::imag(n, d)
}

/// Monomials `k * f1 * ... * fn / (c^pc cb^pcb)`.
struct Den<'a> {
    c: &'a Expr,
    cb: &'a Expr,
}

impl<'a> Den<'a> {
    fn new(gp: &'a GroupParams) -> Den<'a> {
        Den { c: &gp.c, cb: &gp.cb }
    }

    fn t(&self, coef: Expr, fs: &[&Expr], pc: i64, pcb: i64) -> Expr {
        let mut factors = vec![coef];
        factors.extend(fs.iter().map(|f| (*f).clone()));
        let num = Expr::mul_all(factors);
        let den = Expr::mul_all([self.c.pow(pc), self.cb.pow(pcb)]);
        if den.is_one() {
            num
        } else {
            num / den
        }
    }
}

/// `A = i phi_z / (1 - i phi_u)`.
pub fn compute_a(cr: &CrStructure) -> Expr {
    cr.a().clone()
}

pub fn compute_ell(cr: &CrStructure) -> Expr {
    cr.ell().clone()
}

pub fn compute_p(cr: &CrStructure) -> Expr {
    cr.p().clone()
}

/// Torsion of the lifted coframe once `a = c cb`.
#[derive(Clone, Debug)]
pub struct FirstTorsions {
    pub u1: Expr,
    pub u2: Expr,
    pub v1: Expr,
    pub v2: Expr,
    pub v3: Expr,
}

pub fn first_torsions(cr: &CrStructure, gp: &GroupParams) -> FirstTorsions {
    let (p, pb) = (cr.p(), cr.pbar());
    let (b, bb, c, cb) = (&gp.b, &gp.bb, &gp.c, &gp.cb);
    let i = Expr::i();
    let m = Den::new(gp);
    FirstTorsions {
        u1: m.t(Expr::one(), &[&(p * cb + &i * bb)], 1, 1),
        u2: i.clone(),
        v1: m.t(Expr::one(), &[&(p * b * cb + &i * b * bb)], 2, 2),
        v2: m.t(Expr::one(), &[&(pb * b * c - &i * b.square())], 2, 2),
        v3: m.t(i.clone(), &[b], 1, 1),
    }
}

/// The real torsion coefficient of the prolonged structure.
pub fn compute_w(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let (p, pb) = (cr.p(), cr.pbar());
    let lbp = cr.word("Lb P")?;
    let (b, bb) = (&gp.b, &gp.bb);
    let m = Den::new(gp);
    Ok(Expr::add_all([
        m.t(k(1, 1), &[&lbp], 1, 1),
        m.t(ki(-2, 1), &[b, p], 2, 1),
        m.t(ki(2, 1), &[bb, pb], 1, 2),
        m.t(k(6, 1), &[b, bb], 2, 2),
        ki(2, 1) * &gp.s,
        ki(-2, 1) * &gp.sb,
    ]))
}

/// Right-hand side of the normalization of `sb`.
pub fn sbar_rhs(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let (p, pb) = (cr.p(), cr.pbar());
    let lbp = cr.word("Lb P")?;
    let (b, bb) = (&gp.b, &gp.bb);
    let m = Den::new(gp);
    Ok(Expr::add_all([
        gp.s.clone(),
        m.t(ki(-1, 2), &[&lbp], 1, 1),
        m.t(k(-1, 1), &[b, p], 2, 1),
        m.t(k(1, 1), &[bb, pb], 1, 2),
        m.t(ki(-3, 1), &[b, bb], 2, 2),
    ]))
}

/// Right-hand side of the normalization of `r`.
pub fn r_rhs(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let pb = cr.pbar();
    let llbpb = cr.word("L Lb Pb")?;
    let lblbp = cr.word("Lb Lb P")?;
    let lbp = cr.word("Lb P")?;
    let (b, bb) = (&gp.b, &gp.bb);
    let m = Den::new(gp);
    Ok(Expr::add_all([
        m.t(k(-1, 3), &[&llbpb], 1, 2),
        m.t(k(1, 2), &[&lblbp], 1, 2),
        m.t(ki(-1, 2), &[&lbp, b], 2, 2),
        m.t(k(-1, 6), &[pb, &lbp], 1, 2),
        m.t(k(1, 1), &[pb, b, bb], 2, 3),
        m.t(ki(-1, 1), &[&b.square(), bb], 3, 3),
    ]))
}

/// `W1` as it appears in the expression of `delta-bar`, with `s`, `sb`, `r`, `rb` literal.
pub fn w1_deltabar(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let (p, pb) = (cr.p(), cr.pbar());
    let w = |s: &str| cr.word(s);
    let tlbp = w("T Lb P")?;
    let llbpb = w("L Lb Pb")?;
    let llpb = w("L L Pb")?;
    let lblpb = w("Lb L Pb")?;
    let lblp = w("Lb L P")?;
    let lp = w("L P")?;
    let lbpb = w("Lb Pb")?;
    let lpb = w("L Pb")?;
    let (b, bb, s, sb, r, rb) = (&gp.b, &gp.bb, &gp.s, &gp.sb, &gp.r, &gp.rb);
    let m = Den::new(gp);
    let kk = Expr::add_all([
        m.t(k(-1, 2), &[&lpb], 1, 1),
        m.t(ki(1, 1), &[p, b], 2, 1),
        m.t(k(-3, 1), &[b, bb], 2, 2),
        m.t(ki(-1, 1), &[pb, bb], 1, 2),
    ]);
    Ok(Expr::add_all([
        m.t(k(-1, 2), &[&tlbp], 2, 2),
        m.t(k(1, 1), &[&llbpb, bb], 2, 3),
        m.t(k(-1, 2), &[&llpb, b], 3, 2),
        m.t(k(-1, 2), &[&lblpb, bb], 2, 3),
        m.t(k(1, 1), &[&lblp, b], 3, 2),
        m.t(ki(-1, 1), &[&lp, &b.square()], 4, 2),
        m.t(ki(1, 1), &[&lbpb, &bb.square()], 2, 4),
        &kk * s,
        (m.t(k(3, 1), &[bb], 1, 1) + m.t(ki(-1, 1), &[p], 1, 0)) * r,
        &kk * sb,
        (m.t(k(3, 1), &[b], 1, 1) + m.t(ki(1, 1), &[pb], 0, 1)) * rb,
    ]))
}

/// `W2` of the expression of `delta-bar`; vanishes once `r` is bound.
pub fn w2_deltabar(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let p = cr.p();
    let w = |s: &str| cr.word(s);
    let lblp = w("Lb L P")?;
    let llpb = w("L L Pb")?;
    let lpb = w("L Pb")?;
    let (b, bb) = (&gp.b, &gp.bb);
    let m = Den::new(gp);
    Ok(Expr::add_all([
        m.t(ki(1, 1), &[&lblp], 2, 1),
        m.t(ki(-3, 2), &[&llpb], 2, 1),
        m.t(k(3, 2), &[&lpb, bb], 2, 2),
        m.t(ki(1, 2), &[p, &lpb], 2, 1),
        m.t(ki(-3, 1), &[p, b, bb], 3, 2),
        m.t(k(3, 1), &[b, &bb.square()], 3, 3),
        ki(3, 1) * &gp.rb,
    ]))
}

/// Which reading of the long `W1` display to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum W1Reading {
    /// The literal display, whose `Lb(L(P)) bb` term breaks reality.
    Displayed,
    /// The same display with that term read as `Lb(L(Pb)) bb`.
    Corrected,
}

/// `W1` after the normalization of `r`; involves `s` but neither `sb` nor `r`.
pub fn compute_w1(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    compute_w1_reading(cr, gp, W1Reading::Corrected)
}

pub fn compute_w1_reading(cr: &CrStructure, gp: &GroupParams, reading: W1Reading) -> Result<Expr> {
    let (p, pb) = (cr.p(), cr.pbar());
    let w = |s: &str| cr.word(s);
    let tlbp = w("T Lb P")?;
    let lblp = w("Lb L P")?;
    let llpb = w("L L Pb")?;
    let llbpb = w("L Lb Pb")?;
    let llbp = w("L Lb P")?;
    let lblpb = w("Lb L Pb")?;
    let lbp = w("Lb P")?;
    let lpb = w("L Pb")?;
    let lbpb = w("Lb Pb")?;
    let lp = w("L P")?;
    let (b, bb, s) = (&gp.b, &gp.bb, &gp.s);
    let (b2, bb2) = (b.square(), bb.square());
    let ppb = p * pb;
    let second = match reading {
        W1Reading::Displayed => &lblp,
        W1Reading::Corrected => &lblpb,
    };
    let m = Den::new(gp);
    let s_coef = Expr::add_all([
        m.t(k(-1, 1), &[&lpb], 1, 1),
        m.t(ki(2, 1), &[p, b], 2, 1),
        m.t(ki(-2, 1), &[pb, bb], 1, 2),
        m.t(k(-6, 1), &[b, bb], 2, 2),
    ]);
    Ok(Expr::add_all([
        m.t(k(-1, 2), &[&tlbp], 2, 2),
        m.t(k(1, 1), &[second, bb], 2, 3),
        m.t(k(-1, 2), &[&llpb, b], 3, 2),
        m.t(ki(1, 3), &[p, &llbpb], 2, 2),
        m.t(ki(-1, 3), &[pb, &lblp], 2, 2),
        m.t(ki(1, 2), &[pb, &llbp], 2, 2),
        m.t(ki(-1, 2), &[p, &lblpb], 2, 2),
        m.t(k(3, 2), &[&llbp, b], 3, 2),
        m.t(ki(3, 1), &[&lbp, b, bb], 3, 3),
        m.t(ki(1, 6), &[&ppb, &lpb], 2, 2),
        m.t(ki(-1, 6), &[&ppb, &lbp], 2, 2),
        m.t(ki(1, 4), &[&lpb, &lbp], 2, 2),
        m.t(ki(1, 1), &[&lbpb, &bb2], 2, 4),
        m.t(ki(-1, 1), &[&lp, &b2], 4, 2),
        m.t(k(-1, 1), &[pb, &lbp, bb], 2, 3),
        m.t(k(-1, 1), &[pb, &lpb, bb], 2, 3),
        m.t(ki(2, 1), &[&ppb, b, bb], 3, 3),
        m.t(ki(-1, 1), &[&pb.square(), &bb2], 2, 4),
        m.t(k(-4, 1), &[pb, b, &bb2], 3, 4),
        m.t(ki(-1, 1), &[&p.square(), &b2], 4, 2),
        m.t(k(8, 1), &[p, &b2, bb], 4, 3),
        m.t(ki(9, 1), &[&b2, &bb2], 4, 4),
        s_coef * s,
    ]))
}

/// Deliberate corruptions, used to confirm that the identity suites can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mutation {
    #[default]
    None,
    /// Replace the `7/6` of `V3` by `1`.
    SevenSixths,
}

/// The coefficients of `gamma = V1 rho + V2 zeta + V3 zetabar`.
#[derive(Clone, Debug)]
pub struct GammaCoefficients {
    pub v1: Expr,
    pub v2: Expr,
    pub v3: Expr,
}

pub fn compute_v1(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let (p, pb) = (cr.p(), cr.pbar());
    let w = |s: &str| cr.word(s);
    let tllbpb = w("T L Lb Pb")?;
    let tlblbp = w("T Lb Lb P")?;
    let lllbpb = w("L L Lb Pb")?;
    let lblllbpb = w("Lb L Lb Pb")?;
    let lblblpb = w("Lb Lb L Pb")?;
    let lbllpb = w("Lb L L Pb")?;
    let llblpb = w("L Lb L Pb")?;
    let lblp = w("Lb L P")?;
    let lblpb = w("Lb L Pb")?;
    let llbpb = w("L Lb Pb")?;
    let llpb = w("L L Pb")?;
    let lpb = w("L Pb")?;
    let lbpb = w("Lb Pb")?;
    let (b, bb, s) = (&gp.b, &gp.bb, &gp.s);
    let (b2, bb2) = (b.square(), bb.square());
    let m = Den::new(gp);
    Ok(Expr::add_all([
        m.t(k(-1, 3), &[&tllbpb], 2, 3),
        m.t(k(1, 1), &[&tlblbp], 2, 3),
        m.t(k(1, 3), &[&lllbpb, b], 3, 3),
        m.t(k(1, 3), &[&lblllbpb, bb], 2, 4),
        m.t(k(-1, 2), &[bb, &lblblpb], 2, 4),
        m.t(k(-1, 2), &[&lbllpb, b], 3, 3),
        m.t(ki(1, 6), &[pb, &lbllpb], 2, 3),
        m.t(ki(-1, 6), &[pb, &llblpb], 2, 3),
        m.t(ki(-3, 1), &[&b2, bb, s], 3, 3),
        m.t(ki(-1, 3), &[&lblp, &b2], 4, 3),
        m.t(ki(-5, 2), &[&lblpb, b, bb], 3, 4),
        m.t(k(-1, 1), &[&llbpb, s], 1, 2),
        m.t(k(2, 3), &[&llbpb, p, b], 3, 3),
        m.t(k(-1, 3), &[&llbpb, pb, bb], 2, 4),
        m.t(k(3, 2), &[&lblpb, s], 1, 2),
        m.t(k(-1, 1), &[&lblpb, p, b], 3, 3),
        m.t(k(2, 3), &[&lblpb, pb, bb], 2, 4),
        m.t(k(-1, 3), &[&llpb, pb, b], 3, 3),
        m.t(k(1, 3), &[&lblp, pb, b], 3, 3),
        m.t(ki(1, 1), &[&llpb, &b2], 4, 3),
        m.t(ki(7, 3), &[&llbpb, b, bb], 3, 4),
        m.t(ki(-1, 12), &[&lblpb, &lpb], 2, 3),
        m.t(ki(-3, 2), &[&lpb, b, s], 2, 2),
        m.t(k(-5, 1), &[&b.pow(3), &bb2], 5, 5),
        m.t(k(-1, 1), &[&lpb, pb, s], 1, 2),
        m.t(k(-1, 6), &[&lpb, &lbpb, bb], 2, 4),
        m.t(k(1, 2), &[&lpb, p, pb, b], 3, 3),
        m.t(k(-1, 6), &[&lpb, &pb.square(), bb], 2, 4),
        m.t(k(-1, 1), &[&lbpb, b, &bb2], 3, 5),
        m.t(k(-4, 1), &[&lpb, &b2, bb], 4, 4),
        m.t(k(3, 1), &[pb, b, bb, s], 2, 3),
        m.t(k(1, 1), &[&pb.square(), b, &bb2], 3, 5),
        m.t(k(-1, 12), &[&lpb.square(), b], 3, 3),
        m.t(k(-3, 1), &[p, pb, &b2, bb], 4, 4),
        m.t(ki(3, 1), &[p, &b.pow(3), bb], 5, 4),
        m.t(ki(5, 6), &[p, &lpb, &b2], 4, 3),
        m.t(ki(-6, 1), &[pb, &b2, &bb2], 4, 5),
        m.t(ki(1, 12), &[&lpb.square(), pb], 2, 3),
        m.t(ki(-5, 6), &[&lpb, pb, b, bb], 3, 4),
    ]))
}

pub fn compute_v2(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let (p, pb) = (cr.p(), cr.pbar());
    let w = |s: &str| cr.word(s);
    let llblpb = w("L Lb L Pb")?;
    let lllbpb = w("L L Lb Pb")?;
    let lblpb = w("Lb L Pb")?;
    let llbpb = w("L Lb Pb")?;
    let lblp = w("Lb L P")?;
    let llpb = w("L L Pb")?;
    let lp = w("L P")?;
    let lpb = w("L Pb")?;
    let (b, bb) = (&gp.b, &gp.bb);
    let (b2, bb2) = (b.square(), bb.square());
    let m = Den::new(gp);
    Ok(Expr::add_all([
        m.t(k(1, 2), &[&llblpb], 2, 2),
        m.t(k(-1, 3), &[&lllbpb], 2, 2),
        m.t(k(-1, 1), &[p, &lblpb], 2, 2),
        m.t(k(2, 3), &[p, &llbpb], 2, 2),
        m.t(ki(-2, 3), &[&lblp, b], 3, 2),
        m.t(k(-1, 6), &[&llpb, pb], 2, 2),
        m.t(ki(-1, 1), &[&lblpb, bb], 2, 3),
        m.t(ki(2, 3), &[&llbpb, bb], 2, 3),
        gp.s.square(),
        m.t(k(-1, 1), &[&lp, &b2], 4, 2),
        m.t(k(1, 3), &[p, &lpb, pb], 2, 2),
        m.t(ki(1, 3), &[&lpb, pb, bb], 2, 3),
        m.t(ki(2, 3), &[&lpb, p, b], 3, 2),
        m.t(k(-1, 6), &[&lpb.square()], 2, 2),
        m.t(ki(-2, 1), &[p, &b2, bb], 4, 3),
        m.t(k(2, 1), &[&b2, &bb2], 4, 4),
    ]))
}

pub fn compute_v3_with(cr: &CrStructure, gp: &GroupParams, mutation: Mutation) -> Result<Expr> {
    let pb = cr.pbar();
    let w = |s: &str| cr.word(s);
    let lblblpb = w("Lb Lb L Pb")?;
    let lblllbpb = w("Lb L Lb Pb")?;
    let llbpb = w("L Lb Pb")?;
    let lblpb = w("Lb L Pb")?;
    let lpb = w("L Pb")?;
    let lbpb = w("Lb Pb")?;
    let seven_sixths = match mutation {
        Mutation::None => k(-7, 6),
        Mutation::SevenSixths => k(-1, 1),
    };
    let m = Den::new(gp);
    Ok(Expr::add_all([
        m.t(k(1, 2), &[&lblblpb], 1, 3),
        m.t(k(-1, 3), &[&lblllbpb], 1, 3),
        m.t(k(2, 3), &[&llbpb, pb], 1, 3),
        m.t(seven_sixths, &[&lblpb, pb], 1, 3),
        m.t(k(-1, 6), &[&lpb, &lbpb], 1, 3),
        m.t(k(1, 3), &[&lpb, &pb.square()], 1, 3),
    ]))
}

pub fn compute_v3(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    compute_v3_with(cr, gp, Mutation::None)
}

pub fn gamma_coefficients(cr: &CrStructure, gp: &GroupParams) -> Result<GammaCoefficients> {
    Ok(GammaCoefficients {
        v1: compute_v1(cr, gp)?,
        v2: compute_v2(cr, gp)?,
        v3: compute_v3(cr, gp)?,
    })
}

/// The essential invariant, in the ordering of its final statement.
pub fn compute_j(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let pb = cr.pbar();
    let w = |s: &str| cr.word(s);
    let lblllbpb = w("Lb L Lb Pb")?;
    let llbpb = w("L Lb Pb")?;
    let lblblpb = w("Lb Lb L Pb")?;
    let lblpb = w("Lb L Pb")?;
    let lpb = w("L Pb")?;
    let lbpb = w("Lb Pb")?;
    let m = Den::new(gp);
    Ok(Expr::add_all([
        m.t(k(-1, 3), &[&lblllbpb], 1, 3),
        m.t(k(2, 3), &[&llbpb, pb], 1, 3),
        m.t(k(1, 2), &[&lblblpb], 1, 3),
        m.t(k(-7, 6), &[&lblpb, pb], 1, 3),
        m.t(k(-1, 6), &[&lpb, &lbpb], 1, 3),
        m.t(k(1, 3), &[&lpb, &pb.square()], 1, 3),
    ]))
}

/// `Tfrak = (Lb(Jb) - Pb Jb)/cb - i b Jb/(c cb)`.
pub fn compute_tfrak(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let jb = gp.conj(&compute_j(cr, gp)?);
    let m = Den::new(gp);
    let core = cr.lb(&jb)? - cr.pbar() * &jb;
    Ok(m.t(k(1, 1), &[&core], 0, 1) + m.t(ki(-1, 1), &[&gp.b, &jb], 1, 1))
}

/// `Tfrak` with `Jb` supplied, for callers that already hold it.
pub fn tfrak_from(cr: &CrStructure, gp: &GroupParams, jb: &Expr) -> Result<Expr> {
    let m = Den::new(gp);
    let core = cr.lb(jb)? - cr.pbar() * jb;
    Ok(m.t(k(1, 1), &[&core], 0, 1) + m.t(ki(-1, 1), &[&gp.b, jb], 1, 1))
}

/// The two real curvature functions, in terms of `H1, H2, Phi1, Phi2`.
pub fn compute_deltas(cr: &CrStructure) -> Result<(Expr, Expr)> {
    let w = |s: &str| cr.word(s);
    let (f1, f2) = (cr.phi1(), cr.phi2());
    let h1f1 = w("H1 Phi1")?;
    let h1f2 = w("H1 Phi2")?;
    let h2f1 = w("H2 Phi1")?;
    let h2f2 = w("H2 Phi2")?;
    let d1 = Expr::add_all([
        w("H1 H1 H1 Phi1")?,
        -w("H2 H2 H2 Phi2")?,
        k(11, 1) * w("H1 H2 H1 Phi2")?,
        k(-11, 1) * w("H2 H1 H2 Phi1")?,
        k(6, 1) * &f2 * w("H2 H1 Phi1")?,
        k(-6, 1) * &f1 * w("H1 H2 Phi2")?,
        k(-3, 1) * &f2 * w("H1 H1 Phi2")?,
        k(3, 1) * &f1 * w("H2 H2 Phi1")?,
        k(-3, 1) * &f1 * w("H1 H1 Phi1")?,
        k(3, 1) * &f2 * w("H2 H2 Phi2")?,
        -h1f1.square(),
        h2f2.square(),
        k(-2, 1) * f2.square() * &h1f1,
        k(2, 1) * f1.square() * &h2f2,
        k(-2, 1) * f2.square() * &h2f2,
        k(2, 1) * f1.square() * &h1f1,
    ]) * k(1, 384);
    let d4 = Expr::add_all([
        k(-3, 1) * w("H2 H1 H2 Phi2")?,
        k(-3, 1) * w("H1 H2 H1 Phi1")?,
        k(5, 1) * w("H1 H2 H2 Phi2")?,
        k(5, 1) * w("H2 H1 H1 Phi1")?,
        k(4, 1) * &f1 * w("H1 H1 Phi2")?,
        k(4, 1) * &f2 * w("H2 H1 Phi2")?,
        k(-3, 1) * &f2 * w("H1 H1 Phi1")?,
        k(-3, 1) * &f1 * w("H2 H2 Phi2")?,
        k(-7, 1) * &f2 * w("H1 H2 Phi2")?,
        k(-7, 1) * &f1 * w("H2 H1 Phi1")?,
        k(-2, 1) * &h1f1 * &h1f2,
        k(-2, 1) * &h2f2 * &h2f1,
        k(4, 1) * &f1 * &f2 * &h1f1,
        k(4, 1) * &f1 * &f2 * &h2f2,
    ]) * k(1, 384);
    Ok((d1, d4))
}

/// The four third-order identities I-IV for `H1, H2, Phi1, Phi2`.
pub fn lemma_identities(cr: &CrStructure) -> Result<[Expr; 4]> {
    let w = |s: &str| cr.word(s);
    let (f1, f2) = (cr.phi1(), cr.phi2());
    let i1 = Expr::add_all([
        -w("H1 H2 H1 Phi2")?,
        k(2, 1) * w("H2 H1 H1 Phi2")?,
        -w("H2 H2 H1 Phi1")?,
        -(&f2 * w("H1 H2 Phi1")?),
        &f2 * w("H2 H1 Phi1")?,
    ]);
    let i2 = Expr::add_all([
        -w("H2 H1 H1 Phi2")?,
        k(2, 1) * w("H1 H2 H1 Phi2")?,
        -w("H1 H1 H2 Phi2")?,
        -(&f1 * w("H2 H1 Phi2")?),
        &f1 * w("H1 H2 Phi2")?,
    ]);
    let i3 = Expr::add_all([
        -w("H1 H1 H1 Phi2")?,
        k(2, 1) * w("H1 H2 H1 Phi1")?,
        -w("H2 H1 H1 Phi1")?,
        &f1 * w("H1 H1 Phi2")?,
        -(&f1 * w("H2 H1 Phi1")?),
    ]);
    let i4 = Expr::add_all([
        w("H2 H2 H1 Phi2")?,
        k(-2, 1) * w("H2 H1 H2 Phi2")?,
        w("H1 H2 H2 Phi2")?,
        -(&f2 * w("H2 H1 Phi2")?),
        &f2 * w("H1 H2 Phi2")?,
    ]);
    Ok([i1, i2, i3, i4])
}

/// The displayed simplification of `conj(V2) - i W1 - V2`.
pub fn corollary_residual(cr: &CrStructure, gp: &GroupParams) -> Result<Expr> {
    let (p, pb) = (cr.p(), cr.pbar());
    let w = |s: &str| cr.word(s);
    let inner = Expr::add_all([
        k(-3, 1) * w("L Lb L Pb")?,
        k(3, 1) * w("Lb L L Pb")?,
        w("L L Lb Pb")?,
        -w("Lb Lb L P")?,
        p * w("Lb L Pb")?,
        -(p * w("L Lb Pb")?),
        -(pb * w("L L Pb")?),
        pb * w("Lb L P")?,
    ]);
    Ok(Den::new(gp).t(k(1, 3), &[&inner], 2, 2))
}

/// The coefficients of `delta` in the basis `rho, zeta, zetabar` (the
/// `ds`, `alpha`, `beta`, `alpha~`, `beta~` parts are fixed and omitted).
#[derive(Clone, Debug)]
pub struct DeltaCoefficients {
    pub rho: Expr,
    pub zeta: Expr,
    pub zetabar: Expr,
}

pub fn delta_coefficients(cr: &CrStructure, gp: &GroupParams) -> Result<DeltaCoefficients> {
    let (p, pb) = (cr.p(), cr.pbar());
    let w = |s: &str| cr.word(s);
    let lllbpb = w("L L Lb Pb")?;
    let llblpb = w("L Lb L Pb")?;
    let llbpb = w("L Lb Pb")?;
    let lblp = w("Lb L P")?;
    let lblpb = w("Lb L Pb")?;
    let llpb = w("L L Pb")?;
    let lpb = w("L Pb")?;
    let lp = w("L P")?;
    let (b, bb, s) = (&gp.b, &gp.bb, &gp.s);
    let (b2, bb2) = (b.square(), bb.square());
    let m = Den::new(gp);
    let rho = Expr::add_all([
        -s.square(),
        m.t(k(1, 3), &[&lllbpb], 2, 2),
        m.t(k(-1, 2), &[&llblpb], 2, 2),
        m.t(k(-2, 3), &[p, &llbpb], 2, 2),
        m.t(ki(2, 3), &[&lblp, b], 3, 2),
        m.t(k(1, 1), &[&lblpb, p], 2, 2),
        m.t(ki(1, 1), &[&lblpb, bb], 2, 3),
        m.t(k(1, 6), &[&llpb, pb], 2, 2),
        m.t(ki(-2, 3), &[&llbpb, bb], 2, 3),
        m.t(ki(-2, 3), &[&lpb, p, b], 3, 2),
        m.t(k(1, 1), &[&lp, &b2], 4, 2),
        m.t(k(-1, 3), &[&lpb, p, pb], 2, 2),
        m.t(ki(-1, 3), &[&lpb, pb, bb], 2, 3),
        m.t(k(1, 6), &[&lpb.square()], 2, 2),
        m.t(k(-2, 1), &[&b2, &bb2], 4, 4),
        m.t(ki(2, 1), &[p, &b2, bb], 4, 3),
    ]);
    let zeta = Expr::add_all([
        m.t(k(1, 1), &[p, s], 1, 0),
        m.t(ki(2, 1), &[s, bb], 1, 1),
        m.t(ki(-1, 3), &[&lblp], 2, 1),
        m.t(ki(1, 3), &[&lpb, p], 2, 1),
        m.t(k(-1, 1), &[&lp, b], 3, 1),
        m.t(k(2, 1), &[b, &bb2], 3, 3),
        m.t(ki(-2, 1), &[p, b, bb], 3, 2),
    ]);
    let zetabar = Expr::add_all([
        m.t(ki(1, 1), &[b, s], 1, 1),
        m.t(ki(-1, 2), &[&lblpb], 1, 2),
        m.t(ki(1, 3), &[&llbpb], 1, 2),
        m.t(ki(1, 6), &[&lpb, pb], 1, 2),
        m.t(k(2, 1), &[&b2, bb], 3, 3),
        m.t(ki(-1, 1), &[p, &b2], 3, 2),
    ]);
    Ok(DeltaCoefficients { rho, zeta, zetabar })
}

/// Selectable outputs of the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Invariant {
    A,
    Ell,
    P,
    U,
    VFirst,
    W,
    Sbar,
    R,
    W1,
    V,
    J,
    Tfrak,
    Delta1,
    Delta4,
}

impl Invariant {
    pub const ALL: [Invariant; 14] = [
        Invariant::A,
        Invariant::Ell,
        Invariant::P,
        Invariant::U,
        Invariant::VFirst,
        Invariant::W,
        Invariant::Sbar,
        Invariant::R,
        Invariant::W1,
        Invariant::V,
        Invariant::J,
        Invariant::Tfrak,
        Invariant::Delta1,
        Invariant::Delta4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::A => "A",
            Invariant::Ell => "ell",
            Invariant::P => "P",
            Invariant::U => "U",
            Invariant::VFirst => "V-first",
            Invariant::W => "W",
            Invariant::Sbar => "sbar",
            Invariant::R => "r",
            Invariant::W1 => "W1",
            Invariant::V => "V",
            Invariant::J => "J",
            Invariant::Tfrak => "Tfrak",
            Invariant::Delta1 => "Delta1",
            Invariant::Delta4 => "Delta4",
        }
    }
}

impl std::str::FromStr for Invariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Invariant> {
        Invariant::ALL
            .into_iter()
            .find(|i| i.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown invariant `{}`", s)))
    }
}

/// Compute an invariant as a list of labelled expressions (most have one entry).
pub fn compute_invariant(cr: &CrStructure, gp: &GroupParams, which: Invariant) -> Result<Vec<(String, Expr)>> {
    let one = |name: &str, e: Expr| Ok(vec![(name.to_string(), e)]);
    let bound = || -> Result<GroupParams> {
        if gp.is_bound(GroupVar::Sb) {
            Ok(gp.clone())
        } else {
            gp.bind_sbar(cr)
        }
    };
    match which {
        Invariant::A => one("A", compute_a(cr)),
        Invariant::Ell => one("ell", compute_ell(cr)),
        Invariant::P => one("P", compute_p(cr)),
        Invariant::U => {
            let t = first_torsions(cr, gp);
            Ok(vec![("U1".into(), t.u1), ("U2".into(), t.u2)])
        }
        Invariant::VFirst => {
            let t = first_torsions(cr, gp);
            Ok(vec![("V1".into(), t.v1), ("V2".into(), t.v2), ("V3".into(), t.v3)])
        }
        Invariant::W => one("W", compute_w(cr, gp)?),
        Invariant::Sbar => one("sbar", sbar_rhs(cr, gp)?),
        Invariant::R => one("r", r_rhs(cr, &bound()?)?),
        Invariant::W1 => one("W1", compute_w1(cr, &bound()?)?),
        Invariant::V => {
            let g = gamma_coefficients(cr, &bound()?)?;
            Ok(vec![("V1".into(), g.v1), ("V2".into(), g.v2), ("V3".into(), g.v3)])
        }
        Invariant::J => one("J", compute_j(cr, gp)?),
        Invariant::Tfrak => one("Tfrak", compute_tfrak(cr, gp)?),
        Invariant::Delta1 => one("Delta1", compute_deltas(cr)?.0),
        Invariant::Delta4 => one("Delta4", compute_deltas(cr)?.1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::specialize_phi;
    use crate::parser::parse_phi;
    use crate::zero::{is_identically_zero, ZeroMode};

    fn model(e: &Expr) -> Expr {
        specialize_phi(e, &parse_phi("z*zb").unwrap()).unwrap()
    }

    fn zero(e: &Expr) -> bool {
        is_identically_zero(e, &ZeroMode::probabilistic()).unwrap().is_zero()
    }

    #[test]
    fn model_values() {
        let cr = CrStructure::generic().unwrap();
        assert!(zero(&(model(cr.ell()) - 2)));
        assert!(zero(&model(cr.p())));
        let a = model(cr.a());
        assert!(zero(&(a - Expr::i() * Expr::var(VarId::ZB))));
    }

    #[test]
    fn words_apply_right_to_left() {
        let cr = CrStructure::generic().unwrap();
        let w = cr.word("L Lb Pb").unwrap();
        let direct = cr.l(&cr.lb(cr.pbar()).unwrap()).unwrap();
        assert_eq!(w, direct);
        assert!(cr.word("Q").is_err());
    }

    #[test]
    fn first_torsions_at_b_zero() {
        let cr = CrStructure::generic().unwrap();
        let gp = GroupParams::with_values(Expr::zero(), Expr::var(VarId::Group(GroupVar::C)), Expr::zero()).unwrap();
        let t = first_torsions(&cr, &gp);
        assert!(t.v1.is_zero() && t.v2.is_zero() && t.v3.is_zero());
        assert!(zero(&(t.u1 - cr.p() / &gp.c)));
        assert_eq!(t.u2, Expr::i());
    }

    #[test]
    fn binding_errors() {
        let cr = CrStructure::generic().unwrap();
        let gp = GroupParams::symbolic();
        assert_eq!(gp.bind_r(&cr).unwrap_err(), Error::UnboundSbar);
        let g1 = gp.bind_sbar(&cr).unwrap();
        assert_eq!(g1.bind_sbar(&cr).unwrap_err(), Error::AlreadyBound("sb"));
        let g2 = g1.bind_r(&cr).unwrap();
        assert_eq!(g2.bind_r(&cr).unwrap_err(), Error::AlreadyBound("r"));
    }

    #[test]
    fn invariant_names_round_trip() {
        for i in Invariant::ALL {
            assert_eq!(i.name().parse::<Invariant>().unwrap(), i);
        }
    }
}
