//! Total derivatives on the jet space of a defining function `phi(z, zb, u)`,
//! vector fields built from them, and specialization to a concrete `phi`.

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::eval::{eval_exact, Assignment};
use crate::expr::{post_order_skipping, Expr, ExprKind};
use crate::sample::RealSampler;
use crate::scalar::GaussianRational;
use crate::var::{BaseVar, GroupVar, JetVar, VarId};
use crate::zero::ZeroTester;

pub const DEFAULT_MAX_ORDER: u32 = 8;

/// What to differentiate by.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Derivation {
    /// Total derivative along a base coordinate; group parameters are constants.
    Total(BaseVar),
    /// Partial derivative in a group parameter; jets and base coordinates are constants.
    Group(GroupVar),
}

#[derive(Debug)]
struct Inner {
    max_order: u32,
    rigid: bool,
    cache: Mutex<FxHashMap<(u64, Derivation), Expr>>,
}

/// Differentiation context with a derivative cache. Cloning shares the cache.
#[derive(Clone, Debug)]
pub struct JetContext(Arc<Inner>);

impl Default for JetContext {
    fn default() -> Self {
        JetContext::new(DEFAULT_MAX_ORDER, false)
    }
}

impl JetContext {
    pub fn new(max_order: u32, rigid: bool) -> JetContext {
        JetContext(Arc::new(Inner {
            max_order,
            rigid,
            cache: Mutex::new(FxHashMap::default()),
        }))
    }

    pub fn rigid() -> JetContext {
        JetContext::new(DEFAULT_MAX_ORDER, true)
    }

    pub fn is_rigid(&self) -> bool {
        self.0.rigid
    }

    pub fn max_order(&self) -> u32 {
        self.0.max_order
    }

    /// The jet `phi_{a,b,c}` in this context (zero for `c > 0` when rigid).
    pub fn jet(&self, a: u8, b: u8, c: u8) -> Expr {
        if self.0.rigid && c > 0 {
            Expr::zero()
        } else {
            Expr::jet(a, b, c)
        }
    }

    /// Drop `u`-jets when rigid; identity otherwise.
    pub fn normalize(&self, e: &Expr) -> Expr {
        if !self.0.rigid {
            return e.clone();
        }
        let map: FxHashMap<VarId, Expr> = e
            .vars()
            .into_iter()
            .filter(|v| matches!(v, VarId::Jet(j) if j.c > 0))
            .map(|v| (v, Expr::zero()))
            .collect();
        e.substitute(&map)
    }

    fn leaf(&self, v: VarId, d: Derivation) -> Result<Expr> {
        Ok(match (v, d) {
            (VarId::Base(x), Derivation::Total(y)) => {
                if x == y {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            (VarId::Jet(j), Derivation::Total(y)) => {
                let next = match y {
                    BaseVar::Z => JetVar::new(j.a + 1, j.b, j.c),
                    BaseVar::Zb => JetVar::new(j.a, j.b + 1, j.c),
                    BaseVar::U => JetVar::new(j.a, j.b, j.c + 1),
                };
                if self.0.rigid && next.c > 0 {
                    return Ok(Expr::zero());
                }
                if next.order() > self.0.max_order {
                    return Err(Error::JetOrderExceeded {
                        order: next.order(),
                        max: self.0.max_order,
                    });
                }
                Expr::var(VarId::Jet(next))
            }
            (VarId::Group(g), Derivation::Group(h)) => {
                if g == h {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            _ => Expr::zero(),
        })
    }

    pub fn derive(&self, e: &Expr, d: Derivation) -> Result<Expr> {
        let mut cache = self.0.cache.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(r) = cache.get(&(e.id(), d)) {
            return Ok(r.clone());
        }
        let order = post_order_skipping(std::slice::from_ref(e), |x| {
            cache.contains_key(&(x.id(), d))
        });
        for node in order {
            let get = |x: &Expr| cache[&(x.id(), d)].clone();
            let r = match node.kind() {
                ExprKind::Const(_) => Expr::zero(),
                ExprKind::Var(v) => self.leaf(*v, d)?,
                ExprKind::Add(xs) => Expr::add_all(xs.iter().map(get)),
                ExprKind::Mul(xs) => {
                    let ds: Vec<Expr> = xs.iter().map(get).collect();
                    let mut terms = Vec::new();
                    for (k, dk) in ds.iter().enumerate() {
                        if dk.is_zero() {
                            continue;
                        }
                        let mut fs: Vec<Expr> = Vec::with_capacity(xs.len());
                        fs.push(dk.clone());
                        for (j, x) in xs.iter().enumerate() {
                            if j != k {
                                fs.push(x.clone());
                            }
                        }
                        terms.push(Expr::mul_all(fs));
                    }
                    Expr::add_all(terms)
                }
                ExprKind::Div(a, b) => {
                    let (da, db) = (get(a), get(b));
                    match (da.is_zero(), db.is_zero()) {
                        (true, true) => Expr::zero(),
                        (false, true) => &da / b,
                        (true, false) => -(a * &db) / b.square(),
                        (false, false) => (&da * b - a * &db) / b.square(),
                    }
                }
                ExprKind::Pow(a, n) => {
                    let da = get(a);
                    if da.is_zero() {
                        Expr::zero()
                    } else {
                        Expr::int(*n as i64) * a.pow(*n as i64 - 1) * da
                    }
                }
            };
            cache.insert((node.id(), d), r);
        }
        Ok(cache[&(e.id(), d)].clone())
    }

    /// Total derivative `D_z`, `D_zb` or `D_u`.
    pub fn total_derivative(&self, e: &Expr, dir: BaseVar) -> Result<Expr> {
        self.derive(e, Derivation::Total(dir))
    }

    /// Partial derivative in a group parameter.
    pub fn group_derivative(&self, e: &Expr, g: GroupVar) -> Result<Expr> {
        self.derive(e, Derivation::Group(g))
    }

    pub fn cache_len(&self) -> usize {
        self.0.cache.lock().map(|c| c.len()).unwrap_or(0)
    }
}

/// `X = fz D_z + fzb D_zb + fu D_u`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub z: Expr,
    pub zb: Expr,
    pub u: Expr,
}

impl VectorField {
    pub fn new(z: Expr, zb: Expr, u: Expr) -> VectorField {
        VectorField { z, zb, u }
    }

    pub fn components(&self) -> [(&Expr, BaseVar); 3] {
        [(&self.z, BaseVar::Z), (&self.zb, BaseVar::Zb), (&self.u, BaseVar::U)]
    }

    pub fn add(&self, o: &VectorField) -> VectorField {
        VectorField::new(&self.z + &o.z, &self.zb + &o.zb, &self.u + &o.u)
    }

    pub fn sub(&self, o: &VectorField) -> VectorField {
        VectorField::new(&self.z - &o.z, &self.zb - &o.zb, &self.u - &o.u)
    }

    pub fn scale(&self, k: &Expr) -> VectorField {
        VectorField::new(k * &self.z, k * &self.zb, k * &self.u)
    }

    pub fn conj(&self) -> VectorField {
        VectorField::new(self.zb.conj(), self.z.conj(), self.u.conj())
    }
}

pub fn apply_field(ctx: &JetContext, x: &VectorField, f: &Expr) -> Result<Expr> {
    let mut terms = Vec::with_capacity(3);
    for (coef, dir) in x.components() {
        if coef.is_zero() {
            continue;
        }
        let d = ctx.total_derivative(f, dir)?;
        if !d.is_zero() {
            terms.push(coef * &d);
        }
    }
    Ok(Expr::add_all(terms))
}

pub fn lie_bracket(ctx: &JetContext, x: &VectorField, y: &VectorField) -> Result<VectorField> {
    let comp = |a: &Expr, b: &Expr| -> Result<Expr> {
        Ok(apply_field(ctx, x, b)? - apply_field(ctx, y, a)?)
    };
    Ok(VectorField::new(
        comp(&x.z, &y.z)?,
        comp(&x.zb, &y.zb)?,
        comp(&x.u, &y.u)?,
    ))
}

/// The frame `L, Lbar, T` together with the coefficient functions it is built from.
#[derive(Clone, Debug)]
pub struct Frame {
    pub a: Expr,
    pub abar: Expr,
    pub ell: Expr,
    pub l: VectorField,
    pub lbar: VectorField,
    pub t: VectorField,
}

/// `A = i phi_z / (1 - i phi_u)`, `L = D_z + A D_u`, `T = ell D_u` with `[L, Lbar] = -i T`.
pub fn make_frame(ctx: &JetContext) -> Result<Frame> {
    let i = Expr::i();
    let a = &i * ctx.jet(1, 0, 0) / (1 - &i * ctx.jet(0, 0, 1));
    let abar = a.conj();
    let d = |e: &Expr, v| ctx.total_derivative(e, v);
    let ell = &i
        * (d(&abar, BaseVar::Z)? + &a * d(&abar, BaseVar::U)?
            - d(&a, BaseVar::Zb)?
            - &abar * d(&a, BaseVar::U)?);
    let l = VectorField::new(Expr::one(), Expr::zero(), a.clone());
    let lbar = VectorField::new(Expr::zero(), Expr::one(), abar.clone());
    let t = VectorField::new(Expr::zero(), Expr::zero(), ell.clone());
    Ok(Frame {
        a,
        abar,
        ell,
        l,
        lbar,
        t,
    })
}

/// Partial derivatives of a jet-free `phi`, memoized by multi-index.
pub struct PhiJets {
    ctx: JetContext,
    table: FxHashMap<JetVar, Expr>,
}

impl PhiJets {
    pub fn new(phi: &Expr) -> PhiJets {
        let mut table = FxHashMap::default();
        table.insert(JetVar::new(0, 0, 0), phi.clone());
        PhiJets {
            ctx: JetContext::new(u32::MAX, false),
            table,
        }
    }

    pub fn get(&mut self, j: JetVar) -> Result<Expr> {
        if let Some(e) = self.table.get(&j) {
            return Ok(e.clone());
        }
        let (prev, dir) = if j.c > 0 {
            (JetVar::new(j.a, j.b, j.c - 1), BaseVar::U)
        } else if j.b > 0 {
            (JetVar::new(j.a, j.b - 1, j.c), BaseVar::Zb)
        } else {
            (JetVar::new(j.a - 1, j.b, j.c), BaseVar::Z)
        };
        let base = self.get(prev)?;
        let e = self.ctx.total_derivative(&base, dir)?;
        self.table.insert(j, e.clone());
        Ok(e)
    }
}

/// Replace every jet in `e` by the corresponding derivative of `phi`.
pub fn specialize_phi(e: &Expr, phi: &Expr) -> Result<Expr> {
    if let Some(v) = phi.vars().into_iter().find(|v| !matches!(v, VarId::Base(_))) {
        return Err(Error::Invalid(format!(
            "defining function involves `{}`",
            v
        )));
    }
    let mut jets = PhiJets::new(phi);
    let mut map = FxHashMap::default();
    for v in e.vars() {
        if let VarId::Jet(j) = v {
            map.insert(v, jets.get(j)?);
        }
    }
    Ok(e.substitute(&map))
}

/// Exact jet values of `phi` at a base point.
pub fn jet_values(
    phi: &Expr,
    jets: &BTreeSet<VarId>,
    base_point: &Assignment,
) -> Result<Assignment> {
    let mut pj = PhiJets::new(phi);
    let mut out = base_point.clone();
    for v in jets {
        if let VarId::Jet(j) = v {
            let e = pj.get(*j)?;
            out.insert(*v, eval_exact(&e, base_point)?);
        }
    }
    Ok(out)
}

/// A reality-consistent random point for `vars`, avoiding zeros of `exclusions`.
pub fn random_real_assignment(
    vars: &BTreeSet<VarId>,
    seed: u64,
    exclusions: &[Expr],
) -> Result<Assignment> {
    let tester = ZeroTester::new(1, seed).with_exclusions(exclusions.to_vec());
    let mut all = vars.clone();
    for e in exclusions {
        all.extend(e.vars());
    }
    let program = crate::eval::Program::new(exclusions);
    let mut sampler = RealSampler::new(seed);
    let (point, _) = tester.admissible_point(&mut sampler, &all, &program)?;
    Ok(point)
}

/// Base point `z = z0, zb = conj(z0), u = u0`.
pub fn base_point(z: &GaussianRational, u: &GaussianRational) -> Assignment {
    let mut p = Assignment::new();
    p.insert(VarId::Z, z.clone());
    p.insert(VarId::ZB, z.conj());
    p.insert(VarId::U, u.clone());
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zero::{is_identically_zero, ZeroMode};

    #[test]
    fn total_derivative_basics() {
        let ctx = JetContext::default();
        let z = Expr::var(VarId::Z);
        assert!(ctx.total_derivative(&z, BaseVar::Z).unwrap().is_one());
        let e = Expr::jet(1, 0, 0) * &z;
        let d = ctx.total_derivative(&e, BaseVar::Z).unwrap();
        let want = Expr::jet(2, 0, 0) * &z + Expr::jet(1, 0, 0);
        assert!(is_identically_zero(&(d - want), &ZeroMode::canonical()).unwrap().is_zero());
        let b = Expr::var(VarId::Group(GroupVar::B));
        assert!(ctx.total_derivative(&b, BaseVar::U).unwrap().is_zero());
    }

    #[test]
    fn order_limit() {
        let ctx = JetContext::new(2, false);
        let e = Expr::jet(1, 1, 0);
        assert_eq!(
            ctx.total_derivative(&e, BaseVar::U),
            Err(Error::JetOrderExceeded { order: 3, max: 2 })
        );
    }

    #[test]
    fn rigid_drops_u_jets() {
        let ctx = JetContext::rigid();
        assert!(ctx.jet(1, 0, 1).is_zero());
        let e = Expr::jet(1, 1, 0);
        assert!(ctx.total_derivative(&e, BaseVar::U).unwrap().is_zero());
    }

    #[test]
    fn specialize_matches_direct() {
        let phi = crate::parser::parse_phi("z*zb + u*z*zb").unwrap();
        let e = Expr::jet(1, 1, 1) + Expr::jet(2, 0, 0);
        let s = specialize_phi(&e, &phi).unwrap();
        assert!(is_identically_zero(&(s - 1), &ZeroMode::canonical()).unwrap().is_zero());
    }
}
