//! Sparse multivariate polynomials and rational functions over Q(i).
//!
//! Monomials are ordered lexicographically with the variable order
//! base < jet < group, the first variable being most significant.
//! A [`Canonical`] is a quotient `num/den` with a monic denominator, no
//! common monomial factor, and the denominator cleared whenever it divides
//! the numerator exactly.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::eval::Program;
use crate::expr::{post_order, Expr, ExprKind};
use crate::scalar::GaussianRational;
use crate::var::VarId;

pub const DEFAULT_BUDGET: usize = 5_000_000;

pub type Mono = SmallVec<[(VarId, u32); 4]>;

fn mono_cmp(a: &Mono, b: &Mono) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some((va, ea)), Some((vb, eb))) => {
                if va == vb {
                    if ea != eb {
                        return ea.cmp(eb);
                    }
                    i += 1;
                    j += 1;
                } else if va < vb {
                    return Ordering::Greater;
                } else {
                    return Ordering::Less;
                }
            }
        }
    }
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = Mono::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(va, ea)), Some(&(vb, eb))) if va == vb => {
                out.push((va, ea + eb));
                i += 1;
                j += 1;
            }
            (Some(&(va, ea)), Some(&(vb, _))) if va < vb => {
                out.push((va, ea));
                i += 1;
            }
            (Some(_), Some(&(vb, eb))) => {
                out.push((vb, eb));
                j += 1;
            }
            (Some(&x), None) => {
                out.push(x);
                i += 1;
            }
            (None, Some(&y)) => {
                out.push(y);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

/// `a / b` when `b` divides `a`.
fn mono_div(a: &Mono, b: &Mono) -> Option<Mono> {
    let mut out = Mono::new();
    let mut j = 0;
    for &(va, ea) in a.iter() {
        if j < b.len() && b[j].0 < va {
            return None;
        }
        if j < b.len() && b[j].0 == va {
            let eb = b[j].1;
            if eb > ea {
                return None;
            }
            if ea > eb {
                out.push((va, ea - eb));
            }
            j += 1;
        } else {
            out.push((va, ea));
        }
    }
    if j < b.len() {
        return None;
    }
    Some(out)
}

fn mono_gcd(a: &Mono, b: &Mono) -> Mono {
    let mut out = Mono::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Equal => {
                out.push((a[i].0, a[i].1.min(b[j].1)));
                i += 1;
                j += 1;
            }
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
        }
    }
    out
}

#[derive(Clone, PartialEq, Eq, Debug)]
struct Key(Mono);

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        mono_cmp(&self.0, &other.0)
    }
}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Work counter shared by one expansion.
#[derive(Debug)]
pub struct Budget {
    pub limit: usize,
    pub used: usize,
}

impl Budget {
    pub fn new(limit: usize) -> Budget {
        Budget { limit, used: 0 }
    }

    fn charge(&mut self, n: usize) -> Result<()> {
        self.used = self.used.saturating_add(n);
        if self.used > self.limit {
            Err(Error::ExpansionOverflow { limit: self.limit })
        } else {
            Ok(())
        }
    }
}

/// Terms sorted by decreasing monomial, no zero coefficients.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    pub terms: Vec<(Mono, GaussianRational)>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: GaussianRational) -> Poly {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Mono::new(), c)],
            }
        }
    }

    pub fn one() -> Poly {
        Poly::constant(GaussianRational::one())
    }

    pub fn var(v: VarId) -> Poly {
        let mut m = Mono::new();
        m.push((v, 1));
        Poly {
            terms: vec![(m, GaussianRational::one())],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_empty() && self.terms[0].1.is_one()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn leading(&self) -> &(Mono, GaussianRational) {
        &self.terms[0]
    }

    fn from_map(map: FxHashMap<Mono, GaussianRational>) -> Poly {
        let mut terms: Vec<_> = map.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        terms.sort_by(|a, b| mono_cmp(&b.0, &a.0));
        Poly { terms }
    }

    pub fn add(&self, other: &Poly, budget: &mut Budget) -> Result<Poly> {
        budget.charge(self.len() + other.len())?;
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            let (ma, ca) = &self.terms[i];
            let (mb, cb) = &other.terms[j];
            match mono_cmp(ma, mb) {
                Ordering::Greater => {
                    out.push((ma.clone(), ca.clone()));
                    i += 1;
                }
                Ordering::Less => {
                    out.push((mb.clone(), cb.clone()));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = ca + cb;
                    if !c.is_zero() {
                        out.push((ma.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        Ok(Poly { terms: out })
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, k: &GaussianRational) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly, budget: &mut Budget) -> Result<Poly> {
        if self.is_zero() || other.is_zero() {
            return Ok(Poly::zero());
        }
        budget.charge(self.len().saturating_mul(other.len()))?;
        if self.len() == 1 || other.len() == 1 {
            let (single, many) = if self.len() == 1 { (self, other) } else { (other, self) };
            let (m, k) = &single.terms[0];
            return Ok(Poly {
                terms: many
                    .terms
                    .iter()
                    .map(|(mm, c)| (mono_mul(mm, m), c * k))
                    .collect(),
            });
        }
        let mut map: FxHashMap<Mono, GaussianRational> = FxHashMap::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = mono_mul(ma, mb);
                let c = ca * cb;
                match map.get_mut(&m) {
                    Some(acc) => *acc = &*acc + &c,
                    None => {
                        map.insert(m, c);
                    }
                }
            }
        }
        Ok(Poly::from_map(map))
    }

    pub fn pow(&self, n: u32, budget: &mut Budget) -> Result<Poly> {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base, budget)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base, budget)?;
            }
        }
        Ok(acc)
    }

    /// Exact quotient `self / g`, `None` if `g` does not divide `self`.
    pub fn div_exact(&self, g: &Poly, budget: &mut Budget) -> Result<Option<Poly>> {
        if g.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(Some(Poly::zero()));
        }
        let (lm, lc) = g.leading().clone();
        let lc_inv = lc.inv().unwrap();
        if g.len() == 1 {
            let mut terms = Vec::with_capacity(self.len());
            for (m, c) in &self.terms {
                match mono_div(m, &lm) {
                    Some(q) => terms.push((q, c * &lc_inv)),
                    None => return Ok(None),
                }
            }
            return Ok(Some(Poly { terms }));
        }
        let mut rem: BTreeMap<Key, GaussianRational> = self
            .terms
            .iter()
            .map(|(m, c)| (Key(m.clone()), c.clone()))
            .collect();
        let mut quot: Vec<(Mono, GaussianRational)> = Vec::new();
        while let Some((Key(m), c)) = rem.pop_last() {
            let q = match mono_div(&m, &lm) {
                Some(q) => q,
                None => return Ok(None),
            };
            let qc = &c * &lc_inv;
            budget.charge(g.len())?;
            for (gm, gc) in &g.terms[1..] {
                let key = Key(mono_mul(&q, gm));
                let delta = &qc * gc;
                let remove = match rem.get_mut(&key) {
                    Some(v) => {
                        *v = &*v - &delta;
                        v.is_zero()
                    }
                    None => {
                        rem.insert(key.clone(), -delta);
                        false
                    }
                };
                if remove {
                    rem.remove(&key);
                }
            }
            quot.push((q, qc));
        }
        Ok(Some(Poly { terms: quot }))
    }

    fn monomial_content(&self) -> Mono {
        let mut it = self.terms.iter();
        let mut g = match it.next() {
            Some((m, _)) => m.clone(),
            None => return Mono::new(),
        };
        for (m, _) in it {
            if g.is_empty() {
                break;
            }
            g = mono_gcd(&g, m);
        }
        g
    }

    fn div_mono(&self, m: &Mono) -> Poly {
        if m.is_empty() {
            return self.clone();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(mm, c)| (mono_div(mm, m).expect("monomial content"), c.clone()))
                .collect(),
        }
    }

    pub fn to_expr(&self) -> Expr {
        Expr::add_all(self.terms.iter().map(|(m, c)| {
            let mut fs = vec![Expr::constant(c.clone())];
            for &(v, e) in m.iter() {
                fs.push(Expr::var(v).pow(e as i64));
            }
            Expr::mul_all(fs)
        }))
    }
}

/// A rational function in normal form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Canonical {
    pub num: Poly,
    pub den: Poly,
}

impl Canonical {
    pub fn zero() -> Canonical {
        Canonical {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> Canonical {
        Canonical {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// Number of monomials in the numerator.
    pub fn monomial_count(&self) -> usize {
        self.num.len()
    }

    fn normalize(num: Poly, den: Poly, budget: &mut Budget) -> Result<Canonical> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(Canonical::zero());
        }
        let g = mono_gcd(&num.monomial_content(), &den.monomial_content());
        let (mut num, mut den) = (num.div_mono(&g), den.div_mono(&g));
        if den.len() > 1 && num.len() >= den.len() {
            if let Some(q) = num.div_exact(&den, budget)? {
                num = q;
                den = Poly::one();
            }
        }
        let lc_inv = den.leading().1.inv().unwrap();
        if !lc_inv.is_one() {
            num = num.scale(&lc_inv);
            den = den.scale(&lc_inv);
        }
        Ok(Canonical { num, den })
    }

    pub fn add(&self, other: &Canonical, budget: &mut Budget) -> Result<Canonical> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.den == other.den {
            let num = self.num.add(&other.num, budget)?;
            return Canonical::normalize(num, self.den.clone(), budget);
        }
        if let Some(q) = other.den.div_exact(&self.den, budget)? {
            let num = self.num.mul(&q, budget)?.add(&other.num, budget)?;
            return Canonical::normalize(num, other.den.clone(), budget);
        }
        if let Some(q) = self.den.div_exact(&other.den, budget)? {
            let num = other.num.mul(&q, budget)?.add(&self.num, budget)?;
            return Canonical::normalize(num, self.den.clone(), budget);
        }
        let num = self
            .num
            .mul(&other.den, budget)?
            .add(&other.num.mul(&self.den, budget)?, budget)?;
        let den = self.den.mul(&other.den, budget)?;
        Canonical::normalize(num, den, budget)
    }

    pub fn neg(&self) -> Canonical {
        Canonical {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Canonical, budget: &mut Budget) -> Result<Canonical> {
        if self.is_zero() || other.is_zero() {
            return Ok(Canonical::zero());
        }
        let num = self.num.mul(&other.num, budget)?;
        let den = self.den.mul(&other.den, budget)?;
        Canonical::normalize(num, den, budget)
    }

    pub fn div(&self, other: &Canonical, budget: &mut Budget) -> Result<Canonical> {
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let num = self.num.mul(&other.den, budget)?;
        let den = self.den.mul(&other.num, budget)?;
        Canonical::normalize(num, den, budget)
    }

    pub fn pow(&self, n: u32, budget: &mut Budget) -> Result<Canonical> {
        let num = self.num.pow(n, budget)?;
        let den = self.den.pow(n, budget)?;
        Canonical::normalize(num, den, budget)
    }

    pub fn to_expr(&self) -> Expr {
        self.num.to_expr() / self.den.to_expr()
    }
}

/// Expand `e` into canonical form within `limit` units of work.
pub fn expand_canonical(e: &Expr, limit: usize) -> Result<Canonical> {
    let mut out = expand_many(std::slice::from_ref(e), limit)?;
    Ok(out.pop().unwrap())
}

pub fn expand_many(roots: &[Expr], limit: usize) -> Result<Vec<Canonical>> {
    let mut budget = Budget::new(limit);
    let order = post_order(roots);
    budget.charge(order.len())?;
    let mut vals: FxHashMap<u64, Canonical> = FxHashMap::default();
    for e in &order {
        let v = match e.kind() {
            ExprKind::Const(c) => Canonical::from_poly(Poly::constant(c.clone())),
            ExprKind::Var(v) => Canonical::from_poly(Poly::var(*v)),
            ExprKind::Add(xs) => {
                let mut acc = vals[&xs[0].id()].clone();
                for x in &xs[1..] {
                    acc = acc.add(&vals[&x.id()], &mut budget)?;
                }
                acc
            }
            ExprKind::Mul(xs) => {
                let mut acc = vals[&xs[0].id()].clone();
                for x in &xs[1..] {
                    acc = acc.mul(&vals[&x.id()], &mut budget)?;
                }
                acc
            }
            ExprKind::Div(a, b) => vals[&a.id()].div(&vals[&b.id()], &mut budget)?,
            ExprKind::Pow(a, n) => vals[&a.id()].pow(*n, &mut budget)?,
        };
        vals.insert(e.id(), v);
    }
    Ok(roots.iter().map(|r| vals[&r.id()].clone()).collect())
}

/// Cheap structural guard: estimated size of the expression before expanding.
pub fn program_size(e: &Expr) -> usize {
    Program::new(std::slice::from_ref(e)).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var(VarId::Z)
    }
    fn y() -> Expr {
        Expr::var(VarId::ZB)
    }

    #[test]
    fn binomial_square() {
        let e = (x() + y()).pow(2) - x().pow(2) - 2 * x() * y() - y().pow(2);
        assert!(expand_canonical(&e, DEFAULT_BUDGET).unwrap().is_zero());
        let c = expand_canonical(&(x() + y()).pow(3), DEFAULT_BUDGET).unwrap();
        assert_eq!(c.monomial_count(), 4);
    }

    #[test]
    fn rational_cancellation() {
        let e = (x().pow(2) - y().pow(2)) / (x() - y()) - x() - y();
        assert!(expand_canonical(&e, DEFAULT_BUDGET).unwrap().is_zero());
        let e = 1 / x() + 1 / y() - (x() + y()) / (x() * y());
        assert!(expand_canonical(&e, DEFAULT_BUDGET).unwrap().is_zero());
    }

    #[test]
    fn overflow_is_reported() {
        let e = (x() + y() + 1).pow(60);
        assert_eq!(
            expand_canonical(&e, 1000),
            Err(Error::ExpansionOverflow { limit: 1000 })
        );
    }

    #[test]
    fn monomial_order_is_lex() {
        let mut a = Mono::new();
        a.push((VarId::Z, 1));
        let mut b = Mono::new();
        b.push((VarId::ZB, 5));
        assert_eq!(mono_cmp(&a, &b), Ordering::Greater);
        assert_eq!(mono_div(&mono_mul(&a, &b), &b), Some(a.clone()));
        assert_eq!(mono_div(&a, &b), None);
    }
}
