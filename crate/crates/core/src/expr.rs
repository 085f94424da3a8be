//! Hash-consed immutable expression DAG over Q(i).
//!
//! Every node is interned: two structurally equal expressions share one
//! allocation, so equality and hashing are pointer operations. Smart
//! constructors apply light normalization (flattening, constant folding,
//! like-term collection, ordering of commutative arguments); they never
//! expand products.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex, OnceLock, Weak};

use rustc_hash::{FxHashMap, FxHashSet, FxHasher};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::GaussianRational;
use crate::var::VarId;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ExprKind {
    Const(GaussianRational),
    Var(VarId),
    Add(Box<[Expr]>),
    Mul(Box<[Expr]>),
    Div(Expr, Expr),
    Pow(Expr, u32),
}

#[derive(Debug)]
pub struct Node {
    id: u64,
    hash: u64,
    kind: ExprKind,
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

fn take_children(kind: &mut ExprKind, out: &mut Vec<Expr>) {
    match std::mem::replace(kind, ExprKind::Var(VarId::Z)) {
        ExprKind::Add(xs) | ExprKind::Mul(xs) => out.extend(xs.into_vec()),
        ExprKind::Div(a, b) => {
            out.push(a);
            out.push(b);
        }
        ExprKind::Pow(a, _) => out.push(a),
        k => *kind = k,
    }
}

// Iterative teardown so that very deep DAGs do not exhaust the stack.
impl Drop for Node {
    fn drop(&mut self) {
        if matches!(self.kind, ExprKind::Const(_) | ExprKind::Var(_)) {
            return;
        }
        let mut stack = Vec::new();
        take_children(&mut self.kind, &mut stack);
        while let Some(e) = stack.pop() {
            if let Ok(mut node) = Arc::try_unwrap(e.0) {
                take_children(&mut node.kind, &mut stack);
            }
        }
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr#{}({})", self.0.id, crate::render::render_plain_tree(self, 200))
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}
impl Eq for Expr {}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

// Constants, then atoms in variable order, then everything else by structural hash.
fn sort_key(e: &Expr) -> (u8, Option<VarId>, u64, u64) {
    match e.kind() {
        ExprKind::Const(_) => (0, None, e.0.hash, e.0.id),
        ExprKind::Var(v) => (1, Some(*v), 0, e.0.id),
        ExprKind::Pow(b, n) if b.as_var().is_some() => (1, b.as_var(), *n as u64, e.0.id),
        _ => (2, None, e.0.hash, e.0.id),
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        sort_key(self).cmp(&sort_key(other))
    }
}
impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Interner {
    table: FxHashMap<u64, SmallVec<[Weak<Node>; 1]>>,
    inserts_since_sweep: usize,
}

static INTERNER: OnceLock<Mutex<Interner>> = OnceLock::new();
static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn interner() -> &'static Mutex<Interner> {
    INTERNER.get_or_init(|| {
        Mutex::new(Interner {
            table: FxHashMap::default(),
            inserts_since_sweep: 0,
        })
    })
}

fn shallow_eq(a: &ExprKind, b: &ExprKind) -> bool {
    match (a, b) {
        (ExprKind::Const(x), ExprKind::Const(y)) => x == y,
        (ExprKind::Var(x), ExprKind::Var(y)) => x == y,
        (ExprKind::Add(x), ExprKind::Add(y)) | (ExprKind::Mul(x), ExprKind::Mul(y)) => {
            x.len() == y.len() && x.iter().zip(y.iter()).all(|(p, q)| p == q)
        }
        (ExprKind::Div(a1, b1), ExprKind::Div(a2, b2)) => a1 == a2 && b1 == b2,
        (ExprKind::Pow(a1, n1), ExprKind::Pow(a2, n2)) => a1 == a2 && n1 == n2,
        _ => false,
    }
}

fn structural_hash(kind: &ExprKind) -> u64 {
    let mut h = FxHasher::default();
    match kind {
        ExprKind::Const(c) => {
            0u8.hash(&mut h);
            c.hash(&mut h);
        }
        ExprKind::Var(v) => {
            1u8.hash(&mut h);
            v.hash(&mut h);
        }
        ExprKind::Add(xs) => {
            2u8.hash(&mut h);
            for x in xs.iter() {
                x.0.hash.hash(&mut h);
            }
        }
        ExprKind::Mul(xs) => {
            3u8.hash(&mut h);
            for x in xs.iter() {
                x.0.hash.hash(&mut h);
            }
        }
        ExprKind::Div(a, b) => {
            4u8.hash(&mut h);
            a.0.hash.hash(&mut h);
            b.0.hash.hash(&mut h);
        }
        ExprKind::Pow(a, n) => {
            5u8.hash(&mut h);
            a.0.hash.hash(&mut h);
            n.hash(&mut h);
        }
    }
    h.finish()
}

fn intern(kind: ExprKind) -> Expr {
    let hash = structural_hash(&kind);
    let mut guard = interner().lock().unwrap_or_else(|e| e.into_inner());
    let table = &mut guard.table;
    if let Some(bucket) = table.get(&hash) {
        for w in bucket.iter() {
            if let Some(node) = w.upgrade() {
                if shallow_eq(&node.kind, &kind) {
                    return Expr(node);
                }
            }
        }
    }
    let node = Arc::new(Node {
        id: NEXT_ID.fetch_add(1, AtomicOrdering::Relaxed),
        hash,
        kind,
    });
    let bucket = table.entry(hash).or_default();
    bucket.retain(|w| w.strong_count() > 0);
    bucket.push(Arc::downgrade(&node));
    guard.inserts_since_sweep += 1;
    if guard.inserts_since_sweep > guard.table.len().max(1 << 16) {
        guard.table.retain(|_, b| {
            b.retain(|w| w.strong_count() > 0);
            !b.is_empty()
        });
        guard.inserts_since_sweep = 0;
    }
    Expr(node)
}

/// Number of live interned nodes.
pub fn interned_count() -> usize {
    let guard = interner().lock().unwrap_or_else(|e| e.into_inner());
    guard
        .table
        .values()
        .map(|b| b.iter().filter(|w| w.strong_count() > 0).count())
        .sum()
}

impl Expr {
    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    /// Process-unique identifier of this node.
    pub fn id(&self) -> u64 {
        self.0.id
    }

    /// Structural hash, stable across runs.
    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    pub fn constant(c: GaussianRational) -> Expr {
        intern(ExprKind::Const(c))
    }

    pub fn int(n: i64) -> Expr {
        Expr::constant(GaussianRational::from_int(n))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::constant(GaussianRational::from_ratio(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn i() -> Expr {
        Expr::constant(GaussianRational::i())
    }

    /// `(n/d) * i`.
    pub fn imag(n: i64, d: i64) -> Expr {
        Expr::constant(GaussianRational::from_parts(0, 1, n, d))
    }

    pub fn var(v: VarId) -> Expr {
        intern(ExprKind::Var(v))
    }

    pub fn jet(a: u8, b: u8, c: u8) -> Expr {
        Expr::var(VarId::jet(a, b, c))
    }

    pub fn as_const(&self) -> Option<&GaussianRational> {
        match self.kind() {
            ExprKind::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<VarId> {
        match self.kind() {
            ExprKind::Var(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(|c| c.is_one())
    }

    pub fn for_each_child(&self, mut f: impl FnMut(&Expr)) {
        match self.kind() {
            ExprKind::Const(_) | ExprKind::Var(_) => {}
            ExprKind::Add(xs) | ExprKind::Mul(xs) => xs.iter().for_each(f),
            ExprKind::Div(a, b) => {
                f(a);
                f(b);
            }
            ExprKind::Pow(a, _) => f(a),
        }
    }

    /// Sum with like-term collection.
    pub fn add_all<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut konst = GaussianRational::zero();
        let mut order: Vec<Expr> = Vec::new();
        let mut coefs: FxHashMap<u64, GaussianRational> = FxHashMap::default();
        let mut stack: Vec<Expr> = terms.into_iter().collect();
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.kind() {
                ExprKind::Const(c) => konst = &konst + c,
                ExprKind::Add(xs) => stack.extend(xs.iter().rev().cloned()),
                _ => {
                    let (c, core) = split_coefficient(&t);
                    match coefs.get_mut(&core.id()) {
                        Some(acc) => *acc = &*acc + &c,
                        None => {
                            coefs.insert(core.id(), c);
                            order.push(core);
                        }
                    }
                }
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(order.len() + 1);
        for core in order {
            let c = coefs.remove(&core.id()).unwrap();
            if c.is_zero() {
                continue;
            }
            out.push(scale(&c, &core));
        }
        out.sort();
        if !konst.is_zero() {
            out.insert(0, Expr::constant(konst));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => intern(ExprKind::Add(out.into_boxed_slice())),
        }
    }

    /// Product with constant folding and exponent collection.
    pub fn mul_all<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut konst = GaussianRational::one();
        let mut order: Vec<Expr> = Vec::new();
        let mut exps: FxHashMap<u64, u64> = FxHashMap::default();
        let mut stack: Vec<Expr> = factors.into_iter().collect();
        while let Some(f) = stack.pop() {
            match f.kind() {
                ExprKind::Const(c) => {
                    if c.is_zero() {
                        return Expr::zero();
                    }
                    konst = &konst * c;
                }
                ExprKind::Mul(xs) => stack.extend(xs.iter().cloned()),
                _ => {
                    let (base, n) = match f.kind() {
                        ExprKind::Pow(b, n) => (b.clone(), *n as u64),
                        _ => (f.clone(), 1),
                    };
                    match exps.get_mut(&base.id()) {
                        Some(e) => *e += n,
                        None => {
                            exps.insert(base.id(), n);
                            order.push(base);
                        }
                    }
                }
            }
        }
        let mut out: Vec<Expr> = order
            .into_iter()
            .map(|b| {
                let n = exps[&b.id()];
                if n == 1 {
                    b
                } else {
                    intern(ExprKind::Pow(b, n as u32))
                }
            })
            .collect();
        out.sort();
        if konst.is_one() {
            match out.len() {
                0 => Expr::one(),
                1 => out.pop().unwrap(),
                _ => intern(ExprKind::Mul(out.into_boxed_slice())),
            }
        } else if out.is_empty() {
            Expr::constant(konst)
        } else {
            out.insert(0, Expr::constant(konst));
            intern(ExprKind::Mul(out.into_boxed_slice()))
        }
    }

    /// Quotient; fails only when the denominator is the literal zero.
    pub fn try_div(&self, den: &Expr) -> Result<Expr> {
        if let Some(c) = den.as_const() {
            let inv = c.inv().ok_or(Error::DivisionByZero)?;
            return Ok(scale(&inv, self));
        }
        if self.is_zero() {
            return Ok(Expr::zero());
        }
        if self == den {
            return Ok(Expr::one());
        }
        Ok(match (self.kind(), den.kind()) {
            (ExprKind::Div(a, b), ExprKind::Div(c, d)) => {
                Expr::div_raw(&(a * d), &(b * c))
            }
            (ExprKind::Div(a, b), _) => Expr::div_raw(a, &(b * den)),
            (_, ExprKind::Div(c, d)) => Expr::div_raw(&(self * d), c),
            _ => Expr::div_raw(self, den),
        })
    }

    fn div_raw(num: &Expr, den: &Expr) -> Expr {
        if let Some(c) = den.as_const() {
            return scale(&c.inv().expect("division by zero"), num);
        }
        if num == den {
            return Expr::one();
        }
        // Pull a constant factor out of the numerator so that `k*x/y` and `k*(x/y)` agree.
        let (k, core) = split_coefficient(num);
        if !k.is_one() {
            return scale(&k, &intern(ExprKind::Div(core, den.clone())));
        }
        intern(ExprKind::Div(num.clone(), den.clone()))
    }

    pub fn pow(&self, n: i64) -> Expr {
        if n == 0 {
            return Expr::one();
        }
        if n == 1 {
            return self.clone();
        }
        if n < 0 {
            return Expr::one().try_div(&self.pow(-n)).expect("power of zero");
        }
        match self.kind() {
            ExprKind::Const(c) => Expr::constant(c.pow(n as u32)),
            ExprKind::Pow(b, m) => b.pow(n * (*m as i64)),
            ExprKind::Div(a, b) => Expr::div_raw(&a.pow(n), &b.pow(n)),
            ExprKind::Mul(xs) if xs[0].as_const().is_some() => {
                let c = xs[0].as_const().unwrap().pow(n as u32);
                let rest = Expr::mul_all(xs[1..].iter().cloned());
                scale(&c, &intern(ExprKind::Pow(rest, n as u32)))
            }
            _ => intern(ExprKind::Pow(self.clone(), n as u32)),
        }
    }

    pub fn square(&self) -> Expr {
        self.pow(2)
    }

    /// Involution `i -> -i` on constants and the variable conjugation on atoms.
    pub fn conj(&self) -> Expr {
        let mut memo = FxHashMap::default();
        map_bottom_up(self, &mut memo, &mut |e, ch| {
            Ok(match e.kind() {
                ExprKind::Const(c) => Expr::constant(c.conj()),
                ExprKind::Var(v) => Expr::var(v.conj()),
                _ => rebuild(e, ch),
            })
        })
        .expect("conjugation is infallible")
    }

    /// Replace variables by expressions, simultaneously.
    pub fn substitute(&self, map: &FxHashMap<VarId, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        let mut memo = FxHashMap::default();
        map_bottom_up(self, &mut memo, &mut |e, ch| {
            Ok(match e.kind() {
                ExprKind::Var(v) => map.get(v).cloned().unwrap_or_else(|| e.clone()),
                _ => rebuild(e, ch),
            })
        })
        .expect("substitution is infallible")
    }

    pub fn substitute_one(&self, v: VarId, by: &Expr) -> Expr {
        let mut m = FxHashMap::default();
        m.insert(v, by.clone());
        self.substitute(&m)
    }

    /// Free variables, sorted.
    pub fn vars(&self) -> BTreeSet<VarId> {
        vars_of(std::slice::from_ref(self))
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.vars().contains(&v)
    }

    /// Number of distinct DAG nodes.
    pub fn node_count(&self) -> usize {
        post_order(std::slice::from_ref(self)).len()
    }

    /// Size of the expression unfolded as a tree, saturating.
    pub fn tree_size(&self) -> u64 {
        let order = post_order(std::slice::from_ref(self));
        let mut size: FxHashMap<u64, u64> = FxHashMap::default();
        for e in &order {
            let mut s: u64 = 1;
            e.for_each_child(|c| s = s.saturating_add(size[&c.id()]));
            size.insert(e.id(), s);
        }
        size[&self.id()]
    }

    /// Highest jet order occurring, 0 if none.
    pub fn max_jet_order(&self) -> u32 {
        self.vars()
            .iter()
            .filter_map(|v| match v {
                VarId::Jet(j) => Some(j.order()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

fn scale(c: &GaussianRational, e: &Expr) -> Expr {
    if c.is_zero() {
        return Expr::zero();
    }
    if c.is_one() {
        return e.clone();
    }
    Expr::mul_all([Expr::constant(c.clone()), e.clone()])
}

fn split_coefficient(t: &Expr) -> (GaussianRational, Expr) {
    if let ExprKind::Mul(xs) = t.kind() {
        if let Some(c) = xs[0].as_const() {
            let core = if xs.len() == 2 {
                xs[1].clone()
            } else {
                intern(ExprKind::Mul(xs[1..].to_vec().into_boxed_slice()))
            };
            return (c.clone(), core);
        }
    }
    (GaussianRational::one(), t.clone())
}

/// Rebuild `e` with new children through the smart constructors.
pub fn rebuild(e: &Expr, ch: &[Expr]) -> Expr {
    match e.kind() {
        ExprKind::Const(_) | ExprKind::Var(_) => e.clone(),
        ExprKind::Add(_) => Expr::add_all(ch.iter().cloned()),
        ExprKind::Mul(_) => Expr::mul_all(ch.iter().cloned()),
        ExprKind::Div(..) => ch[0].try_div(&ch[1]).expect("literal zero denominator"),
        ExprKind::Pow(_, n) => ch[0].pow(*n as i64),
    }
}

/// Distinct nodes reachable from `roots`, children before parents.
pub fn post_order(roots: &[Expr]) -> Vec<Expr> {
    post_order_skipping(roots, |_| false)
}

/// Post-order that does not descend into (nor emit) nodes for which `skip` holds.
pub fn post_order_skipping(roots: &[Expr], skip: impl Fn(&Expr) -> bool) -> Vec<Expr> {
    let mut visited: FxHashSet<u64> = FxHashSet::default();
    let mut out = Vec::new();
    let mut stack: Vec<(Expr, bool)> = roots.iter().rev().map(|r| (r.clone(), false)).collect();
    while let Some((e, expanded)) = stack.pop() {
        if expanded {
            out.push(e);
            continue;
        }
        if !visited.insert(e.id()) {
            continue;
        }
        if skip(&e) {
            continue;
        }
        stack.push((e.clone(), true));
        let mut kids: SmallVec<[Expr; 8]> = SmallVec::new();
        e.for_each_child(|c| {
            if !visited.contains(&c.id()) {
                kids.push(c.clone())
            }
        });
        for c in kids.into_iter().rev() {
            stack.push((c, false));
        }
    }
    out
}

pub fn vars_of(roots: &[Expr]) -> BTreeSet<VarId> {
    post_order(roots)
        .iter()
        .filter_map(|e| e.as_var())
        .collect()
}

/// Bottom-up rewrite with memoization keyed by node id.
pub fn map_bottom_up(
    root: &Expr,
    memo: &mut FxHashMap<u64, Expr>,
    f: &mut dyn FnMut(&Expr, &[Expr]) -> Result<Expr>,
) -> Result<Expr> {
    if let Some(r) = memo.get(&root.id()) {
        return Ok(r.clone());
    }
    let order = post_order_skipping(std::slice::from_ref(root), |e| memo.contains_key(&e.id()));
    let mut ch: SmallVec<[Expr; 8]> = SmallVec::new();
    for e in order {
        ch.clear();
        e.for_each_child(|c| ch.push(memo[&c.id()].clone()));
        let r = f(&e, &ch)?;
        memo.insert(e.id(), r);
    }
    Ok(memo[&root.id()].clone())
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

impl From<GaussianRational> for Expr {
    fn from(c: GaussianRational) -> Expr {
        Expr::constant(c)
    }
}

impl From<VarId> for Expr {
    fn from(v: VarId) -> Expr {
        Expr::var(v)
    }
}

macro_rules! impl_ops {
    ($tr:ident, $m:ident, $f:expr) => {
        impl<'a, 'b> ops::$tr<&'b Expr> for &'a Expr {
            type Output = Expr;
            fn $m(self, rhs: &'b Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $f;
                f(self, rhs)
            }
        }
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                ops::$tr::$m(&self, &rhs)
            }
        }
        impl<'a> ops::$tr<&'a Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &'a Expr) -> Expr {
                ops::$tr::$m(&self, rhs)
            }
        }
        impl<'a> ops::$tr<Expr> for &'a Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                ops::$tr::$m(self, &rhs)
            }
        }
        impl ops::$tr<i64> for Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                ops::$tr::$m(&self, &Expr::int(rhs))
            }
        }
        impl<'a> ops::$tr<i64> for &'a Expr {
            type Output = Expr;
            fn $m(self, rhs: i64) -> Expr {
                ops::$tr::$m(self, &Expr::int(rhs))
            }
        }
        impl ops::$tr<Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                ops::$tr::$m(&Expr::int(self), &rhs)
            }
        }
        impl<'a> ops::$tr<&'a Expr> for i64 {
            type Output = Expr;
            fn $m(self, rhs: &'a Expr) -> Expr {
                ops::$tr::$m(&Expr::int(self), rhs)
            }
        }
    };
}

impl_ops!(Add, add, |a, b| Expr::add_all([a.clone(), b.clone()]));
impl_ops!(Sub, sub, |a, b| Expr::add_all([a.clone(), -b]));
impl_ops!(Mul, mul, |a, b| Expr::mul_all([a.clone(), b.clone()]));
impl_ops!(Div, div, |a, b| a
    .try_div(b)
    .expect("division by the literal zero"));

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        scale(&GaussianRational::from_int(-1), self)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

/// Binary arithmetic operations for [`arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Checked arithmetic: division by an expression that tests identically zero fails.
pub fn arith(a: &Expr, b: &Expr, op: ArithOp) -> Result<Expr> {
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => {
            if b.is_zero() {
                return Err(Error::DivisionByZero);
            }
            if b.as_const().is_none() {
                let verdict = crate::zero::is_identically_zero(b, &crate::zero::ZeroMode::quick())?;
                if verdict.is_zero() {
                    return Err(Error::DivisionByZero);
                }
            }
            a.try_div(b)?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> Expr {
        Expr::var(VarId::Z)
    }
    fn zb() -> Expr {
        Expr::var(VarId::ZB)
    }

    #[test]
    fn hash_consing_shares_nodes() {
        let a = &z() * &zb() + 1;
        let b = 1 + &zb() * &z();
        assert_eq!(a, b);
        assert_eq!(a.id(), b.id());
    }

    #[test]
    fn like_terms_collect() {
        let e = &z() + &z() - &(2 * &z());
        assert!(e.is_zero());
        let e = &z() * &z() * &z();
        assert_eq!(e, z().pow(3));
        assert_eq!(&z().pow(2) / &z().pow(2), Expr::one());
    }

    #[test]
    fn conj_is_involution_on_sample() {
        let e = (Expr::i() * z() + zb().pow(2)) / (1 + Expr::jet(2, 1, 0));
        assert_eq!(e.conj().conj(), e);
        assert_ne!(e.conj(), e);
    }

    #[test]
    fn nested_div_flattens() {
        let e = (z() / zb()) / (zb() / z());
        match e.kind() {
            ExprKind::Div(a, b) => {
                assert_eq!(*a, z().pow(2));
                assert_eq!(*b, zb().pow(2));
            }
            k => panic!("unexpected {:?}", k),
        }
    }

    #[test]
    fn deep_chain_does_not_overflow_stack() {
        let mut e = z();
        for k in 0..200_000 {
            e = &e * &zb() + k;
        }
        assert!(e.node_count() > 200_000);
        let c = e.conj();
        assert!(c.vars().contains(&VarId::Z));
    }
}
