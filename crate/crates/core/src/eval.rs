//! Evaluation of expression DAGs at a point, exactly in Q(i) or in double precision.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::expr::{post_order, Expr, ExprKind};
use crate::modp::Fp2;
use crate::scalar::GaussianRational;
use crate::var::VarId;

/// An exact point: values for variables.
pub type Assignment = BTreeMap<VarId, GaussianRational>;

#[derive(Clone, Debug)]
enum Op {
    Const(GaussianRational),
    Var(VarId),
    Add(Vec<usize>),
    Mul(Vec<usize>),
    Div(usize, usize),
    Pow(usize, u32),
}

/// A DAG flattened into straight-line code, reusable across many points.
#[derive(Clone, Debug)]
pub struct Program {
    ops: Vec<Op>,
    roots: Vec<usize>,
}

impl Program {
    pub fn new(roots: &[Expr]) -> Program {
        let order = post_order(roots);
        let mut index: FxHashMap<u64, usize> = FxHashMap::default();
        let mut ops = Vec::with_capacity(order.len());
        for e in &order {
            let op = match e.kind() {
                ExprKind::Const(c) => Op::Const(c.clone()),
                ExprKind::Var(v) => Op::Var(*v),
                ExprKind::Add(xs) => Op::Add(xs.iter().map(|x| index[&x.id()]).collect()),
                ExprKind::Mul(xs) => Op::Mul(xs.iter().map(|x| index[&x.id()]).collect()),
                ExprKind::Div(a, b) => Op::Div(index[&a.id()], index[&b.id()]),
                ExprKind::Pow(a, n) => Op::Pow(index[&a.id()], *n),
            };
            index.insert(e.id(), ops.len());
            ops.push(op);
        }
        let roots = roots.iter().map(|r| index[&r.id()]).collect();
        Program { ops, roots }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn eval_exact(&self, point: &Assignment) -> Result<Vec<GaussianRational>> {
        let mut vals: Vec<GaussianRational> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => c.clone(),
                Op::Var(v) => point.get(v).cloned().ok_or(Error::UnboundVariable(*v))?,
                Op::Add(xs) => {
                    let mut acc = vals[xs[0]].clone();
                    for &x in &xs[1..] {
                        acc = &acc + &vals[x];
                    }
                    acc
                }
                Op::Mul(xs) => {
                    let mut acc = vals[xs[0]].clone();
                    for &x in &xs[1..] {
                        if acc.is_zero() {
                            break;
                        }
                        acc = &acc * &vals[x];
                    }
                    acc
                }
                Op::Div(a, b) => vals[*a].checked_div(&vals[*b]).ok_or(Error::PoleAtPoint)?,
                Op::Pow(a, n) => vals[*a].pow(*n),
            };
            vals.push(v);
        }
        Ok(self.roots.iter().map(|&r| vals[r].clone()).collect())
    }

    /// Image of `eval_exact` in F_p[i]; `PoleAtPoint` also when a reduction is undefined.
    pub fn eval_mod(&self, point: &BTreeMap<VarId, Fp2>) -> Result<Vec<Fp2>> {
        let mut vals: Vec<Fp2> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => Fp2::reduce(c).ok_or(Error::PoleAtPoint)?,
                Op::Var(v) => *point.get(v).ok_or(Error::UnboundVariable(*v))?,
                Op::Add(xs) => xs.iter().fold(Fp2::ZERO, |a, &x| a + vals[x]),
                Op::Mul(xs) => xs.iter().fold(Fp2::ONE, |a, &x| a * vals[x]),
                Op::Div(a, b) => vals[*a] * vals[*b].inv().ok_or(Error::PoleAtPoint)?,
                Op::Pow(a, n) => vals[*a].pow(*n),
            };
            vals.push(v);
        }
        Ok(self.roots.iter().map(|&r| vals[r]).collect())
    }

    pub fn eval_complex(&self, point: &BTreeMap<VarId, Complex64>) -> Result<Vec<Complex64>> {
        let mut vals: Vec<Complex64> = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => c.to_complex64(),
                Op::Var(v) => *point.get(v).ok_or(Error::UnboundVariable(*v))?,
                Op::Add(xs) => xs.iter().map(|&x| vals[x]).sum(),
                Op::Mul(xs) => xs.iter().map(|&x| vals[x]).product(),
                Op::Div(a, b) => {
                    if vals[*b] == Complex64::new(0.0, 0.0) {
                        return Err(Error::PoleAtPoint);
                    }
                    vals[*a] / vals[*b]
                }
                Op::Pow(a, n) => vals[*a].powu(*n),
            };
            vals.push(v);
        }
        Ok(self.roots.iter().map(|&r| vals[r]).collect())
    }
}

/// Exact value of `e` at `point`.
pub fn eval_exact(e: &Expr, point: &Assignment) -> Result<GaussianRational> {
    Ok(Program::new(std::slice::from_ref(e))
        .eval_exact(point)?
        .pop()
        .unwrap())
}

/// Double-precision value of `e` at `point`.
pub fn eval_complex(e: &Expr, point: &BTreeMap<VarId, Complex64>) -> Result<Complex64> {
    Ok(Program::new(std::slice::from_ref(e))
        .eval_complex(point)?
        .pop()
        .unwrap())
}

pub fn to_complex_point(point: &Assignment) -> BTreeMap<VarId, Complex64> {
    point.iter().map(|(k, v)| (*k, v.to_complex64())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_pole() {
        let z = Expr::var(VarId::Z);
        let e = (&z * &z + 1) / (&z - 1);
        let mut p = Assignment::new();
        p.insert(VarId::Z, GaussianRational::from_int(3));
        assert_eq!(eval_exact(&e, &p).unwrap(), GaussianRational::from_int(5));
        p.insert(VarId::Z, GaussianRational::one());
        assert_eq!(eval_exact(&e, &p), Err(Error::PoleAtPoint));
        assert_eq!(
            eval_exact(&e, &Assignment::new()),
            Err(Error::UnboundVariable(VarId::Z))
        );
    }

    #[test]
    fn complex_matches_exact() {
        let z = Expr::var(VarId::Z);
        let e = (Expr::i() * &z).pow(3) / (&z + 2);
        let mut p = Assignment::new();
        p.insert(VarId::Z, GaussianRational::from_parts(1, 3, -2, 5));
        let ex = eval_exact(&e, &p).unwrap().to_complex64();
        let fl = eval_complex(&e, &to_complex_point(&p)).unwrap();
        assert!((ex - fl).norm() < 1e-14);
    }
}
