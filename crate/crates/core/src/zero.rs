//! Identically-zero testing: exact by canonical expansion, or probabilistic
//! by evaluation at random reality-consistent points.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::eval::{Assignment, Program};
use crate::expr::{vars_of, Expr};
use crate::modp::Fp2;
use crate::poly::{expand_canonical, DEFAULT_BUDGET};
use crate::sample::{RealSampler, DEFAULT_BOUND};
use crate::scalar::GaussianRational;
use crate::var::VarId;

pub const DEFAULT_TRIALS: u32 = 20;
pub const DEFAULT_SEED: u64 = 0x00c0_ffee;
const MAX_ATTEMPTS_PER_TRIAL: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ZeroMode {
    Canonical { budget: usize },
    Probabilistic { trials: u32, seed: u64 },
}

impl ZeroMode {
    pub fn canonical() -> ZeroMode {
        ZeroMode::Canonical {
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn probabilistic() -> ZeroMode {
        ZeroMode::Probabilistic {
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
        }
    }

    /// A few trials, for guarding divisions.
    pub fn quick() -> ZeroMode {
        ZeroMode::Probabilistic {
            trials: 3,
            seed: DEFAULT_SEED,
        }
    }
}

/// A point where an expression was found nonzero, with its value there.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub point: Assignment,
    pub value: GaussianRational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    Zero,
    NonZero(Option<Witness>),
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::Zero)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            ZeroVerdict::NonZero(w) => w.as_ref(),
            ZeroVerdict::Zero => None,
        }
    }
}

pub fn is_identically_zero(e: &Expr, mode: &ZeroMode) -> Result<ZeroVerdict> {
    if let Some(c) = e.as_const() {
        return Ok(if c.is_zero() {
            ZeroVerdict::Zero
        } else {
            ZeroVerdict::NonZero(Some(Witness {
                point: Assignment::new(),
                value: c.clone(),
            }))
        });
    }
    match mode {
        ZeroMode::Canonical { budget } => {
            let c = expand_canonical(e, *budget)?;
            if c.is_zero() {
                Ok(ZeroVerdict::Zero)
            } else {
                let probe = ZeroTester::new(4, DEFAULT_SEED);
                let w = probe
                    .test_many(std::slice::from_ref(e))
                    .ok()
                    .and_then(|mut v| v.pop())
                    .and_then(|v| v.witness().cloned());
                Ok(ZeroVerdict::NonZero(w))
            }
        }
        ZeroMode::Probabilistic { trials, seed } => {
            let mut v = ZeroTester::new(*trials, *seed).test_many(std::slice::from_ref(e))?;
            Ok(v.pop().unwrap())
        }
    }
}

/// Probabilistic tester for several expressions sharing one stream of points.
#[derive(Clone, Debug)]
pub struct ZeroTester {
    pub trials: u32,
    pub seed: u64,
    pub bound: i64,
    pub fixed: Assignment,
    pub exclusions: Vec<Expr>,
}

impl ZeroTester {
    pub fn new(trials: u32, seed: u64) -> ZeroTester {
        ZeroTester {
            trials,
            seed,
            bound: DEFAULT_BOUND,
            fixed: Assignment::new(),
            exclusions: Vec::new(),
        }
    }

    pub fn with_exclusions(mut self, ex: Vec<Expr>) -> ZeroTester {
        self.exclusions = ex;
        self
    }

    pub fn with_fixed(mut self, fixed: Assignment) -> ZeroTester {
        self.fixed = fixed;
        self
    }

    /// Draw an admissible point for `vars`: exclusions nonzero, `check` pole-free.
    pub fn admissible_point(
        &self,
        sampler: &mut RealSampler,
        vars: &BTreeSet<VarId>,
        program: &Program,
    ) -> Result<(Assignment, Vec<GaussianRational>)> {
        let nex = self.exclusions.len();
        for _ in 0..MAX_ATTEMPTS_PER_TRIAL {
            let point = sampler.draw(vars, &self.fixed);
            match program.eval_exact(&point) {
                Ok(vals) => {
                    if vals[..nex].iter().any(|v| v.is_zero()) {
                        continue;
                    }
                    return Ok((point, vals[nex..].to_vec()));
                }
                Err(Error::PoleAtPoint) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::SingularLocusExhausted {
            attempts: MAX_ATTEMPTS_PER_TRIAL,
        })
    }

    /// A point where the exclusions are nonzero, with the roots' images in F_p[i].
    ///
    /// Falls back to exact evaluation when the reduction mod p is undefined or
    /// an exclusion vanishes only mod p.
    fn modular_point(
        &self,
        sampler: &mut RealSampler,
        vars: &BTreeSet<VarId>,
        program: &Program,
    ) -> Result<(Assignment, Option<Vec<Fp2>>)> {
        let nex = self.exclusions.len();
        for _ in 0..MAX_ATTEMPTS_PER_TRIAL {
            let point = sampler.draw(vars, &self.fixed);
            let image: Option<BTreeMap<VarId, Fp2>> =
                point.iter().map(|(v, x)| Fp2::reduce(x).map(|y| (*v, y))).collect();
            if let Some(image) = image {
                if let Ok(vals) = program.eval_mod(&image) {
                    if vals[..nex].iter().all(|v| !v.is_zero()) {
                        return Ok((point, Some(vals[nex..].to_vec())));
                    }
                }
            }
            match program.eval_exact(&point) {
                Ok(vals) if vals[..nex].iter().all(|v| !v.is_zero()) => return Ok((point, None)),
                Ok(_) | Err(Error::PoleAtPoint) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::SingularLocusExhausted {
            attempts: MAX_ATTEMPTS_PER_TRIAL,
        })
    }

    /// Zero-test several roots at shared points.
    ///
    /// The first trial is exact in Q(i); later trials evaluate the same kind of
    /// rational point in F_p[i], and any nonzero image is confirmed exactly.
    pub fn test_many(&self, roots: &[Expr]) -> Result<Vec<ZeroVerdict>> {
        let mut all: Vec<Expr> = self.exclusions.clone();
        all.extend_from_slice(roots);
        let vars = vars_of(&all);
        let program = Program::new(&all);
        let nex = self.exclusions.len();
        let mut sampler = RealSampler::with_bound(self.seed, self.bound);
        let mut verdicts: Vec<ZeroVerdict> = vec![ZeroVerdict::Zero; roots.len()];
        let mut open = roots.len();
        for trial in 0..self.trials.max(1) {
            if open == 0 {
                break;
            }
            let (point, vals) = if trial == 0 {
                self.admissible_point(&mut sampler, &vars, &program)?
            } else {
                match self.modular_point(&mut sampler, &vars, &program)? {
                    (point, Some(images)) => {
                        let hit = images.iter().zip(&verdicts).any(|(v, d)| !v.is_zero() && d.is_zero());
                        if !hit {
                            continue;
                        }
                        let vals = program.eval_exact(&point)?[nex..].to_vec();
                        (point, vals)
                    }
                    (point, None) => {
                        let vals = program.eval_exact(&point)?[nex..].to_vec();
                        (point, vals)
                    }
                }
            };
            for (k, v) in vals.into_iter().enumerate() {
                if !v.is_zero() && verdicts[k].is_zero() {
                    verdicts[k] = ZeroVerdict::NonZero(Some(Witness {
                        point: point.clone(),
                        value: v,
                    }));
                    open -= 1;
                }
            }
        }
        Ok(verdicts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_on_simple_identity() {
        let z = Expr::var(VarId::Z);
        let zb = Expr::var(VarId::ZB);
        let e = (&z + &zb).pow(2) - &z * &z - 2 * &z * &zb - &zb * &zb;
        assert!(is_identically_zero(&e, &ZeroMode::canonical()).unwrap().is_zero());
        assert!(is_identically_zero(&e, &ZeroMode::probabilistic()).unwrap().is_zero());
    }

    #[test]
    fn nonzero_has_witness() {
        let z = Expr::var(VarId::Z);
        let e = &z * &z - &z;
        let v = is_identically_zero(&e, &ZeroMode::probabilistic()).unwrap();
        let w = v.witness().unwrap();
        assert_eq!(crate::eval::eval_exact(&e, &w.point).unwrap(), w.value);
    }
}
