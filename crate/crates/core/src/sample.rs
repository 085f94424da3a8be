//! Reality-consistent random points.
//!
//! A point assigns Gaussian-rational values to variables such that every
//! variable and its conjugate receive conjugate values; self-conjugate
//! variables (`u`, diagonal jets) receive real values.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::Assignment;
use crate::scalar::GaussianRational;
use crate::var::VarId;

pub const DEFAULT_BOUND: i64 = 97;

/// Mix a base seed with a label, so that independent checks draw independent streams.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut x = seed ^ h;
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub struct RealSampler {
    rng: ChaCha8Rng,
    bound: i64,
}

impl RealSampler {
    pub fn new(seed: u64) -> RealSampler {
        RealSampler::with_bound(seed, DEFAULT_BOUND)
    }

    pub fn with_bound(seed: u64, bound: i64) -> RealSampler {
        RealSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            bound: bound.max(1),
        }
    }

    fn rational(&mut self) -> BigRational {
        let n = self.rng.gen_range(-self.bound..=self.bound);
        let mut d = 0;
        while d == 0 {
            d = self.rng.gen_range(-self.bound..=self.bound);
        }
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    pub fn value(&mut self, real: bool) -> GaussianRational {
        let re = self.rational();
        if real {
            GaussianRational::from_real(re)
        } else {
            GaussianRational::new(re, self.rational())
        }
    }

    /// Values for `vars` and their conjugates; entries of `fixed` are kept.
    pub fn draw(&mut self, vars: &BTreeSet<VarId>, fixed: &Assignment) -> Assignment {
        let mut all: BTreeSet<VarId> = vars.iter().flat_map(|v| [*v, v.conj()]).collect();
        all.extend(fixed.keys().copied());
        let mut out = Assignment::new();
        for v in all {
            if out.contains_key(&v) {
                continue;
            }
            let partner = v.conj();
            if let Some(x) = fixed.get(&v) {
                out.insert(v, x.clone());
                if !fixed.contains_key(&partner) {
                    out.insert(partner, x.conj());
                }
                continue;
            }
            if let Some(x) = fixed.get(&partner) {
                out.insert(v, x.conj());
                continue;
            }
            let val = self.value(partner == v);
            if partner != v {
                out.insert(partner, val.conj());
            }
            out.insert(v, val);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reality_consistent() {
        let mut s = RealSampler::new(7);
        let vars: BTreeSet<VarId> = [VarId::Z, VarId::U, VarId::jet(2, 1, 0), VarId::jet(1, 1, 3)]
            .into_iter()
            .collect();
        for _ in 0..20 {
            let p = s.draw(&vars, &Assignment::new());
            for (v, x) in &p {
                assert_eq!(&p[&v.conj()], &x.conj());
            }
            assert!(p[&VarId::U].is_real());
            assert!(p[&VarId::jet(1, 1, 3)].is_real());
        }
    }

    #[test]
    fn seeds_are_deterministic() {
        let vars: BTreeSet<VarId> = [VarId::Z].into_iter().collect();
        let a = RealSampler::new(3).draw(&vars, &Assignment::new());
        let b = RealSampler::new(3).draw(&vars, &Assignment::new());
        assert_eq!(a, b);
        assert_ne!(derive_seed(1, "a"), derive_seed(1, "b"));
    }
}
