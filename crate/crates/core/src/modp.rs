//! Arithmetic in F_p[i] for p = 2^61 - 1, a field since p = 3 mod 4.
//!
//! Used as a fast homomorphic image of Q(i) during probabilistic zero tests.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::scalar::GaussianRational;

pub const P: u64 = (1 << 61) - 1;

fn reduce(x: u128) -> u64 {
    let lo = (x as u64) & P;
    let hi = (x >> 61) as u64;
    let s = lo + (hi & P) + ((hi >> 61) & P);
    let s = (s & P) + (s >> 61);
    if s >= P {
        s - P
    } else {
        s
    }
}

fn add(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= P {
        s - P
    } else {
        s
    }
}

fn sub(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + P - b
    }
}

fn mul(a: u64, b: u64) -> u64 {
    reduce(a as u128 * b as u128)
}

fn pow(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul(r, a);
        }
        a = mul(a, a);
        e >>= 1;
    }
    r
}

fn inv(a: u64) -> Option<u64> {
    (a != 0).then(|| pow(a, P - 2))
}

fn from_bigint(n: &BigInt) -> u64 {
    let m = n.mod_floor(&BigInt::from(P));
    m.to_u64().expect("residue fits in u64")
}

fn from_rational(q: &BigRational) -> Option<u64> {
    Some(mul(from_bigint(q.numer()), inv(from_bigint(q.denom()))?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Fp2 {
    re: u64,
    im: u64,
}

impl Fp2 {
    pub const ZERO: Fp2 = Fp2 { re: 0, im: 0 };
    pub const ONE: Fp2 = Fp2 { re: 1, im: 0 };

    /// The image of `x`, or `None` when a denominator vanishes mod p.
    pub fn reduce(x: &GaussianRational) -> Option<Fp2> {
        Some(Fp2 {
            re: from_rational(&x.re)?,
            im: from_rational(&x.im)?,
        })
    }

    pub fn is_zero(self) -> bool {
        self.re == 0 && self.im == 0
    }

    pub fn inv(self) -> Option<Fp2> {
        let n = inv(add(mul(self.re, self.re), mul(self.im, self.im)))?;
        Some(Fp2 {
            re: mul(self.re, n),
            im: mul(sub(0, self.im), n),
        })
    }

    pub fn pow(self, mut e: u32) -> Fp2 {
        let (mut a, mut r) = (self, Fp2::ONE);
        while e > 0 {
            if e & 1 == 1 {
                r = r * a;
            }
            a = a * a;
            e >>= 1;
        }
        r
    }
}

impl Add for Fp2 {
    type Output = Fp2;
    fn add(self, o: Fp2) -> Fp2 {
        Fp2 {
            re: add(self.re, o.re),
            im: add(self.im, o.im),
        }
    }
}

impl Sub for Fp2 {
    type Output = Fp2;
    fn sub(self, o: Fp2) -> Fp2 {
        Fp2 {
            re: sub(self.re, o.re),
            im: sub(self.im, o.im),
        }
    }
}

impl Neg for Fp2 {
    type Output = Fp2;
    fn neg(self) -> Fp2 {
        Fp2::ZERO - self
    }
}

impl Mul for Fp2 {
    type Output = Fp2;
    fn mul(self, o: Fp2) -> Fp2 {
        Fp2 {
            re: sub(mul(self.re, o.re), mul(self.im, o.im)),
            im: add(mul(self.re, o.im), mul(self.im, o.re)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gq(a: i64, b: i64, c: i64, d: i64) -> GaussianRational {
        GaussianRational::from_parts(a, b, c, d)
    }

    proptest! {
        #[test]
        fn reduction_is_a_ring_homomorphism(
            a in -97i64..97, b in 1i64..97, c in -97i64..97, d in 1i64..97,
            e in -97i64..97, f in 1i64..97, g in -97i64..97, h in 1i64..97,
        ) {
            let (x, y) = (gq(a, b, c, d), gq(e, f, g, h));
            let (fx, fy) = (Fp2::reduce(&x).unwrap(), Fp2::reduce(&y).unwrap());
            prop_assert_eq!(Fp2::reduce(&(&x + &y)).unwrap(), fx + fy);
            prop_assert_eq!(Fp2::reduce(&(&x * &y)).unwrap(), fx * fy);
            prop_assert_eq!(Fp2::reduce(&(&x - &y)).unwrap(), fx - fy);
            if let Some(q) = x.checked_div(&y) {
                prop_assert_eq!(Fp2::reduce(&q).unwrap(), fx * fy.inv().unwrap());
            }
        }
    }

    #[test]
    fn i_squares_to_minus_one() {
        let i = Fp2::reduce(&GaussianRational::i()).unwrap();
        assert_eq!(i * i, -Fp2::ONE);
        assert_eq!(reduce((P as u128) * (P as u128)), 0);
    }
}
