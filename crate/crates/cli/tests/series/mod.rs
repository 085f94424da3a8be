//! Truncated Taylor series in `(z - z0, zb - zb0, u - u0)` with exact
//! coefficients, used to evaluate invariants without the jet calculus.

use std::collections::HashMap;

use cr_core::scalar::GaussianRational as Q;

type Exp = (u32, u32, u32);

#[derive(Clone, Debug)]
pub struct Series {
    /// Coefficients are exact up to this total degree.
    pub order: u32,
    c: HashMap<Exp, Q>,
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, j| acc * (n - j) as i64 / (j + 1) as i64)
}

impl Series {
    fn new(order: u32) -> Series {
        Series { order, c: HashMap::new() }
    }

    pub fn constant(x: Q, order: u32) -> Series {
        let mut s = Series::new(order);
        s.c.insert((0, 0, 0), x);
        s
    }

    fn put(&mut self, e: Exp, x: Q) {
        if e.0 + e.1 + e.2 > self.order || x.is_zero() {
            return;
        }
        let v = self.c.remove(&e).map(|o| &o + &x).unwrap_or(x);
        if !v.is_zero() {
            self.c.insert(e, v);
        }
    }

    /// A polynomial `sum k z^a zb^b u^c` expanded around `(z0, zb0, u0)`.
    pub fn polynomial(terms: &[(Q, Exp)], at: (&Q, &Q, &Q), order: u32) -> Series {
        let mut s = Series::new(order);
        for (k, (a, b, c)) in terms {
            for i in 0..=*a {
                for j in 0..=*b {
                    for l in 0..=*c {
                        let coef = Q::from_int(binomial(*a, i) * binomial(*b, j) * binomial(*c, l));
                        let x = &(&(&coef * k) * &at.0.pow(a - i)) * &(&at.1.pow(b - j) * &at.2.pow(c - l));
                        s.put((i, j, l), x);
                    }
                }
            }
        }
        s
    }

    pub fn value(&self) -> Q {
        self.c.get(&(0, 0, 0)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, o: &Series) -> Series {
        let mut s = Series::new(self.order.min(o.order));
        for (e, x) in self.c.iter().chain(o.c.iter()) {
            s.put(*e, x.clone());
        }
        s
    }

    pub fn scale(&self, k: &Q) -> Series {
        let mut s = Series::new(self.order);
        for (e, x) in &self.c {
            s.put(*e, k * x);
        }
        s
    }

    pub fn sub(&self, o: &Series) -> Series {
        self.add(&o.scale(&Q::from_int(-1)))
    }

    pub fn mul(&self, o: &Series) -> Series {
        let mut s = Series::new(self.order.min(o.order));
        for (e, x) in &self.c {
            for (f, y) in &o.c {
                s.put((e.0 + f.0, e.1 + f.1, e.2 + f.2), x * y);
            }
        }
        s
    }

    /// `1/f` from the geometric series in `f - f(0)`.
    pub fn inv(&self) -> Series {
        let c0 = self.value();
        let c0i = c0.inv().expect("nonzero constant term");
        let mut rest = self.clone();
        rest.c.remove(&(0, 0, 0));
        let r = rest.scale(&(-&c0i));
        let mut acc = Series::constant(Q::one(), self.order);
        let mut pow = Series::constant(Q::one(), self.order);
        for _ in 0..self.order {
            pow = pow.mul(&r);
            acc = acc.add(&pow);
        }
        acc.scale(&c0i)
    }

    pub fn div(&self, o: &Series) -> Series {
        self.mul(&o.inv())
    }

    /// Partial derivative in variable 0 (z), 1 (zb) or 2 (u).
    pub fn d(&self, k: usize) -> Series {
        let mut s = Series::new(self.order.saturating_sub(1));
        for (e, x) in &self.c {
            let mut f = [e.0, e.1, e.2];
            if f[k] == 0 {
                continue;
            }
            let m = Q::from_int(f[k] as i64);
            f[k] -= 1;
            s.put((f[0], f[1], f[2]), &m * x);
        }
        s
    }

    /// The conjugate function, for a base point with `zb0 = conj(z0)` and real `u0`.
    pub fn conj(&self) -> Series {
        let mut s = Series::new(self.order);
        for (e, x) in &self.c {
            s.put((e.1, e.0, e.2), x.conj());
        }
        s
    }
}

/// The CR data of a graph, computed from its Taylor series.
pub struct Graph {
    pub a: Series,
    pub abar: Series,
    pub ell: Series,
    pub p: Series,
    pub pbar: Series,
}

impl Graph {
    pub fn new(phi: &Series) -> Graph {
        let i = Series::constant(Q::i(), phi.order);
        let one = Series::constant(Q::one(), phi.order);
        let a = i.mul(&phi.d(0)).div(&one.sub(&i.mul(&phi.d(2))));
        let abar = a.conj();
        let ell = i.mul(&abar.d(0).add(&a.mul(&abar.d(2))).sub(&a.d(1)).sub(&abar.mul(&a.d(2))));
        let p = ell.d(0).sub(&ell.mul(&a.d(2))).add(&a.mul(&ell.d(2))).div(&ell);
        let pbar = p.conj();
        Graph { a, abar, ell, p, pbar }
    }

    pub fn l(&self, f: &Series) -> Series {
        f.d(0).add(&self.a.mul(&f.d(2)))
    }

    pub fn lb(&self, f: &Series) -> Series {
        f.d(1).add(&self.abar.mul(&f.d(2)))
    }

    /// The six-term essential invariant at `c = cb = 1`.
    pub fn j(&self) -> Series {
        let pb = &self.pbar;
        let r = |n, d| Q::from_ratio(n, d);
        let lpb = self.l(pb);
        let lbpb = self.lb(pb);
        [
            self.lb(&self.l(&lbpb)).scale(&r(-1, 3)),
            self.l(&lbpb).mul(pb).scale(&r(2, 3)),
            self.lb(&self.lb(&lpb)).scale(&r(1, 2)),
            self.lb(&lpb).mul(pb).scale(&r(-7, 6)),
            lpb.mul(&lbpb).scale(&r(-1, 6)),
            lpb.mul(&pb.mul(pb)).scale(&r(1, 3)),
        ]
        .iter()
        .fold(Series::constant(Q::zero(), 0), |acc, t| acc.add(t))
    }
}
