//! Differential forms of degree at most 3 over the coordinates of a stage,
//! the exterior derivative, and change of basis to the lifted coframe.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::eval::Program;
use crate::expr::{vars_of, Expr};
use crate::invariants::{
    compute_j, compute_tfrak, compute_w, delta_coefficients, first_torsions, tfrak_from, CrStructure, GroupParams,
};
use crate::jet::{JetContext, VectorField};
use crate::report::{Check, SuiteReport};
use crate::sample::{derive_seed, RealSampler};
use crate::scalar::GaussianRational;
use crate::suites::{Suite, SuiteConfig};
use crate::var::{GroupVar, VarId};
use crate::zero::ZeroTester;

/// A named batch of residuals that must all vanish.
type Group = (String, Vec<(String, Expr)>);

pub const MAX_DEGREE: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Coordinate,
    Lifted,
}

/// A form `sum_I f_I e_I`, where `I` is a set of basis indices stored as a bit
/// mask and `e_I` the wedge of the basis elements in increasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    degree: usize,
    basis: Basis,
    terms: BTreeMap<u8, Expr>,
}

/// Sign of moving basis element `j` in front of the set `mask` into sorted position.
fn insert_sign(j: u32, mask: u8) -> bool {
    (mask & ((1u8 << j) - 1)).count_ones() % 2 == 1
}

/// Sign of `e_A ^ e_B` relative to `e_{A u B}`; `true` means negative.
fn merge_sign(a: u8, b: u8) -> bool {
    let mut inversions = 0;
    for i in 0..8 {
        if a & (1 << i) != 0 {
            inversions += (b & ((1u8 << i).wrapping_sub(1))).count_ones();
        }
    }
    inversions % 2 == 1
}

pub fn mask_indices(mask: u8) -> Vec<usize> {
    (0..8).filter(|i| mask & (1 << i) != 0).collect()
}

fn mask_of(ix: &[usize]) -> u8 {
    ix.iter().fold(0u8, |m, &i| m | (1 << i))
}

impl Form {
    pub fn zero(degree: usize, basis: Basis) -> Form {
        Form {
            degree,
            basis,
            terms: BTreeMap::new(),
        }
    }

    pub fn scalar(f: Expr, basis: Basis) -> Form {
        let mut w = Form::zero(0, basis);
        w.push(0, f);
        w
    }

    /// The basis element `e_i`.
    pub fn basis_element(i: usize, basis: Basis) -> Form {
        Form::one_form(basis, &[(i, Expr::one())])
    }

    pub fn one_form(basis: Basis, coefs: &[(usize, Expr)]) -> Form {
        let mut w = Form::zero(1, basis);
        for (i, c) in coefs {
            w.push(1 << i, c.clone());
        }
        w
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    fn push(&mut self, mask: u8, c: Expr) {
        if c.is_zero() {
            return;
        }
        let e = match self.terms.remove(&mask) {
            Some(old) => old + c,
            None => c,
        };
        if !e.is_zero() {
            self.terms.insert(mask, e);
        }
    }

    /// Coefficient of `e_I`, with `I` given in any order.
    pub fn coef(&self, ix: &[usize]) -> Expr {
        let mut sorted = ix.to_vec();
        let mut neg = false;
        for a in 0..sorted.len() {
            for b in 0..sorted.len() - 1 - a {
                if sorted[b] > sorted[b + 1] {
                    sorted.swap(b, b + 1);
                    neg = !neg;
                }
            }
        }
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Expr::zero();
        }
        let c = self.terms.get(&mask_of(&sorted)).cloned().unwrap_or_else(Expr::zero);
        if neg {
            -c
        } else {
            c
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (u8, &Expr)> {
        self.terms.iter().map(|(m, e)| (*m, e))
    }

    pub fn is_structurally_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn same_shape(&self, o: &Form) -> Result<()> {
        if self.basis != o.basis {
            return Err(Error::Invalid("forms are expressed in different bases".into()));
        }
        if self.degree != o.degree && !self.terms.is_empty() && !o.terms.is_empty() {
            return Err(Error::Invalid("adding forms of different degree".into()));
        }
        Ok(())
    }

    pub fn add(&self, o: &Form) -> Result<Form> {
        self.same_shape(o)?;
        let mut out = self.clone();
        if out.terms.is_empty() {
            out.degree = o.degree;
        }
        for (m, c) in &o.terms {
            out.push(*m, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Form) -> Result<Form> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Form {
        self.scale(&Expr::int(-1))
    }

    pub fn scale(&self, k: &Expr) -> Form {
        let mut out = Form::zero(self.degree, self.basis);
        for (m, c) in &self.terms {
            out.push(*m, k * c);
        }
        out
    }

    pub fn map_coefs(&self, f: impl Fn(&Expr) -> Expr) -> Form {
        let mut out = Form::zero(self.degree, self.basis);
        for (m, c) in &self.terms {
            out.push(*m, f(c));
        }
        out
    }

    pub fn wedge(&self, o: &Form) -> Result<Form> {
        if self.basis != o.basis {
            return Err(Error::Invalid("forms are expressed in different bases".into()));
        }
        let degree = self.degree + o.degree;
        if degree > MAX_DEGREE {
            return Err(Error::DegreeTooHigh(degree));
        }
        let mut out = Form::zero(degree, self.basis);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                if ma & mb != 0 {
                    continue;
                }
                let c = ca * cb;
                out.push(ma | mb, if merge_sign(*ma, *mb) { -c } else { c });
            }
        }
        Ok(out)
    }

    /// Contract a coordinate 1-form with a vector field on the base `(z, zb, u)`.
    pub fn pair(&self, x: &VectorField) -> Result<Expr> {
        if self.degree != 1 || self.basis != Basis::Coordinate {
            return Err(Error::Invalid("pairing needs a coordinate 1-form".into()));
        }
        let comps = [&x.z, &x.zb, &x.u];
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let i = m.trailing_zeros() as usize;
            if i >= 3 {
                return Err(Error::Invalid("pairing needs a form on the base".into()));
            }
            terms.push(c * comps[i]);
        }
        Ok(Expr::add_all(terms))
    }

    /// Every coefficient, labelled with its basis indices.
    pub fn components(&self, names: &[&str]) -> Vec<(String, Expr)> {
        self.terms
            .iter()
            .map(|(m, c)| {
                let label: Vec<&str> = mask_indices(*m).into_iter().map(|i| names[i]).collect();
                (label.join("^"), c.clone())
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StageKind {
    Initial,
    Lifted,
    Prolonged,
    Final,
}

/// A coframe over a list of coordinates, together with the stage's group parameters.
pub struct CoframeStage {
    pub kind: StageKind,
    pub coords: Vec<VarId>,
    /// Symbols that are constants at this stage.
    pub params: Vec<VarId>,
    pub names: Vec<&'static str>,
    pub coframe: Vec<Form>,
    pub gp: GroupParams,
    ctx: JetContext,
    seed: u64,
    inverse: OnceLock<std::result::Result<Vec<Vec<Expr>>, Error>>,
}

const BASE: [VarId; 3] = [VarId::Z, VarId::ZB, VarId::U];
const FIBER: [GroupVar; 4] = [GroupVar::B, GroupVar::Bb, GroupVar::C, GroupVar::Cb];

fn coords_for(kind: StageKind) -> Vec<VarId> {
    let mut v = BASE.to_vec();
    if kind != StageKind::Initial {
        v.extend(FIBER.iter().map(|g| VarId::Group(*g)));
    }
    if kind == StageKind::Final {
        v.push(VarId::Group(GroupVar::S));
    }
    v
}

pub const COORD_NAMES: [&str; 8] = ["dz", "dzb", "du", "db", "dbb", "dc", "dcb", "ds"];

fn dx(i: usize) -> Form {
    Form::basis_element(i, Basis::Coordinate)
}

fn c1(coefs: &[(usize, Expr)]) -> Form {
    Form::one_form(Basis::Coordinate, coefs)
}

/// Sum of 2-forms; each entry is a coefficient times a wedge of 1-forms.
fn sum(parts: Vec<Form>) -> Result<Form> {
    let mut acc: Option<Form> = None;
    for p in parts {
        acc = Some(match acc {
            None => p,
            Some(a) => a.add(&p)?,
        });
    }
    Ok(acc.unwrap_or_else(|| Form::zero(2, Basis::Coordinate)))
}

fn w(a: &Form, b: &Form) -> Result<Form> {
    a.wedge(b)
}

impl CoframeStage {
    fn build(
        kind: StageKind,
        cr: &CrStructure,
        gp: GroupParams,
        params: Vec<VarId>,
        names: Vec<&'static str>,
        coframe: Vec<Form>,
    ) -> CoframeStage {
        CoframeStage {
            kind,
            coords: coords_for(kind),
            params,
            names,
            coframe,
            gp,
            ctx: cr.ctx().clone(),
            seed: 0x5eed,
            inverse: OnceLock::new(),
        }
    }

    /// `rho0 = (du - A dz - Ab dzb)/ell`, `zeta0 = dz`, `zetabar0 = dzb`.
    pub fn initial(cr: &CrStructure) -> CoframeStage {
        let ell = cr.ell();
        let rho0 = c1(&[(0, -(cr.a() / ell)), (1, -(cr.a().conj() / ell)), (2, 1 / ell)]);
        CoframeStage::build(
            StageKind::Initial,
            cr,
            GroupParams::symbolic(),
            Vec::new(),
            vec!["rho0", "zeta0", "zetabar0"],
            vec![rho0, dx(0), dx(1)],
        )
    }

    /// The lifted coframe with `a = c cb` and the Maurer-Cartan forms of the group.
    pub fn lifted(cr: &CrStructure) -> CoframeStage {
        let gp = GroupParams::symbolic();
        let forms = lifted_forms(cr, &gp);
        CoframeStage::build(
            StageKind::Lifted,
            cr,
            gp,
            Vec::new(),
            vec!["rho", "zeta", "zetabar", "alpha", "beta", "alphabar", "betabar"],
            forms.to_vec(),
        )
    }

    /// After absorption: `alpha = alpha0 + s rho`, `beta = beta0 + r rho + s zeta`,
    /// with `s`, `r` (and their conjugates) constant parameters.
    pub fn prolonged(cr: &CrStructure, s: Expr, r: Expr) -> CoframeStage {
        let gp = GroupParams::symbolic();
        let [rho, zeta, zetabar, alpha0, beta0, alpha0b, beta0b] = absorbed_forms(cr, &gp);
        let (sb, rb) = (s.conj(), r.conj());
        let alpha = alpha0.add(&rho.scale(&s)).unwrap();
        let beta = beta0.add(&rho.scale(&r)).unwrap().add(&zeta.scale(&s)).unwrap();
        let alphab = alpha0b.add(&rho.scale(&sb)).unwrap();
        let betab = beta0b.add(&rho.scale(&rb)).unwrap().add(&zetabar.scale(&sb)).unwrap();
        let mut params: Vec<VarId> = Vec::new();
        for e in [&s, &r] {
            params.extend(e.vars());
            params.extend(e.conj().vars());
        }
        CoframeStage::build(
            StageKind::Prolonged,
            cr,
            gp,
            params,
            vec!["rho", "zeta", "zetabar", "alpha", "beta", "alphabar", "betabar"],
            vec![rho, zeta, zetabar, alpha, beta, alphab, betab],
        )
    }

    /// The final coframe over `(z, zb, u, b, bb, c, cb, s)` with `sb` and `r` bound.
    pub fn final_stage(cr: &CrStructure) -> Result<CoframeStage> {
        let gp = GroupParams::symbolic().bind_sbar(cr)?.bind_r(cr)?;
        let [rho, zeta, zetabar, alpha0, beta0, alpha0b, beta0b] = absorbed_forms(cr, &gp);
        let (s, sb, r, rb) = (&gp.s, &gp.sb, &gp.r, &gp.rb);
        let alpha = alpha0.add(&rho.scale(s))?;
        let alphat = alpha0b.add(&rho.scale(sb))?;
        let beta = beta0.add(&rho.scale(r))?.add(&zeta.scale(s))?;
        let betat = beta0b.add(&rho.scale(rb))?.add(&zetabar.scale(sb))?;
        let dc = delta_coefficients(cr, &gp)?;
        let (b, bb, c, cb) = (&gp.b, &gp.bb, &gp.c, &gp.cb);
        let i = Expr::i();
        let beta_coef = -(cr.p() / c + Expr::imag(2, 1) * bb / (c * cb));
        let betat_coef = -(&i * b / (c * cb));
        let delta = sum(vec![
            dx(7),
            rho.scale(&dc.rho),
            zeta.scale(&dc.zeta),
            zetabar.scale(&dc.zetabar),
            alpha.scale(s),
            beta.scale(&beta_coef),
            alphat.scale(s),
            betat.scale(&betat_coef),
        ])?;
        Ok(CoframeStage::build(
            StageKind::Final,
            cr,
            gp,
            Vec::new(),
            vec!["rho", "zeta", "zetabar", "alpha", "beta", "alphat", "betat", "delta"],
            vec![rho, zeta, zetabar, alpha, beta, alphat, betat, delta],
        ))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| *n == name)
            .ok_or_else(|| Error::Invalid(format!("no form `{}` at this stage", name)))
    }

    pub fn form(&self, name: &str) -> Result<&Form> {
        Ok(&self.coframe[self.index(name)?])
    }

    fn allowed(&self, v: VarId) -> bool {
        match v {
            VarId::Base(_) | VarId::Jet(_) => true,
            VarId::Group(_) => self.coords.contains(&v) || self.params.contains(&v),
        }
    }

    fn partial(&self, f: &Expr, i: usize) -> Result<Expr> {
        match self.coords[i] {
            VarId::Base(b) => self.ctx.total_derivative(f, b),
            VarId::Group(g) => self.ctx.group_derivative(f, g),
            VarId::Jet(_) => unreachable!("jets are not stage coordinates"),
        }
    }

    /// Exterior derivative of a coordinate-basis form.
    pub fn d(&self, w: &Form) -> Result<Form> {
        if w.basis != Basis::Coordinate {
            return Err(Error::Invalid("exterior derivative needs the coordinate basis".into()));
        }
        if w.degree + 1 > MAX_DEGREE {
            return Err(Error::DegreeTooHigh(w.degree + 1));
        }
        let coefs: Vec<Expr> = w.terms.values().cloned().collect();
        if let Some(v) = vars_of(&coefs).into_iter().find(|v| !self.allowed(*v)) {
            return Err(Error::UnrewritableCoefficient(v));
        }
        let mut out = Form::zero(w.degree + 1, Basis::Coordinate);
        for (m, f) in &w.terms {
            for j in 0..self.dim() {
                if m & (1 << j) != 0 {
                    continue;
                }
                let df = self.partial(f, j)?;
                if df.is_zero() {
                    continue;
                }
                out.push(m | (1 << j), if insert_sign(j as u32, *m) { -df } else { df });
            }
        }
        Ok(out)
    }

    /// Matrix `M` with `theta_k = sum_i M[k][i] dx_i`.
    pub fn matrix(&self) -> Vec<Vec<Expr>> {
        self.coframe
            .iter()
            .map(|th| (0..self.dim()).map(|i| th.coef(&[i])).collect())
            .collect()
    }

    /// `N = M^-1`, so that `dx_i = sum_k N[i][k] theta_k`.
    ///
    /// Gauss-Jordan elimination over expressions; pivots are chosen nonzero at
    /// one random admissible point, so a singular matrix is reported as such.
    pub fn inverse(&self) -> Result<&Vec<Vec<Expr>>> {
        self.inverse
            .get_or_init(|| self.compute_inverse())
            .as_ref()
            .map_err(|e| e.clone())
    }

    fn compute_inverse(&self) -> Result<Vec<Vec<Expr>>> {
        let n = self.dim();
        let m = self.matrix();
        let entries: Vec<Expr> = m.iter().flatten().cloned().collect();
        let gp = GroupParams::symbolic();
        let tester = ZeroTester::new(1, self.seed).with_exclusions(vec![gp.c.clone(), gp.cb.clone()]);
        let mut all = tester.exclusions.clone();
        all.extend(entries.iter().cloned());
        let program = Program::new(&all);
        let mut sampler = RealSampler::new(derive_seed(self.seed, "pivot"));
        let (_, vals) = tester.admissible_point(&mut sampler, &vars_of(&all), &program)?;
        let mut num: Vec<Vec<GaussianRational>> = (0..n).map(|k| vals[k * n..(k + 1) * n].to_vec()).collect();
        let mut a: Vec<Vec<Expr>> = m;
        let mut inv: Vec<Vec<Expr>> = (0..n)
            .map(|k| (0..n).map(|j| if j == k { Expr::one() } else { Expr::zero() }).collect())
            .collect();
        let mut ninv: Vec<Vec<GaussianRational>> = (0..n)
            .map(|k| {
                (0..n)
                    .map(|j| if j == k { GaussianRational::one() } else { GaussianRational::zero() })
                    .collect()
            })
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&r| !num[r][col].is_zero()).ok_or(Error::SingularFrame)?;
            a.swap(col, piv);
            inv.swap(col, piv);
            num.swap(col, piv);
            ninv.swap(col, piv);
            let p = a[col][col].clone();
            let pv = num[col][col].clone();
            let pinv = pv.inv().ok_or(Error::SingularFrame)?;
            if !p.is_one() {
                for j in 0..n {
                    a[col][j] = &a[col][j] / &p;
                    inv[col][j] = &inv[col][j] / &p;
                    num[col][j] = &num[col][j] * &pinv;
                    ninv[col][j] = &ninv[col][j] * &pinv;
                }
            }
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                let fv = num[r][col].clone();
                for j in 0..n {
                    if !a[col][j].is_zero() {
                        a[r][j] = &a[r][j] - &f * &a[col][j];
                    }
                    if !inv[col][j].is_zero() {
                        inv[r][j] = &inv[r][j] - &f * &inv[col][j];
                    }
                    num[r][j] = &num[r][j] - &(&fv * &num[col][j]);
                    ninv[r][j] = &ninv[r][j] - &(&fv * &ninv[col][j]);
                }
            }
        }
        // `inv` now holds M^-1 with rows indexed by coordinates.
        Ok(inv)
    }

    /// Re-express a coordinate-basis form over the coframe.
    pub fn to_lifted_basis(&self, w: &Form) -> Result<Form> {
        if w.basis != Basis::Coordinate {
            return Err(Error::Invalid("expected a coordinate-basis form".into()));
        }
        let n = self.inverse()?;
        Ok(change_basis(w, n, Basis::Lifted, self.dim()))
    }

    /// Re-express a coframe-basis form over the coordinate differentials.
    pub fn to_coordinate_basis(&self, w: &Form) -> Result<Form> {
        if w.basis != Basis::Lifted {
            return Err(Error::Invalid("expected a lifted-basis form".into()));
        }
        let m = self.matrix();
        let mt: Vec<Vec<Expr>> = (0..self.dim())
            .map(|k| (0..self.dim()).map(|i| m[k][i].clone()).collect())
            .collect();
        Ok(change_basis(w, &mt, Basis::Coordinate, self.dim()))
    }

    /// Coordinate conjugation, for stages whose coordinates are closed under it.
    pub fn conj(&self, w: &Form) -> Result<Form> {
        if w.basis != Basis::Coordinate {
            return Err(Error::Invalid("conjugation needs the coordinate basis".into()));
        }
        let perm: Vec<Option<usize>> = self
            .coords
            .iter()
            .map(|v| self.coords.iter().position(|x| *x == v.conj()))
            .collect();
        let unpaired = || Error::Invalid("stage coordinates are not closed under conjugation".into());
        let mut out = Form::zero(w.degree, w.basis);
        for (m, c) in &w.terms {
            let ix: Vec<usize> = mask_indices(*m)
                .into_iter()
                .map(|i| perm[i].ok_or_else(unpaired))
                .collect::<Result<_>>()?;
            let mut sorted = ix.clone();
            sorted.sort_unstable();
            let mut neg = false;
            for a in 0..ix.len() {
                for b in a + 1..ix.len() {
                    if ix[a] > ix[b] {
                        neg = !neg;
                    }
                }
            }
            let cc = self.gp.conj(c);
            out.push(mask_of(&sorted), if neg { -cc } else { cc });
        }
        Ok(out)
    }
}

/// `w = sum_I w_I f_I` where `f_i = sum_k t[i][k] g_k`; returns coefficients over `g`.
fn change_basis(w: &Form, t: &[Vec<Expr>], target: Basis, n: usize) -> Form {
    let mut out = Form::zero(w.degree, target);
    let subsets: Vec<Vec<usize>> = subsets(n, w.degree);
    for (m, c) in &w.terms {
        let rows = mask_indices(*m);
        for cols in &subsets {
            let det = minor(t, &rows, cols);
            if !det.is_zero() {
                out.push(mask_of(cols), c * &det);
            }
        }
    }
    out
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for m in 0u32..(1 << n) {
        if m.count_ones() as usize == k {
            out.push((0..n).filter(|i| m & (1 << i) != 0).collect());
        }
    }
    out
}

fn minor(t: &[Vec<Expr>], rows: &[usize], cols: &[usize]) -> Expr {
    let e = |i: usize, j: usize| &t[rows[i]][cols[j]];
    match rows.len() {
        0 => Expr::one(),
        1 => e(0, 0).clone(),
        2 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
        3 => Expr::add_all([
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1)),
            -(e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))),
            e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0)),
        ]),
        _ => unreachable!("degree is bounded by MAX_DEGREE"),
    }
}

/// `rho, zeta, zetabar, alpha, beta, alphabar, betabar` of the lifted stage, over seven coordinates.
fn lifted_forms(cr: &CrStructure, gp: &GroupParams) -> [Form; 7] {
    let ell = cr.ell();
    let rho0 = c1(&[(0, -(cr.a() / ell)), (1, -(cr.a().conj() / ell)), (2, 1 / ell)]);
    let (b, bb, c, cb) = (&gp.b, &gp.bb, &gp.c, &gp.cb);
    let rho = rho0.scale(&(c * cb));
    let zeta = rho0.scale(b).add(&dx(0).scale(c)).unwrap();
    let zetabar = rho0.scale(bb).add(&dx(1).scale(cb)).unwrap();
    let alpha = c1(&[(5, 1 / c)]);
    let alphab = c1(&[(6, 1 / cb)]);
    let beta = c1(&[(3, 1 / (c * cb)), (5, -(b / (c.square() * cb)))]);
    let betab = c1(&[(4, 1 / (c * cb)), (6, -(bb / (c * cb.square())))]);
    [rho, zeta, zetabar, alpha, beta, alphab, betab]
}

/// `rho, zeta, zetabar, alpha0, beta0, alpha0bar, beta0bar` over seven coordinates.
fn absorbed_forms(cr: &CrStructure, gp: &GroupParams) -> [Form; 7] {
    let [rho, zeta, zetabar, alpha, beta, _, _] = lifted_forms(cr, gp);
    let (p, pb) = (cr.p(), cr.pbar());
    let (b, bb, c, cb) = (&gp.b, &gp.bb, &gp.c, &gp.cb);
    let i = Expr::i();
    let a = c * cb;
    let alpha0 = sum(vec![
        alpha,
        zeta.scale(&(-((p * cb + Expr::imag(2, 1) * bb) / &a))),
        zetabar.scale(&(-(&i * b / &a))),
    ])
    .unwrap();
    let aa = a.square();
    let beta0 = sum(vec![
        beta,
        zeta.scale(&(-((p * b * cb + &i * b * bb) / &aa))),
        zetabar.scale(&(-((pb * b * c - &i * b.square()) / &aa))),
    ])
    .unwrap();
    let conj7 = |f: &Form| conj_seven(f);
    let alpha0b = conj7(&alpha0);
    let beta0b = conj7(&beta0);
    [rho, zeta, zetabar, alpha0, beta0, alpha0b, beta0b]
}

/// Conjugation on the seven coordinates `z, zb, u, b, bb, c, cb`.
fn conj_seven(f: &Form) -> Form {
    const PERM: [usize; 7] = [1, 0, 2, 4, 3, 6, 5];
    let mut out = Form::zero(f.degree, f.basis);
    for (m, c) in &f.terms {
        let ix: Vec<usize> = mask_indices(*m).into_iter().map(|i| PERM[i]).collect();
        let mut sorted = ix.clone();
        sorted.sort_unstable();
        let neg = (0..ix.len())
            .flat_map(|a| (a + 1..ix.len()).map(move |b| (a, b)))
            .filter(|&(a, b)| ix[a] > ix[b])
            .count()
            % 2
            == 1;
        out.push(mask_of(&sorted), if neg { -c.conj() } else { c.conj() });
    }
    out
}

/// Outcome of one structure equation: the residual `lhs - rhs` in coordinates.
pub struct Equation {
    pub name: String,
    pub residual: Form,
}

fn equation(_stage: &CoframeStage, name: &str, lhs: &Form, rhs: Form) -> Result<Equation> {
    Ok(Equation {
        name: name.to_string(),
        residual: lhs.sub(&rhs)?,
    })
}

/// The initial structure: `drho0 = P rho0^zeta0 + Pb rho0^zetabar0 + i zeta0^zetabar0`, `dzeta0 = dzetabar0 = 0`.
pub fn initial_equations(cr: &CrStructure) -> Result<(CoframeStage, Vec<Equation>)> {
    let st = CoframeStage::initial(cr);
    let (rho0, zeta0, zetab0) = (&st.coframe[0], &st.coframe[1], &st.coframe[2]);
    let rhs = sum(vec![
        w(rho0, zeta0)?.scale(cr.p()),
        w(rho0, zetab0)?.scale(cr.pbar()),
        w(zeta0, zetab0)?.scale(&Expr::i()),
    ])?;
    let eqs = vec![
        equation(&st, "drho0", &st.d(rho0)?, rhs)?,
        equation(&st, "dzeta0", &st.d(zeta0)?, Form::zero(2, Basis::Coordinate))?,
        equation(&st, "dzetabar0", &st.d(zetab0)?, Form::zero(2, Basis::Coordinate))?,
    ];
    Ok((st, eqs))
}

/// The lifted structure with the first-loop torsion coefficients.
pub fn lifted_equations(cr: &CrStructure) -> Result<(CoframeStage, Vec<Equation>)> {
    let st = CoframeStage::lifted(cr);
    let f = |n: &str| st.form(n).cloned();
    let (rho, zeta, zetab) = (f("rho")?, f("zeta")?, f("zetabar")?);
    let (alpha, beta, alphab, betab) = (f("alpha")?, f("beta")?, f("alphabar")?, f("betabar")?);
    let t = first_torsions(cr, &st.gp);
    let i = Expr::i();
    let drho = sum(vec![
        w(&alpha.add(&alphab)?, &rho)?,
        w(&rho, &zeta)?.scale(&t.u1),
        w(&rho, &zetab)?.scale(&t.u1.conj()),
        w(&zeta, &zetab)?.scale(&t.u2),
    ])?;
    let dzeta = sum(vec![
        w(&beta, &rho)?,
        w(&alpha, &zeta)?,
        w(&rho, &zeta)?.scale(&t.v1),
        w(&rho, &zetab)?.scale(&t.v2),
        w(&zeta, &zetab)?.scale(&t.v3),
    ])?;
    let dzetab = sum(vec![
        w(&betab, &rho)?,
        w(&alphab, &zetab)?,
        w(&rho, &zetab)?.scale(&t.v1.conj()),
        w(&rho, &zeta)?.scale(&t.v2.conj()),
        w(&zeta, &zetab)?.scale(&(-t.v3.conj())),
    ])?;
    let _ = i;
    let eqs = vec![
        equation(&st, "drho", &st.d(&rho)?, drho)?,
        equation(&st, "dzeta", &st.d(&zeta)?, dzeta)?,
        equation(&st, "dzetabar", &st.d(&zetab)?, dzetab)?,
    ];
    Ok((st, eqs))
}

/// The absorbed structure `drho = (alpha + alphabar)^rho + i zeta^zetabar`,
/// `dzeta = beta^rho + alpha^zeta`, and its conjugate.
pub fn absorbed_equations(st: &CoframeStage) -> Result<Vec<Equation>> {
    let f = |n: &str| st.form(n).cloned();
    let (rho, zeta, zetab) = (f("rho")?, f("zeta")?, f("zetabar")?);
    let (alpha, beta, alphab, betab) = (f("alpha")?, f("beta")?, f("alphabar")?, f("betabar")?);
    let drho = sum(vec![w(&alpha.add(&alphab)?, &rho)?, w(&zeta, &zetab)?.scale(&Expr::i())])?;
    let dzeta = sum(vec![w(&beta, &rho)?, w(&alpha, &zeta)?])?;
    let dzetab = sum(vec![w(&betab, &rho)?, w(&alphab, &zetab)?])?;
    Ok(vec![
        equation(st, "drho", &st.d(&rho)?, drho)?,
        equation(st, "dzeta", &st.d(&zeta)?, dzeta)?,
        equation(st, "dzetabar", &st.d(&zetab)?, dzetab)?,
    ])
}

/// `dalpha - (2i zeta^betabar + i zetabar^beta + W zeta^zetabar)`, which must be a multiple of `rho`.
pub fn dalpha_mod_rho(cr: &CrStructure, st: &CoframeStage) -> Result<Form> {
    let f = |n: &str| st.form(n).cloned();
    let (zeta, zetab) = (f("zeta")?, f("zetabar")?);
    let (alpha, beta, betab) = (f("alpha")?, f("beta")?, f("betabar")?);
    let wc = compute_w(cr, &st.gp)?;
    let rhs = sum(vec![
        w(&zeta, &betab)?.scale(&Expr::imag(2, 1)),
        w(&zetab, &beta)?.scale(&Expr::i()),
        w(&zeta, &zetab)?.scale(&wc),
    ])?;
    st.d(&alpha)?.sub(&rhs)
}

/// The eight equations of the final e-structure.
pub fn final_equations(cr: &CrStructure) -> Result<(CoframeStage, Vec<Equation>)> {
    let st = CoframeStage::final_stage(cr)?;
    let f = |n: &str| st.form(n).cloned();
    let (rho, zeta, zetab) = (f("rho")?, f("zeta")?, f("zetabar")?);
    let (alpha, beta, alphat, betat, delta) = (f("alpha")?, f("beta")?, f("alphat")?, f("betat")?, f("delta")?);
    let gp = &st.gp;
    let i = Expr::i();
    let j = compute_j(cr, gp)?;
    let jb = gp.conj(&j);
    let tf = tfrak_from(cr, gp, &jb)?;
    let tfb = gp.conj(&tf);
    let rhs = [
        sum(vec![w(&alpha, &rho)?, w(&alphat, &rho)?, w(&zeta, &zetab)?.scale(&i)])?,
        sum(vec![w(&beta, &rho)?, w(&alpha, &zeta)?])?,
        sum(vec![w(&betat, &rho)?, w(&alphat, &zetab)?])?,
        sum(vec![
            w(&delta, &rho)?,
            w(&zeta, &betat)?.scale(&Expr::imag(2, 1)),
            w(&zetab, &beta)?.scale(&i),
        ])?,
        sum(vec![w(&delta, &zeta)?, w(&beta, &alphat)?, w(&zetab, &rho)?.scale(&j)])?,
        sum(vec![
            w(&delta, &rho)?,
            w(&zetab, &beta)?.scale(&Expr::imag(-2, 1)),
            w(&zeta, &betat)?.scale(&(-&i)),
        ])?,
        sum(vec![w(&delta, &zetab)?, w(&betat, &alpha)?, w(&zeta, &rho)?.scale(&jb)])?,
        sum(vec![
            w(&delta, &alpha)?,
            w(&delta, &alphat)?,
            w(&beta, &betat)?.scale(&i),
            w(&rho, &zeta)?.scale(&tf),
            w(&rho, &zetab)?.scale(&tfb),
        ])?,
    ];
    let mut eqs = Vec::new();
    for (k, r) in rhs.into_iter().enumerate() {
        let name = format!("d{}", st.names[k]);
        eqs.push(equation(&st, &name, &st.d(&st.coframe[k])?, r)?);
    }
    Ok((st, eqs))
}

/// `drho0 = -(1/ell)(2/(1 + phi_u^2)) varrho` and the duality of coframe and frame.
pub fn varrho(cr: &CrStructure) -> Form {
    let ctx = cr.ctx();
    let (pz, pzb, pu) = (ctx.jet(1, 0, 0), ctx.jet(0, 1, 0), ctx.jet(0, 0, 1));
    let h = Expr::rat(1, 2);
    let ih = Expr::imag(1, 2);
    c1(&[
        (0, &ih * &pz - &h * &pz * &pu),
        (1, -(&ih * &pzb) - &h * &pzb * &pu),
        (2, -&h - &h * pu.square()),
    ])
}

fn stage_names(st: &CoframeStage) -> Vec<&'static str> {
    COORD_NAMES[..st.dim()].to_vec()
}

fn equation_groups(st: &CoframeStage, eqs: &[Equation]) -> Vec<Group> {
    let names = stage_names(st);
    eqs.iter()
        .map(|e| (e.name.clone(), e.residual.components(&names)))
        .collect()
}

fn d_squared_groups(st: &CoframeStage, which: &[&str]) -> Result<Vec<Group>> {
    let names = stage_names(st);
    let mut out = Vec::new();
    for n in which {
        let dd = st.d(&st.d(st.form(n)?)?)?;
        out.push((format!("d(d{}) = 0", n), dd.components(&names)));
    }
    Ok(out)
}

fn round_trip_groups(st: &CoframeStage) -> Result<Vec<Group>> {
    let n = st.dim();
    let names = stage_names(st);
    let one = Form::one_form(
        Basis::Coordinate,
        &(0..n).map(|i| (i, Expr::jet(i as u8, 1, 0) + Expr::int(i as i64 + 1))).collect::<Vec<_>>(),
    );
    let two = one.wedge(&Form::one_form(
        Basis::Coordinate,
        &(0..n).map(|i| (i, Expr::jet(0, i as u8, 1) - Expr::int(2))).collect::<Vec<_>>(),
    ))?;
    let mut out = Vec::new();
    for (label, f) in [("1-form", one), ("2-form", two)] {
        let back = st.to_coordinate_basis(&st.to_lifted_basis(&f)?)?;
        out.push((format!("basis round trip on a {}", label), back.sub(&f)?.components(&names)));
    }
    Ok(out)
}

/// Run a form-level suite and append its checks to `report`.
pub fn run_form_suite(suite: Suite, cr: &CrStructure, cfg: &SuiteConfig, report: &mut SuiteReport) -> Result<()> {
    let v = cfg.verifier(cr);
    let label = suite.name();
    let mut groups: Vec<Group> = Vec::new();
    match suite {
        Suite::Initial => {
            let (st, eqs) = initial_equations(cr)?;
            groups.extend(equation_groups(&st, &eqs));
            groups.extend(d_squared_groups(&st, &["rho0"])?);
            groups.extend(round_trip_groups(&st)?);
            invertible(&st, report);
        }
        Suite::RhoVarrho => groups.extend(rho_varrho_groups(cr)?),
        Suite::Lifted => {
            let (st, eqs) = lifted_equations(cr)?;
            groups.extend(equation_groups(&st, &eqs));
            groups.extend(d_squared_groups(&st, &["rho", "zeta", "alpha", "beta"])?);
            groups.extend(round_trip_groups(&st)?);
            invertible(&st, report);
            let init = CoframeStage::initial(cr);
            let rho0 = extend(&init.coframe[0]);
            let prod = st.to_lifted_basis(&rho0.wedge(&dx(0))?)?;
            let gp = &st.gp;
            let want = Form::basis_element(0, Basis::Lifted)
                .wedge(&Form::basis_element(1, Basis::Lifted))?
                .scale(&(1 / (&gp.c * &gp.cb * &gp.c)));
            groups.extend(conjugation_groups(
                &st,
                &[("rho", "rho"), ("zeta", "zetabar"), ("alpha", "alphabar"), ("beta", "betabar")],
            )?);
            groups.push((
                "rho0^zeta0 = rho^zeta/(a c)".into(),
                prod.sub(&want)?.components(&st.names),
            ));
        }
        Suite::Prolonged => {
            let absorbed = CoframeStage::prolonged(cr, Expr::zero(), Expr::zero());
            for e in absorbed_equations(&absorbed)? {
                groups.push((
                    format!("{} with alpha0, beta0", e.name),
                    e.residual.components(&stage_names(&absorbed)),
                ));
            }
            let gs = GroupParams::symbolic();
            let st = CoframeStage::prolonged(cr, gs.s.clone(), gs.r.clone());
            groups.extend(equation_groups(&st, &absorbed_equations(&st)?));
            let lifted = st.to_lifted_basis(&dalpha_mod_rho(cr, &st)?)?;
            let rest: Vec<(String, Expr)> = lifted
                .components(&st.names)
                .into_iter()
                .filter(|(n, _)| !n.split('^').any(|x| x == "rho"))
                .collect();
            groups.push(("dalpha modulo rho carries W".into(), rest));
            let dc = st.to_lifted_basis(&dx(5))?;
            let (p, b, bb, c, cb) = (cr.p(), &gs.b, &gs.bb, &gs.c, &gs.cb);
            let want = Form::one_form(
                Basis::Lifted,
                &[
                    (3, c.clone()),
                    (0, -(c * &gs.s)),
                    (1, (p * cb + Expr::imag(2, 1) * bb) / cb),
                    (2, Expr::i() * b / cb),
                ],
            );
            groups.push(("dc in the lifted coframe".into(), dc.sub(&want)?.components(&st.names)));
            groups.extend(d_squared_groups(&st, &["alpha", "beta"])?);
            invertible(&st, report);
        }
        Suite::Final => {
            let (st, eqs) = final_equations(cr)?;
            groups.extend(equation_groups(&st, &eqs));
            let names: Vec<&str> = st.names.clone();
            groups.extend(d_squared_groups(&st, &names)?);
            groups.extend(conjugation_groups(&st, &[("alpha", "alphat"), ("beta", "betat")])?);
        }
        Suite::Tfrak => {
            let (st, groups_t) = tfrak_groups(cr)?;
            groups.extend(groups_t);
            invertible(&st, report);
        }
        _ => return Err(Error::Invalid(format!("`{}` is not a form suite", suite.name()))),
    }
    v.grouped_checks(label, &groups, report)
}

/// `conj(a) = b` for each pair, with conjugation resolving bound parameters.
fn conjugation_groups(st: &CoframeStage, pairs: &[(&str, &str)]) -> Result<Vec<Group>> {
    let names = stage_names(st);
    pairs
        .iter()
        .map(|(a, b)| {
            let r = st.conj(st.form(a)?)?.sub(st.form(b)?)?;
            Ok((format!("conj({}) = {}", a, b), r.components(&names)))
        })
        .collect()
}

fn invertible(st: &CoframeStage, report: &mut SuiteReport) {
    let ok = st.inverse().is_ok();
    report.checks.push(Check::new(
        "change of basis is invertible",
        ok,
        "pointwise",
        Some(format!("{} x {}", st.dim(), st.dim())),
    ));
}

/// Embed a form on `(z, zb, u)` into a larger stage; indices are unchanged.
fn extend(f: &Form) -> Form {
    f.clone()
}

fn rho_varrho_groups(cr: &CrStructure) -> Result<Vec<Group>> {
    let st = CoframeStage::initial(cr);
    let names = stage_names(&st);
    let vr = varrho(cr);
    let pu = cr.ctx().jet(0, 0, 1);
    let k = Expr::int(2) / (cr.ell() * (1 + pu.square()));
    let prop = st.coframe[0].add(&vr.scale(&k))?;
    let vr_conj = st.conj(&vr)?;
    let frame = cr.frame();
    let fields = [("T", &frame.t), ("L", &frame.l), ("Lb", &frame.lbar)];
    let mut duality = Vec::new();
    for (k, name) in st.names.iter().enumerate() {
        for (j, (fname, x)) in fields.iter().enumerate() {
            let v = st.coframe[k].pair(x)?;
            let want = if j == k { Expr::one() } else { Expr::zero() };
            duality.push((format!("{}({})", name, fname), v - want));
        }
    }
    Ok(vec![
        ("rho0 + (1/ell)(2/(1 + phi_u^2)) varrho = 0".into(), prop.components(&names)),
        ("duality of coframe and frame".into(), duality),
        ("conj(varrho) = varrho".into(), vr_conj.sub(&vr)?.components(&names)),
        ("conj(rho0) = rho0".into(), st.conj(&st.coframe[0])?.sub(&st.coframe[0])?.components(&names)),
    ])
}

/// Read off `Tfrak` from `ddelta - delta^alpha - delta^alphat - i beta^betat`.
pub fn tfrak_groups(cr: &CrStructure) -> Result<(CoframeStage, Vec<Group>)> {
    let st = CoframeStage::final_stage(cr)?;
    let f = |n: &str| st.form(n).cloned();
    let (alpha, beta, alphat, betat, delta) = (f("alpha")?, f("beta")?, f("alphat")?, f("betat")?, f("delta")?);
    let rest = st.d(&delta)?.sub(&sum(vec![
        w(&delta, &alpha)?,
        w(&delta, &alphat)?,
        w(&beta, &betat)?.scale(&Expr::i()),
    ])?)?;
    let lifted = st.to_lifted_basis(&rest)?;
    let gp = &st.gp;
    let tf = compute_tfrak(cr, gp)?;
    let tfb = gp.conj(&tf);
    let (rho, zeta, zetab) = (st.index("rho")?, st.index("zeta")?, st.index("zetabar")?);
    let mut others = Vec::new();
    for (name, c) in lifted.components(&st.names) {
        if name == "rho^zeta" || name == "rho^zetabar" {
            continue;
        }
        others.push((name, c));
    }
    let groups = vec![
        (
            "rho^zeta coefficient of ddelta equals Tfrak".to_string(),
            vec![("rho^zeta".to_string(), lifted.coef(&[rho, zeta]) - &tf)],
        ),
        (
            "rho^zetabar coefficient of ddelta equals conj(Tfrak)".to_string(),
            vec![("rho^zetabar".to_string(), lifted.coef(&[rho, zetab]) - &tfb)],
        ),
        ("remaining coefficients of ddelta vanish".to_string(), others),
    ];
    Ok((st, groups))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(i: usize) -> Form {
        Form::basis_element(i, Basis::Coordinate)
    }

    #[test]
    fn wedge_is_antisymmetric() {
        let x = b(0).wedge(&b(2)).unwrap();
        let y = b(2).wedge(&b(0)).unwrap();
        assert_eq!(x, y.neg());
        assert!(b(1).wedge(&b(1)).unwrap().is_structurally_zero());
        assert_eq!(x.coef(&[2, 0]), Expr::int(-1));
    }

    #[test]
    fn degree_bound() {
        let t = b(0).wedge(&b(1)).unwrap().wedge(&b(2)).unwrap();
        assert!(matches!(t.wedge(&b(3)), Err(Error::DegreeTooHigh(4))));
    }

    #[test]
    fn d_of_coordinate_function() {
        let cr = CrStructure::generic().unwrap();
        let st = CoframeStage::initial(&cr);
        let f = Form::scalar(Expr::var(VarId::Z) * Expr::var(VarId::U), Basis::Coordinate);
        let df = st.d(&f).unwrap();
        assert_eq!(df.coef(&[0]), Expr::var(VarId::U));
        assert_eq!(df.coef(&[2]), Expr::var(VarId::Z));
        assert!(st.d(&df).unwrap().is_structurally_zero());
    }

    #[test]
    fn foreign_symbols_are_rejected() {
        let cr = CrStructure::generic().unwrap();
        let st = CoframeStage::initial(&cr);
        let f = Form::scalar(Expr::var(VarId::Group(GroupVar::S)), Basis::Coordinate);
        assert!(matches!(st.d(&f), Err(Error::UnrewritableCoefficient(_))));
    }

    #[test]
    fn base_derivative_is_total() {
        use crate::var::BaseVar;
        let ctx = JetContext::default();
        let e = Expr::jet(0, 0, 0);
        assert_eq!(ctx.total_derivative(&e, BaseVar::Z).unwrap(), Expr::jet(1, 0, 0));
    }
}
