//! Printing expressions as plain text, TeX, or a JSON tree.

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::expr::{post_order, Expr, ExprKind};
use crate::poly::{Canonical, Poly};
use crate::scalar::GaussianRational;

/// Expressions whose unfolded tree exceeds this many nodes are not rendered.
pub const RENDER_LIMIT: u64 = 400_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Plain,
    JsonTree,
    Tex,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Format> {
        match s {
            "plain" => Ok(Format::Plain),
            "json-tree" | "json" => Ok(Format::JsonTree),
            "tex" => Ok(Format::Tex),
            other => Err(Error::Invalid(format!("unknown format `{}`", other))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Prec {
    Sum,
    Neg,
    Product,
    Power,
    Atom,
}

struct Piece {
    text: String,
    prec: Prec,
}

fn wrap(p: &Piece, min: Prec, tex: bool) -> String {
    if p.prec < min {
        if tex {
            format!("\\left({}\\right)", p.text)
        } else {
            format!("({})", p.text)
        }
    } else {
        p.text.clone()
    }
}

fn const_piece(c: &GaussianRational, tex: bool) -> Piece {
    let text = if tex { const_tex(c) } else { c.to_string() };
    let prec = if !c.is_simple() {
        Prec::Sum
    } else if c.prints_negative() {
        Prec::Neg
    } else if text.contains('/') || text.contains('*') || text.contains("frac") {
        Prec::Product
    } else {
        Prec::Atom
    };
    Piece { text, prec }
}

fn rat_tex(r: &num_rational::BigRational) -> String {
    use num_traits::One;
    if r.denom().is_one() {
        r.numer().to_string()
    } else if r.numer() < &num_bigint::BigInt::from(0) {
        format!("-\\frac{{{}}}{{{}}}", -r.numer(), r.denom())
    } else {
        format!("\\frac{{{}}}{{{}}}", r.numer(), r.denom())
    }
}

fn const_tex(c: &GaussianRational) -> String {
    use num_traits::{One, Signed, Zero};
    if c.im.is_zero() {
        return rat_tex(&c.re);
    }
    let im_abs = c.im.abs();
    let im = if im_abs.is_one() {
        "i".to_string()
    } else {
        format!("{}\\,i", rat_tex(&im_abs))
    };
    if c.re.is_zero() {
        if c.im.is_negative() {
            format!("-{}", im)
        } else {
            im
        }
    } else {
        let sign = if c.im.is_negative() { "-" } else { "+" };
        format!("{} {} {}", rat_tex(&c.re), sign, im)
    }
}

fn join_sum(parts: &[Piece], tex: bool) -> String {
    let mut out = String::new();
    for (k, p) in parts.iter().enumerate() {
        let s = wrap(p, Prec::Neg, tex);
        if k == 0 {
            out.push_str(&s);
        } else if let Some(rest) = s.strip_prefix('-') {
            out.push_str(" - ");
            out.push_str(rest);
        } else {
            out.push_str(" + ");
            out.push_str(&s);
        }
    }
    out
}

fn node_piece(e: &Expr, pieces: &FxHashMap<u64, Piece>, tex: bool) -> Piece {
    let get = |x: &Expr| &pieces[&x.id()];
    match e.kind() {
        ExprKind::Const(c) => const_piece(c, tex),
        ExprKind::Var(v) => Piece {
            text: if tex { v.tex() } else { v.to_string() },
            prec: Prec::Atom,
        },
        ExprKind::Add(xs) => {
            let parts: Vec<Piece> = xs
                .iter()
                .map(|x| Piece {
                    text: get(x).text.clone(),
                    prec: get(x).prec,
                })
                .collect();
            Piece {
                text: join_sum(&parts, tex),
                prec: Prec::Sum,
            }
        }
        ExprKind::Mul(xs) => {
            let sep = if tex { " " } else { "*" };
            let mut lead = String::new();
            let mut rest: &[Expr] = xs;
            if let Some(c) = xs[0].as_const() {
                rest = &xs[1..];
                if c == &GaussianRational::from_int(-1) {
                    lead.push('-');
                } else if c.is_simple() {
                    lead = format!("{}{}", const_piece(c, tex).text, sep);
                } else {
                    lead = format!("{}{}", wrap(&const_piece(c, tex), Prec::Atom, tex), sep);
                }
            }
            let body: Vec<String> = rest
                .iter()
                .map(|x| {
                    let p = get(x);
                    let div = matches!(x.kind(), ExprKind::Div(..));
                    if div && !tex {
                        format!("({})", p.text)
                    } else {
                        wrap(p, Prec::Product, tex)
                    }
                })
                .collect();
            Piece {
                text: format!("{}{}", lead, body.join(sep)),
                prec: if lead.starts_with('-') { Prec::Neg } else { Prec::Product },
            }
        }
        ExprKind::Div(a, b) => {
            let (pa, pb) = (get(a), get(b));
            if tex {
                Piece {
                    text: format!("\\frac{{{}}}{{{}}}", pa.text, pb.text),
                    prec: Prec::Atom,
                }
            } else {
                // `-x*y/z` reads as `-(x*y/z)`, so a negated numerator needs no parentheses.
                let num = wrap(pa, Prec::Neg, false);
                Piece {
                    text: format!("{}/{}", num, wrap(pb, Prec::Power, false)),
                    prec: if num.starts_with('-') { Prec::Neg } else { Prec::Product },
                }
            }
        }
        ExprKind::Pow(a, n) => {
            let base = wrap(get(a), Prec::Atom, tex);
            Piece {
                text: if tex {
                    format!("{{{}}}^{{{}}}", base, n)
                } else {
                    format!("{}^{}", base, n)
                },
                prec: Prec::Power,
            }
        }
    }
}

fn json_node(e: &Expr, pieces: &FxHashMap<u64, String>) -> String {
    let args = |xs: &[Expr]| {
        xs.iter()
            .map(|x| pieces[&x.id()].as_str())
            .collect::<Vec<_>>()
            .join(",")
    };
    match e.kind() {
        ExprKind::Const(c) => {
            let re = GaussianRational::from_real(c.re.clone()).to_string();
            let im = GaussianRational::from_real(c.im.clone()).to_string();
            format!("{{\"op\":\"const\",\"re\":\"{}\",\"im\":\"{}\"}}", re, im)
        }
        ExprKind::Var(v) => format!("{{\"op\":\"var\",\"name\":\"{}\"}}", v),
        ExprKind::Add(xs) => format!("{{\"op\":\"add\",\"args\":[{}]}}", args(xs)),
        ExprKind::Mul(xs) => format!("{{\"op\":\"mul\",\"args\":[{}]}}", args(xs)),
        ExprKind::Div(a, b) => format!(
            "{{\"op\":\"div\",\"args\":[{},{}]}}",
            pieces[&a.id()],
            pieces[&b.id()]
        ),
        ExprKind::Pow(a, n) => format!(
            "{{\"op\":\"pow\",\"exp\":{},\"args\":[{}]}}",
            n,
            pieces[&a.id()]
        ),
    }
}

/// Render an expression; fails with [`Error::TooLargeToRender`] beyond [`RENDER_LIMIT`].
pub fn render(e: &Expr, format: Format) -> Result<String> {
    let size = e.tree_size();
    if size > RENDER_LIMIT {
        return Err(Error::TooLargeToRender { nodes: size });
    }
    Ok(render_unchecked(e, format))
}

fn render_unchecked(e: &Expr, format: Format) -> String {
    let order = post_order(std::slice::from_ref(e));
    match format {
        Format::JsonTree => {
            let mut pieces: FxHashMap<u64, String> = FxHashMap::default();
            for n in &order {
                let s = json_node(n, &pieces);
                pieces.insert(n.id(), s);
            }
            pieces.remove(&e.id()).unwrap()
        }
        Format::Plain | Format::Tex => {
            let tex = format == Format::Tex;
            let mut pieces: FxHashMap<u64, Piece> = FxHashMap::default();
            for n in &order {
                let p = node_piece(n, &pieces, tex);
                pieces.insert(n.id(), p);
            }
            pieces.remove(&e.id()).unwrap().text
        }
    }
}

/// Plain text, or a placeholder when the tree exceeds `limit` nodes.
pub fn render_plain_tree(e: &Expr, limit: u64) -> String {
    let size = e.tree_size();
    if size > limit {
        format!("<{} nodes>", size)
    } else {
        render_unchecked(e, Format::Plain)
    }
}

fn poly_pieces(p: &Poly, tex: bool) -> Vec<Piece> {
    p.terms
        .iter()
        .map(|(m, c)| {
            let sep = if tex { " " } else { "*" };
            let mut factors: Vec<String> = m
                .iter()
                .map(|&(v, k)| {
                    let name = if tex { v.tex() } else { v.to_string() };
                    match (k, tex) {
                        (1, _) => name,
                        (_, true) => format!("{{{}}}^{{{}}}", name, k),
                        (_, false) => format!("{}^{}", name, k),
                    }
                })
                .collect();
            if factors.is_empty() {
                return const_piece(c, tex);
            }
            let cp = const_piece(c, tex);
            if c == &GaussianRational::from_int(-1) {
                factors[0] = format!("-{}", factors[0]);
            } else if !c.is_one() {
                factors.insert(0, wrap(&cp, Prec::Product, tex));
            }
            Piece {
                text: factors.join(sep),
                prec: Prec::Product,
            }
        })
        .collect()
}

/// Render a canonical form with terms in monomial order.
pub fn render_canonical(c: &Canonical, format: Format) -> Result<String> {
    if format == Format::JsonTree {
        return render(&c.to_expr(), format);
    }
    let tex = format == Format::Tex;
    let num = poly_pieces(&c.num, tex);
    let num_text = if num.is_empty() { "0".to_string() } else { join_sum(&num, tex) };
    if c.den.is_one() {
        return Ok(num_text);
    }
    let den = poly_pieces(&c.den, tex);
    let den_text = join_sum(&den, tex);
    Ok(if tex {
        format!("\\frac{{{}}}{{{}}}", num_text, den_text)
    } else {
        let n = if num.len() > 1 { format!("({})", num_text) } else { num_text };
        let d = if den.len() > 1 || den[0].text.contains('*') || den[0].text.contains('^') {
            format!("({})", den_text)
        } else {
            den_text
        };
        format!("{}/{}", n, d)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::var::VarId;

    #[test]
    fn plain_basics() {
        let z = Expr::var(VarId::Z);
        let zb = Expr::var(VarId::ZB);
        assert_eq!(render(&(&z * &zb), Format::Plain).unwrap(), "z*zb");
        let e = &z - &zb;
        let s = render(&e, Format::Plain).unwrap();
        assert!(s == "z - zb" || s == "-zb + z", "{}", s);
        let p = render(&Expr::jet(1, 0, 2).pow(3), Format::Plain).unwrap();
        assert_eq!(p, "phi[1,0,2]^3");
    }

    #[test]
    fn tex_fraction() {
        let z = Expr::var(VarId::Z);
        let s = render(&(1 / &z), Format::Tex).unwrap();
        assert_eq!(s, "\\frac{1}{z}");
    }

    #[test]
    fn json_tree_is_valid_json() {
        let z = Expr::var(VarId::Z);
        let e = (Expr::i() * &z + Expr::rat(1, 2)) / (&z + 3);
        let s = render(&e, Format::JsonTree).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["op"], "div");
    }
}
