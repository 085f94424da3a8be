//! Parser for the input grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' ['-'] INT)?
//! atom   := NUM | 'i' | name | 'phi' '[' INT ',' INT ',' INT ']'
//!         | 'conj' '(' expr ')' | '(' expr ')'
//! ```
//!
//! Names are `z zb u b bb c cb s sb`. Numbers are integers or decimals.
//! A number immediately followed by `i` (as in `3i`) means `3*i`, so `1/3i`
//! is `(1/3)*i`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::poly::DEFAULT_BUDGET;
use crate::scalar::GaussianRational;
use crate::var::VarId;
use crate::zero::{is_identically_zero, ZeroMode, ZeroVerdict};

const MAX_DEPTH: usize = 512;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    End,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    start: usize,
    end: usize,
}

fn err(start: usize, end: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        start,
        end,
        message: message.into(),
    }
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut k = 0;
    while k < bytes.len() {
        let ch = bytes[k];
        if ch.is_ascii_whitespace() {
            k += 1;
            continue;
        }
        let start = k;
        let single = match ch {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b'[' => Some(Tok::LBracket),
            b']' => Some(Tok::RBracket),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token {
                tok,
                start,
                end: k + 1,
            });
            k += 1;
            continue;
        }
        if ch.is_ascii_digit() || ch == b'.' {
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            let int_part = &src[start..k];
            let mut value: BigRational = if int_part.is_empty() {
                BigRational::zero()
            } else {
                BigRational::from_integer(int_part.parse::<BigInt>().unwrap())
            };
            if k < bytes.len() && bytes[k] == b'.' {
                k += 1;
                let fs = k;
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                let frac = &src[fs..k];
                if frac.is_empty() && int_part.is_empty() {
                    return Err(err(start, k, "malformed number"));
                }
                if !frac.is_empty() {
                    let num: BigInt = frac.parse().unwrap();
                    let den = num_traits::pow(BigInt::from(10), frac.len());
                    value += BigRational::new(num, den);
                }
            }
            out.push(Token {
                tok: Tok::Num(value),
                start,
                end: k,
            });
            if k < bytes.len()
                && bytes[k] == b'i'
                && !(k + 1 < bytes.len() && bytes[k + 1].is_ascii_alphanumeric())
            {
                out.push(Token {
                    tok: Tok::Star,
                    start: k,
                    end: k,
                });
                out.push(Token {
                    tok: Tok::Ident("i".into()),
                    start: k,
                    end: k + 1,
                });
                k += 1;
            }
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == b'_' {
            while k < bytes.len() && (bytes[k].is_ascii_alphanumeric() || bytes[k] == b'_') {
                k += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..k].to_string()),
                start,
                end: k,
            });
            continue;
        }
        let c = src[k..].chars().next().unwrap();
        return Err(err(k, k + c.len_utf8(), format!("unexpected character `{}`", c)));
    }
    out.push(Token {
        tok: Tok::End,
        start: src.len(),
        end: src.len(),
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token> {
        let t = self.bump();
        if t.tok == want {
            Ok(t)
        } else {
            Err(err(t.start, t.end, format!("expected {}", what)))
        }
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            let t = self.peek();
            return Err(err(t.start, t.end, "nesting too deep"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr> {
        self.enter()?;
        let mut acc = vec![self.term()?];
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.bump();
                    acc.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    acc.push(-self.term()?);
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(Expr::add_all(acc))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    acc = &acc * &self.unary()?;
                }
                Tok::Slash => {
                    let op = self.bump();
                    let start = self.peek().start;
                    let den = self.unary()?;
                    let end = self.toks[self.pos.saturating_sub(1)].end;
                    if den.is_zero() {
                        return Err(err(op.start, end.max(start), "division by zero"));
                    }
                    acc = acc.try_div(&den)?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek().tok {
            Tok::Minus => {
                self.bump();
                self.enter()?;
                let e = -self.unary()?;
                self.depth -= 1;
                Ok(e)
            }
            Tok::Plus => {
                self.bump();
                self.enter()?;
                let e = self.unary()?;
                self.depth -= 1;
                Ok(e)
            }
            _ => self.power(),
        }
    }

    fn small_int(&mut self, what: &str) -> Result<i64> {
        let t = self.bump();
        match &t.tok {
            Tok::Num(r) if r.is_integer() => r
                .to_integer()
                .try_into()
                .ok()
                .filter(|n: &i64| n.abs() <= 1_000_000)
                .ok_or_else(|| err(t.start, t.end, format!("{} out of range", what))),
            _ => Err(err(t.start, t.end, format!("expected integer {}", what))),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            let caret = self.bump();
            let neg = if self.peek().tok == Tok::Minus {
                self.bump();
                true
            } else {
                false
            };
            let n = self.small_int("exponent")?;
            let n = if neg { -n } else { n };
            if n < 0 && base.is_zero() {
                return Err(err(caret.start, caret.end, "division by zero"));
            }
            if self.peek().tok == Tok::Caret {
                let t = self.peek();
                return Err(err(t.start, t.end, "chained exponents need parentheses"));
            }
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn jet_index(&mut self) -> Result<u8> {
        let t = self.peek().clone();
        let n = self.small_int("jet index")?;
        u8::try_from(n).map_err(|_| err(t.start, t.end, "jet index out of range"))
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(r) => Ok(Expr::constant(GaussianRational::from_real(r))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Expr::i()),
                "phi" => {
                    self.expect(Tok::LBracket, "`[` after phi")?;
                    let a = self.jet_index()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let b = self.jet_index()?;
                    self.expect(Tok::Comma, "`,`")?;
                    let c = self.jet_index()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    Ok(Expr::jet(a, b, c))
                }
                "conj" => {
                    self.expect(Tok::LParen, "`(` after conj")?;
                    let e = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(e.conj())
                }
                other => VarId::from_name(other)
                    .map(Expr::var)
                    .ok_or_else(|| err(t.start, t.end, format!("unknown identifier `{}`", other))),
            },
            Tok::End => Err(err(t.start, t.end, "unexpected end of input")),
            _ => Err(err(t.start, t.end, "expected an operand")),
        }
    }
}

pub fn parse_expression(src: &str) -> Result<Expr> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        depth: 0,
    };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::End {
        return Err(err(t.start, t.end, "unexpected trailing input"));
    }
    Ok(e)
}

/// Parse a defining function in `z, zb, u` and check that it is real-valued.
pub fn parse_phi(src: &str) -> Result<Expr> {
    let phi = parse_expression(src)?;
    for v in phi.vars() {
        if !matches!(v, VarId::Base(_)) {
            return Err(err(
                0,
                src.len(),
                format!("defining function may only involve z, zb, u; found `{}`", v),
            ));
        }
    }
    let defect = phi.conj() - &phi;
    let verdict = match is_identically_zero(
        &defect,
        &ZeroMode::Canonical {
            budget: DEFAULT_BUDGET,
        },
    ) {
        Err(Error::ExpansionOverflow { .. }) => {
            is_identically_zero(&defect, &ZeroMode::probabilistic())?
        }
        other => other?,
    };
    match verdict {
        ZeroVerdict::Zero => Ok(phi),
        ZeroVerdict::NonZero(w) => {
            let detail = match w {
                Some(w) if !w.point.is_empty() => {
                    let pts: Vec<String> = w
                        .point
                        .iter()
                        .filter(|(v, _)| **v != VarId::ZB)
                        .map(|(v, x)| format!("{}={}", v, x))
                        .collect();
                    let im = (&w.value * &GaussianRational::from_parts(0, 1, 1, 2)).re;
                    let im = GaussianRational::from_real(im);
                    format!("imaginary part {} at {}", im, pts.join(", "))
                }
                _ => "conj(phi) differs from phi".to_string(),
            };
            Err(Error::NotReal(detail))
        }
    }
}

/// Integer or rational literal shortcut, for points.
pub fn parse_constant(src: &str) -> Result<GaussianRational> {
    let e = parse_expression(src)?;
    e.as_const()
        .cloned()
        .ok_or_else(|| err(0, src.len(), "expected a constant"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{render, Format};

    #[test]
    fn precedence() {
        let e = parse_expression("1 + 2*3^2 - 4/2").unwrap();
        assert_eq!(e, Expr::int(17));
        let e = parse_expression("-2^2").unwrap();
        assert_eq!(e, Expr::int(-4));
        assert_eq!(parse_expression("3i").unwrap(), Expr::imag(3, 1));
        assert_eq!(parse_expression("1/3i").unwrap(), Expr::imag(1, 3));
        assert_eq!(parse_expression("0.25").unwrap(), Expr::rat(1, 4));
    }

    #[test]
    fn jets_and_conj() {
        let e = parse_expression("conj(phi[2,1,0] + i*z)").unwrap();
        let want = Expr::jet(1, 2, 0) - Expr::i() * Expr::var(VarId::ZB);
        assert_eq!(e, want);
    }

    #[test]
    fn errors_carry_spans() {
        match parse_expression("z + * zb") {
            Err(Error::Parse { start, .. }) => assert_eq!(start, 4),
            other => panic!("{:?}", other),
        }
        match parse_expression("z / 0") {
            Err(Error::Parse { message, .. }) => assert!(message.contains("zero")),
            other => panic!("{:?}", other),
        }
        assert!(parse_expression("foo").is_err());
        assert!(parse_expression("(z").is_err());
    }

    #[test]
    fn phi_reality() {
        assert!(parse_phi("z*zb + z^2*zb^2").is_ok());
        assert!(matches!(parse_phi("i*z*zb"), Err(Error::NotReal(_))));
        assert!(matches!(parse_phi("z"), Err(Error::NotReal(_))));
        assert!(parse_phi("z*zb + b").is_err());
    }

    #[test]
    fn roundtrip_render() {
        let e = parse_expression("(z - 2*zb)^3/(1 + u*phi[1,1,0]) - i/3*z").unwrap();
        let back = parse_expression(&render(&e, Format::Plain).unwrap()).unwrap();
        assert!(is_identically_zero(&(back - e), &ZeroMode::canonical())
            .unwrap()
            .is_zero());
    }
}
