//! S-expression text for [`AlgFunc`].
//!
//! ```text
//! (add f g) (sub f g) (mul f g) (div f g) (neg f) (pow f k)
//! (poly [c0 c1 ...] f)        ; f defaults to x1
//! (affine p q f)              ; p + q*f
//! (inv f (a b) arg)           ; monotone inverse of f on (a,b); arg defaults to x1
//! (root f (a b))              ; the root of f in (a,b)
//! (alg [c0 c1 ...] (a b))     ; algebraic number
//! (section ((c i j) ...) k arg)
//! ```
//! Coordinates are `x1`, `x2`, ... (`x` and `y` are accepted as aliases);
//! rationals are written `p/q`.

use std::fmt::Write;

use crate::algebraic::AlgebraicNumber;
use crate::expr::{AlgFunc, InvBranch, Node, SectionSpec};
use crate::mpoly::MPoly;
use crate::rational::{fmt_q, parse_q, Q};
use crate::upoly::UPoly;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

pub fn to_sexpr(e: &AlgFunc) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn write_list(cs: &[Q], out: &mut String) {
    out.push('[');
    for (i, c) in cs.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&fmt_q(c));
    }
    out.push(']');
}

fn write_expr(e: &AlgFunc, out: &mut String) {
    match e.node() {
        Node::Rat(q) => out.push_str(&fmt_q(q)),
        Node::Var(i) => {
            let _ = write!(out, "x{}", i + 1);
        }
        Node::Alg(a) => {
            out.push_str("(alg ");
            write_list(a.poly().coeffs(), out);
            let _ = write!(out, " ({} {}))", fmt_q(a.lo()), fmt_q(a.hi()));
        }
        Node::Add(a, b) => bin("add", a, b, out),
        Node::Sub(a, b) => bin("sub", a, b, out),
        Node::Mul(a, b) => bin("mul", a, b, out),
        Node::Div(a, b) => bin("div", a, b, out),
        Node::Neg(a) => {
            out.push_str("(neg ");
            write_expr(a, out);
            out.push(')');
        }
        Node::Pow(a, k) => {
            out.push_str("(pow ");
            write_expr(a, out);
            let _ = write!(out, " {k})");
        }
        Node::Poly(p, a) => {
            out.push_str("(poly ");
            write_list(p.coeffs(), out);
            out.push(' ');
            write_expr(a, out);
            out.push(')');
        }
        Node::Inv(br, a) => {
            out.push_str("(inv ");
            write_expr(&br.f, out);
            out.push_str(" (");
            write_expr(&br.lo, out);
            out.push(' ');
            write_expr(&br.hi, out);
            out.push_str(") ");
            write_expr(a, out);
            out.push_str(if br.increasing { " inc)" } else { " dec)" });
        }
        Node::Root(r) => {
            out.push_str("(root ");
            write_expr(&r.f, out);
            let _ = write!(out, " ({} {}))", fmt_q(&r.lo), fmt_q(&r.hi));
        }
        Node::Section(s, a) => {
            out.push_str("(section (");
            for (i, (e, c)) in s.poly.terms().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "({} {} {})", fmt_q(c), e[0], e[1]);
            }
            let _ = write!(out, ") {} ", s.index);
            write_expr(a, out);
            out.push(')');
        }
    }
}

fn bin(op: &str, a: &AlgFunc, b: &AlgFunc, out: &mut String) {
    out.push('(');
    out.push_str(op);
    out.push(' ');
    write_expr(a, out);
    out.push(' ');
    write_expr(b, out);
    out.push(')');
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    LBrack,
    RBrack,
    Atom(String),
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

fn lex(src: &str) -> Lexer {
    let mut toks = vec![];
    let (mut line, mut col) = (1, 1);
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        match c {
            '(' | ')' | '[' | ']' => {
                chars.next();
                col += 1;
                toks.push((
                    match c {
                        '(' => Tok::Open,
                        ')' => Tok::Close,
                        '[' => Tok::LBrack,
                        _ => Tok::RBrack,
                    },
                    l0,
                    c0,
                ));
            }
            ';' => {
                while let Some(&d) = chars.peek() {
                    if d == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            c if c.is_whitespace() || c == ',' => {
                chars.next();
                if c == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || "()[],;".contains(d) {
                        break;
                    }
                    s.push(d);
                    chars.next();
                    col += 1;
                }
                toks.push((Tok::Atom(s), l0, c0));
            }
        }
    }
    Lexer { toks, pos: 0 }
}

impl Lexer {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = match self.toks.get(self.pos).or(self.toks.last()) {
            Some((_, l, c)) => (*l, *c),
            None => (1, 1),
        };
        ParseError { line, col, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Result<Tok, ParseError> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone()).ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        let got = self.next()?;
        if got == t {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!("expected {t:?}, found {got:?}")))
        }
    }

    fn rational(&mut self) -> Result<Q, ParseError> {
        match self.next()? {
            Tok::Atom(a) => parse_q(&a).ok_or_else(|| {
                self.pos -= 1;
                self.err(format!("not a rational: {a}"))
            }),
            t => {
                self.pos -= 1;
                Err(self.err(format!("expected a rational, found {t:?}")))
            }
        }
    }

    fn int(&mut self) -> Result<u32, ParseError> {
        match self.next()? {
            Tok::Atom(a) => a.parse().map_err(|_| {
                self.pos -= 1;
                self.err(format!("not a small integer: {a}"))
            }),
            t => {
                self.pos -= 1;
                Err(self.err(format!("expected an integer, found {t:?}")))
            }
        }
    }

    fn coeff_list(&mut self) -> Result<Vec<Q>, ParseError> {
        self.expect(Tok::LBrack)?;
        let mut v = vec![];
        while self.peek() != Some(&Tok::RBrack) {
            v.push(self.rational()?);
        }
        self.expect(Tok::RBrack)?;
        Ok(v)
    }

    fn expr(&mut self) -> Result<AlgFunc, ParseError> {
        match self.next()? {
            Tok::Atom(a) => {
                if let Some(q) = parse_q(&a) {
                    return Ok(AlgFunc::rat(q));
                }
                let v = match a.as_str() {
                    "x" => Some(0),
                    "y" => Some(1),
                    "z" => Some(2),
                    _ => a.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()).filter(|&k| k >= 1).map(|k| k - 1),
                };
                match v {
                    Some(i) => Ok(AlgFunc::var(i)),
                    None => {
                        self.pos -= 1;
                        Err(self.err(format!("unknown symbol {a}")))
                    }
                }
            }
            Tok::Open => {
                let head = match self.next()? {
                    Tok::Atom(h) => h,
                    _ => {
                        self.pos -= 1;
                        return Err(self.err("expected an operator"));
                    }
                };
                let e = self.form(&head)?;
                self.expect(Tok::Close)?;
                Ok(e)
            }
            t => {
                self.pos -= 1;
                Err(self.err(format!("unexpected {t:?}")))
            }
        }
    }

    fn pair(&mut self) -> Result<(AlgFunc, AlgFunc), ParseError> {
        self.expect(Tok::Open)?;
        let a = self.expr()?;
        let b = self.expr()?;
        self.expect(Tok::Close)?;
        Ok((a, b))
    }

    fn rational_pair(&mut self) -> Result<(Q, Q), ParseError> {
        self.expect(Tok::Open)?;
        let a = self.rational()?;
        let b = self.rational()?;
        self.expect(Tok::Close)?;
        Ok((a, b))
    }

    fn form(&mut self, head: &str) -> Result<AlgFunc, ParseError> {
        let raw = AlgFunc::from_node;
        Ok(match head {
            "add" | "sub" | "mul" | "div" => {
                let a = self.expr()?;
                let b = self.expr()?;
                match head {
                    "add" => raw(Node::Add(a, b)),
                    "sub" => raw(Node::Sub(a, b)),
                    "mul" => raw(Node::Mul(a, b)),
                    _ => {
                        if b.is_zero() {
                            return Err(self.err("division by the constant zero"));
                        }
                        raw(Node::Div(a, b))
                    }
                }
            }
            "neg" => raw(Node::Neg(self.expr()?)),
            "pow" => {
                let a = self.expr()?;
                let k = self.int()?;
                raw(Node::Pow(a, k))
            }
            "poly" => {
                let cs = self.coeff_list()?;
                let arg = if self.peek() == Some(&Tok::Close) { AlgFunc::var(0) } else { self.expr()? };
                raw(Node::Poly(UPoly::new(cs), arg))
            }
            "affine" => {
                let p = self.expr()?;
                let q = self.expr()?;
                let f = self.expr()?;
                f.affine(&p, &q)
            }
            "inv" => {
                let f = self.expr()?;
                let (lo, hi) = self.pair()?;
                let arg = if matches!(self.peek(), Some(Tok::Close)) { AlgFunc::var(0) } else { self.expr()? };
                let increasing = match self.peek() {
                    Some(Tok::Atom(a)) if a == "inc" || a == "dec" => {
                        let inc = a == "inc";
                        self.pos += 1;
                        inc
                    }
                    _ => {
                        let fl = f.compose1(&lo).enclosure();
                        let fh = f.compose1(&hi).enclosure();
                        if fl.hi < fh.lo {
                            true
                        } else if fh.hi < fl.lo {
                            false
                        } else {
                            return Err(self.err("cannot decide the direction of the inverse branch"));
                        }
                    }
                };
                AlgFunc::inv(&InvBranch::new(f, lo, hi, increasing), &arg)
            }
            "root" => {
                let f = self.expr()?;
                let (lo, hi) = self.rational_pair()?;
                AlgFunc::root(&f, lo, hi)
            }
            "alg" => {
                let cs = self.coeff_list()?;
                let (lo, hi) = self.rational_pair()?;
                let p = UPoly::new(cs);
                if p.deg() == 0 {
                    return Err(self.err("algebraic number needs a nonconstant polynomial"));
                }
                raw(Node::Alg(AlgebraicNumber::new(&p, lo, hi)))
            }
            "section" => {
                self.expect(Tok::Open)?;
                let mut p = MPoly::zero(2);
                while self.peek() == Some(&Tok::Open) {
                    self.expect(Tok::Open)?;
                    let c = self.rational()?;
                    let i = self.int()?;
                    let j = self.int()?;
                    self.expect(Tok::Close)?;
                    p = p.add(&MPoly::monomial(c, vec![i, j]));
                }
                self.expect(Tok::Close)?;
                let k = self.int()? as usize;
                let arg = self.expr()?;
                AlgFunc::section(&SectionSpec::new(p, k), &arg)
            }
            other => return Err(self.err(format!("unknown operator {other}"))),
        })
    }
}

/// Parses one expression.
pub fn parse_expr(src: &str) -> Result<AlgFunc, ParseError> {
    let mut lx = lex(src);
    let e = lx.expr()?;
    if lx.pos != lx.toks.len() {
        return Err(lx.err("trailing input"));
    }
    Ok(e)
}

/// Parses a whitespace/newline separated list of expressions.
pub fn parse_expr_list(src: &str) -> Result<Vec<AlgFunc>, ParseError> {
    let mut lx = lex(src);
    let mut out = vec![];
    while lx.pos < lx.toks.len() {
        out.push(lx.expr()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn round_trip_forms() {
        for src in [
            "(add x1 (mul 1/2 x2))",
            "(poly [0 0 3 -2] x1)",
            "(inv (pow x1 2) (0 1) x1 inc)",
            "(div 1 (add 1 x1))",
            "(root (poly [-2 0 1] x1) (1 2))",
            "(alg [-2 0 1] (1 2))",
            "(section ((1 0 1) (-1 2 0)) 0 x1)",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = to_sexpr(&e);
            assert_eq!(printed, src);
            assert_eq!(parse_expr(&printed).unwrap(), e);
        }
    }

    #[test]
    fn affine_and_defaults() {
        let e = parse_expr("(affine 1/4 1/2 (poly [0 0 1]))").unwrap();
        assert_eq!(e.eval_exact(&[q(1, 1)]), Some(q(3, 4)));
        let g = parse_expr("(inv (poly [0 0 1]) (0 1))").unwrap();
        assert!((g.eval_f64(&[0.25]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn errors_carry_position() {
        let e = parse_expr("(add x1\n  (foo 2))").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.msg.contains("foo"));
        assert!(parse_expr("(add x1").is_err());
        assert!(parse_expr("(div 1 0)").is_err());
    }
}
