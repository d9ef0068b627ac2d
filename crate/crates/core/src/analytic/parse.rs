//! Text form of expression trees.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' UINT)?
//! atom    := NUMBER | NUMBER 'i' | 'i' | 'z' | 'exp' '(' expr ')'
//!          | '(' literal ')' | '(' expr ')'
//! literal := ['-'] NUMBER ['i'] | ['-'] NUMBER ('+' | '-') NUMBER 'i'
//! ```
//!
//! A parenthesized literal such as `(2-3i)` or `(-1)` is one constant node.
//! The printer emits exactly this form for non-atomic constants, so printing
//! a parsed tree and reparsing reproduces the same text byte for byte.

use std::fmt;

use thiserror::Error;

use super::{Expr, FnError, MAX_POWER};
use crate::Complex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("unexpected character {ch:?} at offset {pos}")]
    UnexpectedChar { pos: usize, ch: char },
    #[error("unexpected {found} at offset {pos}")]
    UnexpectedToken { pos: usize, found: String },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("invalid number {0:?}")]
    BadNumber(String),
    #[error("exponent must be a nonnegative integer literal at most {MAX_POWER}, got {0:?}")]
    BadExponent(String),
    #[error(transparent)]
    Invalid(#[from] FnError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, text: String },
    Imag(f64),
    Z,
    Exp,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num { text, .. } => write!(f, "number {text}"),
            Tok::Imag(v) => write!(f, "imaginary literal {v}i"),
            Tok::Z => f.write_str("'z'"),
            Tok::Exp => f.write_str("'exp'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Caret => f.write_str("'^'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        let start = i;
        match ch {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            'z' => out.push((start, Tok::Z)),
            'i' => out.push((start, Tok::Imag(1.0))),
            'e' if src[i..].starts_with("exp") => {
                out.push((start, Tok::Exp));
                i += 3;
                continue;
            }
            '0'..='9' | '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| ParseError::BadNumber(text.to_string()))?;
                if !value.is_finite() {
                    return Err(ParseError::BadNumber(text.to_string()));
                }
                if i < bytes.len() && bytes[i] == b'i' {
                    i += 1;
                    out.push((start, Tok::Imag(value)));
                } else {
                    out.push((
                        start,
                        Tok::Num {
                            value,
                            text: text.to_string(),
                        },
                    ));
                }
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or(ch);
                return Err(ParseError::UnexpectedChar { pos: start, ch });
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|(_, t)| t)
    }

    fn next(&mut self) -> Result<(usize, Tok), ParseError> {
        let t = self.toks.get(self.pos).cloned().ok_or(ParseError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        let (pos, t) = self.next()?;
        if t == want {
            Ok(())
        } else {
            Err(ParseError::UnexpectedToken {
                pos,
                found: t.to_string(),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sum(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sum(Box::new(lhs), Box::new(negate(rhs)));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Star) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Product(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            return Ok(negate(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            let (pos, t) = self.next()?;
            let n = match &t {
                Tok::Num { text, .. } if text.bytes().all(|b| b.is_ascii_digit()) => text
                    .parse::<u32>()
                    .ok()
                    .filter(|&n| n <= MAX_POWER)
                    .ok_or_else(|| ParseError::BadExponent(text.clone()))?,
                Tok::Num { text, .. } => return Err(ParseError::BadExponent(text.clone())),
                other => {
                    return Err(ParseError::UnexpectedToken {
                        pos,
                        found: other.to_string(),
                    })
                }
            };
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (pos, t) = self.next()?;
        match t {
            Tok::Num { value, .. } => Ok(Expr::real(value)),
            Tok::Imag(v) => Ok(Expr::Const(Complex::new(0.0, v))),
            Tok::Z => Ok(Expr::Var),
            Tok::Exp => {
                self.expect(Tok::LParen)?;
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Exp(Box::new(inner)))
            }
            Tok::LParen => {
                if let Some(c) = self.paren_literal() {
                    return Ok(Expr::Const(c));
                }
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            other => Err(ParseError::UnexpectedToken {
                pos,
                found: other.to_string(),
            }),
        }
    }

    /// Matches a literal body after an opening parenthesis, consuming it and
    /// the closing parenthesis on success.
    fn paren_literal(&mut self) -> Option<Complex> {
        let mut k = 0;
        let mut sign = 1.0;
        if let Some(Tok::Minus) = self.peek_at(k) {
            sign = -1.0;
            k += 1;
        }
        let first = match self.peek_at(k) {
            Some(Tok::Num { value, .. }) => Complex::new(sign * value, 0.0),
            Some(Tok::Imag(v)) => Complex::new(0.0, sign * v),
            _ => return None,
        };
        k += 1;
        match self.peek_at(k) {
            Some(Tok::RParen) => {
                self.pos += k + 1;
                Some(first)
            }
            Some(op @ (Tok::Plus | Tok::Minus)) if first.im == 0.0 => {
                let s = if *op == Tok::Minus { -1.0 } else { 1.0 };
                match (self.peek_at(k + 1), self.peek_at(k + 2)) {
                    (Some(Tok::Imag(v)), Some(Tok::RParen)) => {
                        let c = Complex::new(first.re, s * v);
                        self.pos += k + 3;
                        Some(c)
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

fn negate(e: Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c),
        e => Expr::Product(Box::new(Expr::real(-1.0)), Box::new(e)),
    }
}

pub(crate) fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if let Some((pos, t)) = p.toks.get(p.pos) {
        return Err(ParseError::UnexpectedToken {
            pos: *pos,
            found: t.to_string(),
        });
    }
    Ok(e)
}

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const ATOM: u8 = 4;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Sum(..) => SUM,
        Expr::Product(..) => PRODUCT,
        Expr::Pow(..) => 3,
        Expr::Const(_) | Expr::Var | Expr::Exp(_) => ATOM,
        Expr::Compose(..) => unreachable!("compositions are inlined before printing"),
    }
}

fn write_const(out: &mut fmt::Formatter<'_>, c: Complex) -> fmt::Result {
    let neg = |x: f64| x.is_sign_negative();
    if c.im == 0.0 {
        if neg(c.re) {
            write!(out, "({})", c.re)
        } else {
            write!(out, "{}", c.re)
        }
    } else if c.re == 0.0 {
        if neg(c.im) {
            write!(out, "({}i)", c.im)
        } else {
            write!(out, "{}i", c.im)
        }
    } else {
        let op = if neg(c.im) { '-' } else { '+' };
        write!(out, "({}{}{}i)", c.re, op, c.im.abs())
    }
}

fn write_expr(out: &mut fmt::Formatter<'_>, e: &Expr, min_level: u8) -> fmt::Result {
    let paren = level(e) < min_level;
    if paren {
        out.write_str("(")?;
    }
    match e {
        Expr::Const(c) => write_const(out, *c)?,
        Expr::Var => out.write_str("z")?,
        Expr::Sum(a, b) => {
            write_expr(out, a, SUM)?;
            out.write_str("+")?;
            write_expr(out, b, PRODUCT)?;
        }
        Expr::Product(a, b) => {
            write_expr(out, a, PRODUCT)?;
            out.write_str("*")?;
            write_expr(out, b, 3)?;
        }
        Expr::Pow(b, n) => {
            write_expr(out, b, ATOM)?;
            write!(out, "^{n}")?;
        }
        Expr::Exp(a) => {
            out.write_str("exp(")?;
            write_expr(out, a, 0)?;
            out.write_str(")")?;
        }
        Expr::Compose(..) => unreachable!(),
    }
    if paren {
        out.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let has_compose = {
            fn any(e: &Expr) -> bool {
                match e {
                    Expr::Compose(..) => true,
                    Expr::Const(_) | Expr::Var => false,
                    Expr::Sum(a, b) | Expr::Product(a, b) => any(a) || any(b),
                    Expr::Pow(a, _) | Expr::Exp(a) => any(a),
                }
            }
            any(self)
        };
        if has_compose {
            write_expr(f, &self.inline_compositions(), 0)
        } else {
            write_expr(f, self, 0)
        }
    }
}
