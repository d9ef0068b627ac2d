//! Structural simplification.
//!
//! Polynomial subtrees are collected into coefficient form, which cancels
//! expressions like `z - z` exactly. Everything else is rebuilt bottom-up with
//! the folding constructors on [`Expr`].

use super::Expr;
use crate::Complex;

const MAX_POLY_DEGREE: usize = 256;

pub(crate) fn simplify(e: &Expr) -> Expr {
    simplify_inlined(&e.inline_compositions())
}

fn simplify_inlined(e: &Expr) -> Expr {
    if let Some(poly) = to_poly(e) {
        return from_poly(&poly);
    }
    match e {
        Expr::Const(_) | Expr::Var => e.clone(),
        Expr::Sum(a, b) => Expr::add(simplify_inlined(a), simplify_inlined(b)),
        Expr::Product(a, b) => Expr::mul(simplify_inlined(a), simplify_inlined(b)),
        Expr::Pow(b, n) => Expr::pow(simplify_inlined(b), *n),
        Expr::Exp(a) => Expr::exp(simplify_inlined(a)),
        Expr::Compose(..) => unreachable!("inlined"),
    }
}

fn trim(mut p: Vec<Complex>) -> Vec<Complex> {
    while p.len() > 1 && p.last().is_some_and(|c| c.re == 0.0 && c.im == 0.0) {
        p.pop();
    }
    p
}

fn poly_add(a: &[Complex], b: &[Complex]) -> Vec<Complex> {
    let n = a.len().max(b.len());
    let zero = Complex::new(0.0, 0.0);
    let v = (0..n)
        .map(|k| a.get(k).copied().unwrap_or(zero) + b.get(k).copied().unwrap_or(zero))
        .collect();
    trim(v)
}

fn poly_mul(a: &[Complex], b: &[Complex]) -> Option<Vec<Complex>> {
    let deg = (a.len() - 1) + (b.len() - 1);
    if deg > MAX_POLY_DEGREE {
        return None;
    }
    let mut v = vec![Complex::new(0.0, 0.0); deg + 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            v[i + j] += x * y;
        }
    }
    Some(trim(v))
}

fn to_poly(e: &Expr) -> Option<Vec<Complex>> {
    match e {
        Expr::Const(c) => Some(vec![*c]),
        Expr::Var => Some(vec![Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)]),
        Expr::Sum(a, b) => Some(poly_add(&to_poly(a)?, &to_poly(b)?)),
        Expr::Product(a, b) => poly_mul(&to_poly(a)?, &to_poly(b)?),
        Expr::Pow(b, n) => {
            let base = to_poly(b)?;
            let mut acc = vec![Complex::new(1.0, 0.0)];
            for _ in 0..*n {
                acc = poly_mul(&acc, &base)?;
            }
            Some(acc)
        }
        Expr::Exp(a) => match to_poly(a)?.as_slice() {
            [c] => Some(vec![c.exp()]),
            _ => None,
        },
        Expr::Compose(..) => None,
    }
}

fn from_poly(p: &[Complex]) -> Expr {
    let mut out: Option<Expr> = None;
    for (k, c) in p.iter().enumerate().rev() {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let term = Expr::mul(Expr::Const(*c), Expr::pow(Expr::Var, k as u32));
        out = Some(match out {
            None => term,
            Some(acc) => Expr::Sum(Box::new(acc), Box::new(term)),
        });
    }
    out.unwrap_or_else(|| Expr::real(0.0))
}
