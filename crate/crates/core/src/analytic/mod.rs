//! Entire functions built from a small expression tree.
//!
//! An [`AnalyticFn`] is a finite tree over constants, the variable `z`, sums,
//! products, nonnegative integer powers, `exp` and composition. There are no
//! reciprocal nodes, so every function is entire and evaluation is defined on
//! all of ℂ (up to floating point overflow).

mod circle;
mod parse;
mod simplify;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use circle::{
    min_on_circle, min_on_circle_with_offset, CircleError, CircleMin, CircleSpec, MIN_CIRCLE_SAMPLES,
};
pub use parse::ParseError;

use crate::Complex;

/// Largest power exponent accepted by the parser and constructors.
pub const MAX_POWER: u32 = 4096;

/// Probe points `0.5·e^{iπk/8}`, `k = 0..16`, used by [`AnalyticFn::is_nonconstant`].
pub fn constancy_probes() -> [Complex; 16] {
    std::array::from_fn(|k| Complex::from_polar(0.5, std::f64::consts::PI * k as f64 / 8.0))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("evaluation overflow: non-finite intermediate value at z = {re}{im:+}i", re = .at.re, im = .at.im)]
    Overflow { at: Complex },
}

/// Node of an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex),
    Var,
    Sum(Box<Expr>, Box<Expr>),
    Product(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Exp(Box<Expr>),
    /// `Compose(outer, inner)` is `outer(inner(z))`.
    Compose(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(c: Complex) -> Self {
        Expr::Const(c)
    }

    pub fn real(x: f64) -> Self {
        Expr::Const(Complex::new(x, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.re == 0.0 && c.im == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.re == 1.0 && c.im == 0.0)
    }

    /// Sum that folds constants and drops additive zeros.
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            (a, b) if a.is_zero() => b,
            (a, b) if b.is_zero() => a,
            (a, b) => Expr::Sum(Box::new(a), Box::new(b)),
        }
    }

    /// Product that folds constants, zeros and ones.
    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            (a, _) if a.is_zero() => Expr::real(0.0),
            (_, b) if b.is_zero() => Expr::real(0.0),
            (a, b) if a.is_one() => b,
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Product(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(base: Expr, n: u32) -> Expr {
        match (base, n) {
            (_, 0) => Expr::real(1.0),
            (b, 1) => b,
            (Expr::Const(c), n) => Expr::Const(c.powu(n)),
            (b, n) => Expr::Pow(Box::new(b), n),
        }
    }

    pub fn exp(arg: Expr) -> Expr {
        match arg {
            Expr::Const(c) => Expr::Const(c.exp()),
            a => Expr::Exp(Box::new(a)),
        }
    }

    pub fn compose(outer: Expr, inner: Expr) -> Expr {
        Expr::Compose(Box::new(outer), Box::new(inner))
    }

    pub fn eval(&self, z: Complex) -> Result<Complex, EvalError> {
        let w = match self {
            Expr::Const(c) => *c,
            Expr::Var => z,
            Expr::Sum(a, b) => a.eval(z)? + b.eval(z)?,
            Expr::Product(a, b) => a.eval(z)? * b.eval(z)?,
            Expr::Pow(b, n) => b.eval(z)?.powu(*n),
            Expr::Exp(a) => a.eval(z)?.exp(),
            Expr::Compose(outer, inner) => outer.eval(inner.eval(z)?)?,
        };
        if w.re.is_finite() && w.im.is_finite() {
            Ok(w)
        } else {
            Err(EvalError::Overflow { at: z })
        }
    }

    /// Structural derivative with respect to `z`.
    pub fn deriv(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::real(0.0),
            Expr::Var => Expr::real(1.0),
            Expr::Sum(a, b) => Expr::add(a.deriv(), b.deriv()),
            Expr::Product(a, b) => Expr::add(
                Expr::mul(a.deriv(), (**b).clone()),
                Expr::mul((**a).clone(), b.deriv()),
            ),
            Expr::Pow(b, n) => match *n {
                0 => Expr::real(0.0),
                n => Expr::mul(
                    Expr::mul(Expr::real(n as f64), Expr::pow((**b).clone(), n - 1)),
                    b.deriv(),
                ),
            },
            Expr::Exp(a) => Expr::mul(Expr::exp((**a).clone()), a.deriv()),
            Expr::Compose(outer, inner) => {
                let outer_d = match outer.deriv() {
                    c @ Expr::Const(_) => c,
                    d => Expr::compose(d, (**inner).clone()),
                };
                Expr::mul(outer_d, inner.deriv())
            }
        }
    }

    /// Tree with every composition node expanded by substitution.
    pub fn inline_compositions(&self) -> Expr {
        self.substitute(&Expr::Var)
    }

    fn substitute(&self, z: &Expr) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var => z.clone(),
            Expr::Sum(a, b) => Expr::Sum(Box::new(a.substitute(z)), Box::new(b.substitute(z))),
            Expr::Product(a, b) => {
                Expr::Product(Box::new(a.substitute(z)), Box::new(b.substitute(z)))
            }
            Expr::Pow(b, n) => Expr::Pow(Box::new(b.substitute(z)), *n),
            Expr::Exp(a) => Expr::Exp(Box::new(a.substitute(z))),
            Expr::Compose(outer, inner) => {
                let inner = inner.substitute(z);
                outer.substitute(&inner)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Sum(a, b) | Expr::Product(a, b) | Expr::Compose(a, b) => {
                1 + a.node_count() + b.node_count()
            }
            Expr::Pow(a, _) | Expr::Exp(a) => 1 + a.node_count(),
        }
    }

    fn all_constants_finite(&self) -> bool {
        match self {
            Expr::Const(c) => c.re.is_finite() && c.im.is_finite(),
            Expr::Var => true,
            Expr::Sum(a, b) | Expr::Product(a, b) | Expr::Compose(a, b) => {
                a.all_constants_finite() && b.all_constants_finite()
            }
            Expr::Pow(a, _) | Expr::Exp(a) => a.all_constants_finite(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FnError {
    #[error("non-finite constant in expression")]
    NonFiniteConstant,
    #[error("power exponent {0} exceeds the supported maximum {MAX_POWER}")]
    PowerTooLarge(u32),
}

/// An entire function `f` together with its structural derivative.
///
/// The derivative tree is built once at construction; the clock integrand
/// evaluates it for every path sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticFn {
    expr: Expr,
    derivative: Expr,
}

impl AnalyticFn {
    pub fn new(expr: Expr) -> Result<Self, FnError> {
        if !expr.all_constants_finite() {
            return Err(FnError::NonFiniteConstant);
        }
        if let Some(n) = max_power(&expr) {
            if n > MAX_POWER {
                return Err(FnError::PowerTooLarge(n));
            }
        }
        let derivative = expr.deriv();
        Ok(Self { expr, derivative })
    }

    pub fn identity() -> Self {
        Self::new(Expr::Var).expect("identity is well formed")
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, z: Complex) -> Result<Complex, EvalError> {
        self.expr.eval(z)
    }

    /// Evaluates `f′(z)` from the cached derivative tree.
    pub fn eval_deriv(&self, z: Complex) -> Result<Complex, EvalError> {
        self.derivative.eval(z)
    }

    pub fn deriv(&self) -> AnalyticFn {
        AnalyticFn::new(self.derivative.clone()).expect("derivative of a valid tree is valid")
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AnalyticFn) -> AnalyticFn {
        AnalyticFn::new(Expr::compose(self.expr.clone(), inner.expr.clone()))
            .expect("composition of valid trees is valid")
    }

    pub fn simplified(&self) -> AnalyticFn {
        AnalyticFn::new(simplify::simplify(&self.expr)).expect("simplification keeps validity")
    }

    /// Constancy verdict: structural simplification, then `f′` at the 16
    /// probe points of [`constancy_probes`]. Any nonzero probe value means
    /// nonconstant.
    pub fn is_nonconstant(&self) -> bool {
        let simple = simplify::simplify(&self.expr);
        if matches!(simple, Expr::Const(_)) {
            return false;
        }
        let d = simple.deriv();
        constancy_probes().iter().any(|&p| match d.eval(p) {
            Ok(w) => w.re != 0.0 || w.im != 0.0,
            // An overflowing derivative is certainly not identically zero.
            Err(_) => true,
        })
    }
}

fn max_power(e: &Expr) -> Option<u32> {
    match e {
        Expr::Const(_) | Expr::Var => None,
        Expr::Pow(b, n) => Some(max_power(b).map_or(*n, |m| m.max(*n))),
        Expr::Exp(a) => max_power(a),
        Expr::Sum(a, b) | Expr::Product(a, b) | Expr::Compose(a, b) => {
            match (max_power(a), max_power(b)) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            }
        }
    }
}

impl fmt::Display for AnalyticFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.expr, f)
    }
}

impl FromStr for AnalyticFn {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let expr = parse::parse_expr(s)?;
        AnalyticFn::new(expr).map_err(ParseError::Invalid)
    }
}

impl Serialize for AnalyticFn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AnalyticFn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
