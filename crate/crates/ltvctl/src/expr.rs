//! Closed-form expressions in the time variable `t`.
//!
//! The grammar is deliberately small: rational constants, `t`, sums,
//! differences, products, integer powers, `sin`, `cos` and `exp`. That is
//! enough for analytic system coefficients while keeping symbolic
//! differentiation and exact polynomial extraction straightforward.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(BigRational),
    Time,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn constant_i64(v: i64) -> Expr {
        Expr::Const(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(num: i64, den: i64) -> Expr {
        Expr::Const(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Expr {
        Expr::Const(BigRational::zero())
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    fn as_const(&self) -> Option<&BigRational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Smart constructors fold constants and drop zero/one units so that
    /// derivative trees stay small.
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x + y),
            (Some(x), None) if x.is_zero() => b,
            (None, Some(y)) if y.is_zero() => a,
            _ => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x - y),
            (None, Some(y)) if y.is_zero() => a,
            (Some(x), None) if x.is_zero() => Expr::neg(b),
            _ => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::Const(x * y),
            (Some(x), _) if x.is_zero() => Expr::zero(),
            (_, Some(y)) if y.is_zero() => Expr::zero(),
            (Some(x), None) if x.is_one() => b,
            (None, Some(y)) if y.is_one() => a,
            _ => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(c) => Expr::Const(-c),
            Expr::Neg(inner) => *inner,
            _ => Expr::Neg(Box::new(a)),
        }
    }

    pub fn pow(a: Expr, e: u32) -> Expr {
        match e {
            0 => Expr::Const(BigRational::one()),
            1 => a,
            _ => match a.as_const() {
                Some(c) => {
                    let mut acc = BigRational::one();
                    for _ in 0..e {
                        acc *= c;
                    }
                    Expr::Const(acc)
                }
                None => Expr::Pow(Box::new(a), e),
            },
        }
    }

    pub fn sin(a: Expr) -> Expr {
        Expr::Sin(Box::new(a))
    }

    pub fn cos(a: Expr) -> Expr {
        Expr::Cos(Box::new(a))
    }

    pub fn exp(a: Expr) -> Expr {
        Expr::Exp(Box::new(a))
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        match self {
            Expr::Const(c) => c.to_f64().unwrap_or(f64::NAN),
            Expr::Time => t,
            Expr::Add(a, b) => a.eval_f64(t) + b.eval_f64(t),
            Expr::Sub(a, b) => a.eval_f64(t) - b.eval_f64(t),
            Expr::Mul(a, b) => a.eval_f64(t) * b.eval_f64(t),
            Expr::Pow(a, e) => a.eval_f64(t).powi(*e as i32),
            Expr::Neg(a) => -a.eval_f64(t),
            Expr::Sin(a) => a.eval_f64(t).sin(),
            Expr::Cos(a) => a.eval_f64(t).cos(),
            Expr::Exp(a) => a.eval_f64(t).exp(),
        }
    }

    /// Exact evaluation at a rational time, if the value is rational:
    /// `sin`/`cos`/`exp` only evaluate exactly at argument zero.
    pub fn eval_exact(&self, t: &BigRational) -> Option<BigRational> {
        match self {
            Expr::Const(c) => Some(c.clone()),
            Expr::Time => Some(t.clone()),
            Expr::Add(a, b) => Some(a.eval_exact(t)? + b.eval_exact(t)?),
            Expr::Sub(a, b) => Some(a.eval_exact(t)? - b.eval_exact(t)?),
            Expr::Mul(a, b) => Some(a.eval_exact(t)? * b.eval_exact(t)?),
            Expr::Pow(a, e) => {
                let base = a.eval_exact(t)?;
                let mut acc = BigRational::one();
                for _ in 0..*e {
                    acc *= &base;
                }
                Some(acc)
            }
            Expr::Neg(a) => Some(-a.eval_exact(t)?),
            Expr::Sin(a) => a.eval_exact(t)?.is_zero().then(BigRational::zero),
            Expr::Cos(a) => a.eval_exact(t)?.is_zero().then(BigRational::one),
            Expr::Exp(a) => a.eval_exact(t)?.is_zero().then(BigRational::one),
        }
    }

    /// Symbolic derivative d/dt.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Time => Expr::Const(BigRational::one()),
            Expr::Add(a, b) => Expr::add(a.derivative(), b.derivative()),
            Expr::Sub(a, b) => Expr::sub(a.derivative(), b.derivative()),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.derivative(), (**b).clone()),
                Expr::mul((**a).clone(), b.derivative()),
            ),
            Expr::Pow(a, e) => Expr::mul(
                Expr::Const(BigRational::from_integer(BigInt::from(*e))),
                Expr::mul(Expr::pow((**a).clone(), e - 1), a.derivative()),
            ),
            Expr::Neg(a) => Expr::neg(a.derivative()),
            Expr::Sin(a) => Expr::mul(Expr::cos((**a).clone()), a.derivative()),
            Expr::Cos(a) => Expr::neg(Expr::mul(Expr::sin((**a).clone()), a.derivative())),
            Expr::Exp(a) => Expr::mul(Expr::exp((**a).clone()), a.derivative()),
        }
    }

    /// Coefficients `[c_0, c_1, ...]` when the expression is a polynomial
    /// in `t`; `None` as soon as a transcendental node appears.
    pub fn as_polynomial(&self) -> Option<Vec<BigRational>> {
        fn trim(mut v: Vec<BigRational>) -> Vec<BigRational> {
            while v.len() > 1 && v.last().is_some_and(Zero::is_zero) {
                v.pop();
            }
            v
        }
        let poly = match self {
            Expr::Const(c) => vec![c.clone()],
            Expr::Time => vec![BigRational::zero(), BigRational::one()],
            Expr::Add(a, b) => {
                let (pa, pb) = (a.as_polynomial()?, b.as_polynomial()?);
                let mut out = vec![BigRational::zero(); pa.len().max(pb.len())];
                for (i, c) in pa.iter().enumerate() {
                    out[i] += c;
                }
                for (i, c) in pb.iter().enumerate() {
                    out[i] += c;
                }
                out
            }
            Expr::Sub(a, b) => {
                let (pa, pb) = (a.as_polynomial()?, b.as_polynomial()?);
                let mut out = vec![BigRational::zero(); pa.len().max(pb.len())];
                for (i, c) in pa.iter().enumerate() {
                    out[i] += c;
                }
                for (i, c) in pb.iter().enumerate() {
                    out[i] -= c;
                }
                out
            }
            Expr::Mul(a, b) => {
                let (pa, pb) = (a.as_polynomial()?, b.as_polynomial()?);
                let mut out = vec![BigRational::zero(); pa.len() + pb.len() - 1];
                for (i, ca) in pa.iter().enumerate() {
                    for (j, cb) in pb.iter().enumerate() {
                        out[i + j] += ca * cb;
                    }
                }
                out
            }
            Expr::Pow(a, e) => {
                let pa = a.as_polynomial()?;
                let mut out = vec![BigRational::one()];
                for _ in 0..*e {
                    let mut next = vec![BigRational::zero(); out.len() + pa.len() - 1];
                    for (i, ca) in out.iter().enumerate() {
                        for (j, cb) in pa.iter().enumerate() {
                            next[i + j] += ca * cb;
                        }
                    }
                    out = next;
                }
                out
            }
            Expr::Neg(a) => a.as_polynomial()?.into_iter().map(|c| -c).collect(),
            Expr::Sin(_) | Expr::Cos(_) | Expr::Exp(_) => return None,
        };
        Some(trim(poly))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.denom().is_one() {
                    write!(f, "{}", c.numer())
                } else {
                    write!(f, "{}/{}", c.numer(), c.denom())
                }
            }
            Expr::Time => write!(f, "t"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Pow(a, e) => write!(f, "{a}^{e}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

/// Recursive-descent parser for the expression grammar.
///
/// `+ - *` are binary, `^` takes a nonnegative integer exponent, `/` is
/// only allowed with a constant divisor (folded into a rational factor),
/// and `sin`, `cos`, `exp` are the unary functions.
pub fn parse_expr(input: &str) -> Result<Expr> {
    let tokens = tokenize(input)?;
    let mut p = Parser { tokens, pos: 0, input };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::ExprParse(format!(
            "unexpected trailing input in '{input}' at token {}",
            p.pos
        )));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(input: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = input.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                // Scientific suffix, e.g. 1.5e-3.
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = bytes[start..i].iter().collect();
                let value = crate::scalar::parse_scalar(&text, crate::scalar::ScalarMode::Rational)
                    .map_err(|_| Error::ExprParse(format!("bad number '{text}'")))?;
                match value {
                    crate::scalar::Scalar::Rational(r) => out.push(Token::Number(r)),
                    _ => unreachable!(),
                }
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(bytes[start..i].iter().collect()));
            }
            other => return Err(Error::ExprParse(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    input: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Token) -> Result<()> {
        match self.bump() {
            Some(t) if t == tok => Ok(()),
            other => Err(Error::ExprParse(format!(
                "expected {tok:?}, found {other:?} in '{}'",
                self.input
            ))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::add(lhs, rhs);
                }
                Some(Token::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::sub(lhs, rhs);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    let rhs = self.factor()?;
                    lhs = Expr::mul(lhs, rhs);
                }
                Some(Token::Slash) => {
                    self.bump();
                    let rhs = self.factor()?;
                    let Some(c) = rhs.as_const() else {
                        return Err(Error::ExprParse(format!(
                            "division requires a constant divisor in '{}'",
                            self.input
                        )));
                    };
                    if c.is_zero() {
                        return Err(Error::ExprParse("division by zero".into()));
                    }
                    lhs = Expr::mul(lhs, Expr::Const(c.recip()));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Token::Minus) => {
                self.bump();
                Ok(Expr::neg(self.factor()?))
            }
            Some(Token::Plus) => {
                self.bump();
                self.factor()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.bump();
            match self.bump() {
                Some(Token::Number(r)) if r.denom().is_one() && !r.is_negative() => {
                    let e = r.numer().to_u32().ok_or_else(|| {
                        Error::ExprParse("exponent too large".into())
                    })?;
                    Ok(Expr::pow(base, e))
                }
                other => Err(Error::ExprParse(format!(
                    "exponent must be a nonnegative integer, found {other:?}"
                ))),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Token::Number(r)) => Ok(Expr::Const(r)),
            Some(Token::Ident(name)) => match name.as_str() {
                "t" => Ok(Expr::Time),
                "sin" | "cos" | "exp" => {
                    self.expect(Token::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Token::RParen)?;
                    Ok(match name.as_str() {
                        "sin" => Expr::sin(arg),
                        "cos" => Expr::cos(arg),
                        _ => Expr::exp(arg),
                    })
                }
                other => Err(Error::ExprParse(format!("unknown identifier '{other}'"))),
            },
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            other => Err(Error::ExprParse(format!("unexpected token {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_and_evaluates() {
        let e = parse_expr("2*t^2 - sin(t) + 1/3").unwrap();
        let t: f64 = 0.7;
        let want = 2.0 * t * t - t.sin() + 1.0 / 3.0;
        assert!((e.eval_f64(t) - want).abs() < 1e-15);
    }

    #[test]
    fn division_needs_constant_divisor() {
        assert!(parse_expr("t/2").is_ok());
        assert!(parse_expr("1/t").is_err());
        assert!(parse_expr("t/0").is_err());
    }

    #[test]
    fn derivative_rules() {
        let e = parse_expr("t^3").unwrap();
        let d = e.derivative();
        assert_eq!(d.as_polynomial().unwrap(), vec![q(0, 1), q(0, 1), q(3, 1)]);

        let s = parse_expr("sin(2*t)").unwrap();
        let ds = s.derivative();
        assert!((ds.eval_f64(0.3) - 2.0 * (0.6f64).cos()).abs() < 1e-15);

        let ex = parse_expr("exp(t^2)").unwrap();
        let dex = ex.derivative();
        let t = 0.4;
        assert!((dex.eval_f64(t) - 2.0 * t * (t * t).exp()).abs() < 1e-15);
    }

    #[test]
    fn polynomial_extraction_is_exact() {
        let e = parse_expr("(t - 1)*(t + 1)").unwrap();
        assert_eq!(e.as_polynomial().unwrap(), vec![q(-1, 1), q(0, 1), q(1, 1)]);
        assert!(parse_expr("sin(t)").unwrap().as_polynomial().is_none());
        let half = parse_expr("t/2 + 0.25").unwrap();
        assert_eq!(half.as_polynomial().unwrap(), vec![q(1, 4), q(1, 2)]);
    }

    #[test]
    fn exact_evaluation_handles_transcendentals_only_at_zero() {
        let zero = BigRational::zero();
        let e = parse_expr("cos(t) + exp(t)").unwrap();
        assert_eq!(e.eval_exact(&zero), Some(q(2, 1)));
        assert_eq!(e.eval_exact(&q(1, 2)), None);
        let p = parse_expr("3*t^2 - t/2").unwrap();
        assert_eq!(p.eval_exact(&q(1, 2)), Some(q(1, 2)));
    }
}
