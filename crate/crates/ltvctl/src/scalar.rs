//! Dual-mode scalar: exact rational arithmetic or IEEE doubles with an
//! explicit relative zero tolerance.
//!
//! Every value participating in one computation must share a mode; mixing
//! modes is a programming error and panics. Rank and zero decisions in
//! float mode are made by the callers through [`Tol`], never silently.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarMode {
    Rational,
    Float,
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Rational => write!(f, "rational"),
            ScalarMode::Float => write!(f, "float"),
        }
    }
}

/// Relative zero tolerance used for float-mode decisions.
///
/// "Is zero" always means `|value| <= rel * scale` where `scale` is the
/// running magnitude of the enclosing computation, supplied at the call
/// site. Rational-mode decisions ignore the tolerance and are exact.
#[derive(Debug, Clone, Copy)]
pub struct Tol {
    pub rel: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Tol { rel: 1e-10 }
    }
}

impl Tol {
    pub fn new(rel: f64) -> Self {
        assert!(rel > 0.0, "tolerance must be positive");
        Tol { rel }
    }

    /// Float-mode zero test against a scale; exact test in rational mode.
    pub fn is_zero(&self, value: &Scalar, scale: f64) -> bool {
        match value {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Float(x) => x.abs() <= self.rel * scale.max(f64::MIN_POSITIVE),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Rational(BigRational),
    Float(f64),
}

impl Scalar {
    pub fn mode(&self) -> ScalarMode {
        match self {
            Scalar::Rational(_) => ScalarMode::Rational,
            Scalar::Float(_) => ScalarMode::Float,
        }
    }

    pub fn zero(mode: ScalarMode) -> Self {
        match mode {
            ScalarMode::Rational => Scalar::Rational(BigRational::zero()),
            ScalarMode::Float => Scalar::Float(0.0),
        }
    }

    pub fn one(mode: ScalarMode) -> Self {
        match mode {
            ScalarMode::Rational => Scalar::Rational(BigRational::one()),
            ScalarMode::Float => Scalar::Float(1.0),
        }
    }

    pub fn from_int(v: i64, mode: ScalarMode) -> Self {
        match mode {
            ScalarMode::Rational => Scalar::Rational(BigRational::from_integer(BigInt::from(v))),
            ScalarMode::Float => Scalar::Float(v as f64),
        }
    }

    pub fn from_ratio(num: i64, den: i64, mode: ScalarMode) -> Self {
        assert!(den != 0, "zero denominator");
        match mode {
            ScalarMode::Rational => {
                Scalar::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
            }
            ScalarMode::Float => Scalar::Float(num as f64 / den as f64),
        }
    }

    pub fn rational(r: BigRational) -> Self {
        Scalar::Rational(r)
    }

    /// Convert a double into the requested mode. Finite doubles are binary
    /// rationals, so the rational-mode conversion is exact.
    pub fn from_f64(v: f64, mode: ScalarMode) -> Result<Scalar> {
        if !v.is_finite() {
            return Err(Error::Schema(format!("non-finite value {v}")));
        }
        Ok(match mode {
            ScalarMode::Float => Scalar::Float(v),
            ScalarMode::Rational => {
                Scalar::Rational(BigRational::from_float(v).expect("finite doubles are rational"))
            }
        })
    }

    /// Exact zero test; use [`Tol::is_zero`] for scale-aware float decisions.
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_one(),
            Scalar::Float(x) => *x == 1.0,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(r.abs()),
            Scalar::Float(x) => Scalar::Float(x.abs()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Rational(r) => r.to_f64().unwrap_or_else(|| {
                // Magnitudes beyond f64: keep the sign, saturate.
                if r.is_negative() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }),
            Scalar::Float(x) => *x,
        }
    }

    /// Nonnegative integer power.
    pub fn powu(&self, e: u32) -> Scalar {
        match self {
            Scalar::Rational(r) => {
                let mut acc = BigRational::one();
                for _ in 0..e {
                    acc *= r;
                }
                Scalar::Rational(acc)
            }
            Scalar::Float(x) => Scalar::Float(x.powi(e as i32)),
        }
    }

    pub fn recip(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(Error::SingularMatrix);
        }
        Ok(match self {
            Scalar::Rational(r) => Scalar::Rational(r.recip()),
            Scalar::Float(x) => Scalar::Float(1.0 / x),
        })
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Option<Scalar> {
        if rhs.is_zero() {
            None
        } else {
            Some(self / rhs)
        }
    }

    /// Convert to float mode (lossy for rationals beyond f64 precision).
    pub fn to_float_mode(&self) -> Scalar {
        Scalar::Float(self.to_f64())
    }

    /// Compare absolute values; used for pivot selection.
    pub fn cmp_abs(&self, other: &Scalar) -> Ordering {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.abs().cmp(&b.abs()),
            (Scalar::Float(a), Scalar::Float(b)) => {
                a.abs().partial_cmp(&b.abs()).unwrap_or(Ordering::Equal)
            }
            _ => panic!("mixed scalar modes"),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Float(x) => write!(f, "{}", x),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a $op b),
                    (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a $op b),
                    _ => panic!("mixed scalar modes"),
                }
            }
        }
        impl $trait for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Div for &Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        assert!(!rhs.is_zero(), "scalar division by zero");
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a / b),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(a / b),
            _ => panic!("mixed scalar modes"),
        }
    }
}

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

/// Parse a number in the requested mode.
///
/// Accepted forms: integers (`-3`), rationals (`5/12`), and decimal or
/// scientific notation (`0.25`, `-1.5e-3`). In rational mode decimals are
/// converted exactly (`0.1` becomes `1/10`).
pub fn parse_scalar(s: &str, mode: ScalarMode) -> Result<Scalar> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Schema("empty number".into()));
    }
    match mode {
        ScalarMode::Float => s
            .parse::<f64>()
            .map(Scalar::Float)
            .or_else(|_| parse_rational(s).map(|r| Scalar::Float(r.to_f64().unwrap_or(f64::NAN))))
            .map_err(|_| Error::Schema(format!("cannot parse '{s}' as a float"))),
        ScalarMode::Rational => parse_rational(s)
            .map(Scalar::Rational)
            .map_err(|e| Error::Schema(format!("cannot parse '{s}' as a rational: {e}"))),
    }
}

fn parse_rational(s: &str) -> std::result::Result<BigRational, String> {
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| "bad numerator".to_string())?;
        let d: BigInt = den.trim().parse().map_err(|_| "bad denominator".to_string())?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        return Ok(BigRational::new(n, d));
    }
    parse_decimal(s)
}

/// Exact decimal/scientific parse: `[+-]ddd[.ddd][e[+-]ddd]`.
fn parse_decimal(s: &str) -> std::result::Result<BigRational, String> {
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let exp: i64 = e.parse().map_err(|_| "bad exponent".to_string())?;
            (m, exp)
        }
        None => (s, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err("no digits".into());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err("non-digit in mantissa".into());
    }
    let joined = format!("{int_part}{frac_part}");
    let numer: BigInt = if joined.is_empty() { BigInt::zero() } else { joined.parse().unwrap() };
    let shift = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(numer * BigInt::from(sign));
    if shift >= 0 {
        value *= BigRational::from_integer(ten.pow(shift as u32));
    } else {
        value /= BigRational::from_integer(ten.pow((-shift) as u32));
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_strings_parse_exactly_in_rational_mode() {
        let s = parse_scalar("0.1", ScalarMode::Rational).unwrap();
        assert_eq!(s, Scalar::from_ratio(1, 10, ScalarMode::Rational));
        let s = parse_scalar("-2.5e-2", ScalarMode::Rational).unwrap();
        assert_eq!(s, Scalar::from_ratio(-1, 40, ScalarMode::Rational));
        let s = parse_scalar("3/4", ScalarMode::Rational).unwrap();
        assert_eq!(s, Scalar::from_ratio(3, 4, ScalarMode::Rational));
        let s = parse_scalar("12", ScalarMode::Rational).unwrap();
        assert_eq!(s, Scalar::from_int(12, ScalarMode::Rational));
    }

    #[test]
    fn display_round_trips() {
        for s in ["-7/3", "5", "0"] {
            let v = parse_scalar(s, ScalarMode::Rational).unwrap();
            assert_eq!(format!("{v}"), *s);
        }
        let f = parse_scalar("0.125", ScalarMode::Float).unwrap();
        assert_eq!(format!("{f}"), "0.125");
    }

    #[test]
    fn arithmetic_is_exact_in_rational_mode() {
        let a = Scalar::from_ratio(1, 3, ScalarMode::Rational);
        let b = Scalar::from_ratio(1, 6, ScalarMode::Rational);
        assert_eq!(&a + &b, Scalar::from_ratio(1, 2, ScalarMode::Rational));
        assert_eq!(&a - &b, b);
        assert_eq!(&a * &b, Scalar::from_ratio(1, 18, ScalarMode::Rational));
        assert_eq!(&a / &b, Scalar::from_int(2, ScalarMode::Rational));
    }

    #[test]
    fn tolerance_zero_is_scale_aware() {
        let tol = Tol::default();
        assert!(tol.is_zero(&Scalar::Float(1e-12), 1.0));
        assert!(!tol.is_zero(&Scalar::Float(1e-8), 1.0));
        assert!(tol.is_zero(&Scalar::Float(1e-8), 1e3));
        // Rational mode ignores scale entirely.
        assert!(!tol.is_zero(&Scalar::from_ratio(1, i64::MAX, ScalarMode::Rational), 1e30));
    }

    #[test]
    #[should_panic(expected = "mixed scalar modes")]
    fn mixing_modes_panics() {
        let _ = Scalar::Float(1.0) + Scalar::from_int(1, ScalarMode::Rational);
    }

    #[test]
    fn bad_inputs_are_schema_errors() {
        assert!(parse_scalar("", ScalarMode::Rational).is_err());
        assert!(parse_scalar("1/0", ScalarMode::Rational).is_err());
        assert!(parse_scalar("abc", ScalarMode::Rational).is_err());
    }
}
