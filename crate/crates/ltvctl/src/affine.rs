//! Affine expressions `constant + sum coeff_i * d_i` over the free
//! variables `d_i` introduced by the nullification construction.
//!
//! Stored coefficients are never zero (exact pruning on every operation);
//! float-mode tolerance pruning is applied explicitly by the construction,
//! which knows the running magnitude of the computation.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};

#[derive(Debug, Clone, PartialEq)]
pub struct AffineExpr {
    constant: Scalar,
    coeffs: BTreeMap<u32, Scalar>,
}

impl AffineExpr {
    pub fn constant(value: Scalar) -> Self {
        AffineExpr { constant: value, coeffs: BTreeMap::new() }
    }

    pub fn zero(mode: ScalarMode) -> Self {
        AffineExpr::constant(Scalar::zero(mode))
    }

    /// The bare variable `d_id`.
    pub fn variable(id: u32, mode: ScalarMode) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(id, Scalar::one(mode));
        AffineExpr { constant: Scalar::zero(mode), coeffs }
    }

    pub fn mode(&self) -> ScalarMode {
        self.constant.mode()
    }

    pub fn constant_part(&self) -> &Scalar {
        &self.constant
    }

    pub fn coeff(&self, id: u32) -> Option<&Scalar> {
        self.coeffs.get(&id)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&u32, &Scalar)> {
        self.coeffs.iter()
    }

    pub fn variables(&self) -> impl Iterator<Item = u32> + '_ {
        self.coeffs.keys().copied()
    }

    /// Identically zero: zero constant and no stored coefficients.
    pub fn is_identically_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.is_empty()
    }

    /// True when the expression is exactly `1 * d_id` for some active id.
    pub fn as_bare_variable(&self) -> Option<u32> {
        if !self.constant.is_zero() || self.coeffs.len() != 1 {
            return None;
        }
        let (&id, coeff) = self.coeffs.iter().next().unwrap();
        coeff.is_one().then_some(id)
    }

    pub fn add(&self, rhs: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.constant = &out.constant + &rhs.constant;
        for (&id, c) in &rhs.coeffs {
            let v = match out.coeffs.remove(&id) {
                Some(existing) => &existing + c,
                None => c.clone(),
            };
            if !v.is_zero() {
                out.coeffs.insert(id, v);
            }
        }
        out
    }

    pub fn scale(&self, s: &Scalar) -> AffineExpr {
        if s.is_zero() {
            return AffineExpr::zero(self.mode());
        }
        let coeffs = self.coeffs.iter().map(|(&id, c)| (id, c * s)).collect();
        AffineExpr { constant: &self.constant * s, coeffs }
    }

    pub fn add_scaled(&self, rhs: &AffineExpr, s: &Scalar) -> AffineExpr {
        self.add(&rhs.scale(s))
    }

    /// Sum of |constant| and |coefficients| in the f64 image; the gross
    /// magnitude of the expression before any cancellation.
    pub fn gross_magnitude(&self) -> f64 {
        self.constant.to_f64().abs()
            + self.coeffs.values().map(|c| c.to_f64().abs()).sum::<f64>()
    }

    /// Drop float-mode terms at or below `threshold` in absolute value.
    /// No-op in rational mode, where pruning is exact by construction.
    pub fn pruned_below(&self, threshold: f64) -> AffineExpr {
        if self.mode() == ScalarMode::Rational {
            return self.clone();
        }
        let constant = if self.constant.to_f64().abs() <= threshold {
            Scalar::zero(ScalarMode::Float)
        } else {
            self.constant.clone()
        };
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(_, c)| c.to_f64().abs() > threshold)
            .map(|(&id, c)| (id, c.clone()))
            .collect();
        AffineExpr { constant, coeffs }
    }

    /// Evaluate under an assignment; every stored variable must be assigned.
    pub fn eval(&self, assignment: &BTreeMap<u32, Scalar>) -> Result<Scalar> {
        let mut acc = self.constant.clone();
        for (id, c) in &self.coeffs {
            let v = assignment.get(id).ok_or_else(|| {
                Error::InvalidSystem(format!("unassigned construction variable d_{id}"))
            })?;
            acc = acc + c * v;
        }
        Ok(acc)
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut wrote = false;
        if !self.constant.is_zero() {
            write!(f, "{}", self.constant)?;
            wrote = true;
        }
        for (id, c) in &self.coeffs {
            if wrote {
                write!(f, " + ")?;
            }
            write!(f, "{}*d{}", c, id)?;
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}
