//! Time-varying controller canonical form.
//!
//! The canonical coefficients come from `W_k^-1 A_k W_{k-1} e_n`, the
//! transform from `T_k = W~_{k-1} W_{k-1}^-1`, where `W~` is the
//! controllability matrix of the canonical system itself. The companion
//! structure of the output is imposed exactly (zeros and ones are written,
//! not computed); the residual between `T_{k+1} A_k T_k^-1` and the imposed
//! matrix is reported as a quality metric.

use std::collections::BTreeMap;

use crate::analysis::controllability_matrix;
use crate::error::{Error, Result};
use crate::matrix::{basis_vector, Matrix};
use crate::scalar::{Scalar, ScalarMode, Tol};
use crate::system::{Extension, LtvSystem, StepTriple};

/// A finite sequence of invertible coordinate changes `x~_k = T_k x_k`.
#[derive(Debug, Clone)]
pub struct EquivalenceTransform {
    k_lo: i64,
    k_hi: i64,
    t: BTreeMap<i64, Matrix>,
}

impl EquivalenceTransform {
    /// Build from a contiguous map of matrices, validating invertibility
    /// under the scalar policy.
    pub fn new(t: BTreeMap<i64, Matrix>, tol: &Tol) -> Result<Self> {
        let (&k_lo, _) = t
            .first_key_value()
            .ok_or_else(|| Error::InvalidSystem("empty transform".into()))?;
        let (&k_hi, _) = t.last_key_value().unwrap();
        if t.len() as i64 != k_hi - k_lo + 1 {
            return Err(Error::InvalidSystem("transform indices must be contiguous".into()));
        }
        for (&k, m) in &t {
            if !m.is_square() {
                return Err(Error::DimensionMismatch(format!("T_{k} is not square")));
            }
            if !m.is_nonsingular(tol) {
                return Err(Error::SingularTransform { k });
            }
        }
        Ok(EquivalenceTransform { k_lo, k_hi, t })
    }

    pub fn identity(n: usize, k_lo: i64, k_hi: i64, mode: ScalarMode) -> Self {
        let t = (k_lo..=k_hi).map(|k| (k, Matrix::identity(n, mode))).collect();
        EquivalenceTransform { k_lo, k_hi, t }
    }

    pub fn k_lo(&self) -> i64 {
        self.k_lo
    }

    pub fn k_hi(&self) -> i64 {
        self.k_hi
    }

    pub fn matrix(&self, k: i64) -> Result<&Matrix> {
        self.t.get(&k).ok_or(Error::IndexOutOfRange { k, k_min: self.k_lo, k_max: self.k_hi })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &Matrix)> {
        self.t.iter()
    }

    /// The pointwise inverse sequence; applying both recovers the original
    /// system exactly in rational mode.
    pub fn inverse(&self) -> Result<EquivalenceTransform> {
        let mut t = BTreeMap::new();
        for (&k, m) in &self.t {
            t.insert(k, m.inverse().map_err(|_| Error::SingularTransform { k })?);
        }
        Ok(EquivalenceTransform { k_lo: self.k_lo, k_hi: self.k_hi, t })
    }

    /// Transport a state at time `k` into the new coordinates.
    pub fn transport(&self, k: i64, x: &[Scalar]) -> Result<Vec<Scalar>> {
        Ok(self.matrix(k)?.mat_vec(x))
    }
}

/// Reason the companion-structure check failed, if it did.
pub fn check_canonical_form(sys: &LtvSystem) -> Result<()> {
    let n = sys.dim();
    let lo = sys.k_min();
    let hi = sys.k_max();
    for k in lo..=hi {
        let step = sys.step(k)?;
        for i in 0..n {
            for j in 0..n {
                let v = &step.a[(i, j)];
                if i + 1 < n {
                    let want_one = j == i + 1;
                    if want_one && !v.is_one() {
                        return Err(Error::NotCanonical(format!(
                            "A_{k}[{i},{j}] must be 1, got {v}"
                        )));
                    }
                    if !want_one && !v.is_zero() {
                        return Err(Error::NotCanonical(format!(
                            "A_{k}[{i},{j}] must be 0, got {v}"
                        )));
                    }
                }
            }
        }
        for (i, v) in step.b.iter().enumerate() {
            let ok = if i + 1 == n { v.is_one() } else { v.is_zero() };
            if !ok {
                return Err(Error::NotCanonical(format!("b_{k}[{i}] must be e_n, got {v}")));
            }
        }
    }
    Ok(())
}

pub fn is_canonical_form(sys: &LtvSystem) -> bool {
    check_canonical_form(sys).is_ok()
}

fn inverted_controllability(sys: &LtvSystem, k: i64, tol: &Tol) -> Result<(Matrix, Matrix)> {
    let w = controllability_matrix(sys, k)?;
    if !w.is_nonsingular(tol) {
        return Err(Error::SingularControllability { k });
    }
    if sys.mode() == ScalarMode::Float {
        let cond = w.condition_estimate();
        // T_k = W~ W^-1 squares the conditioning through the pipeline;
        // refuse to continue when the digits are already gone.
        if cond > 1.0 / tol.rel {
            return Err(Error::IllConditioned { k, cond });
        }
    }
    let w_inv = w.inverse().map_err(|_| Error::SingularControllability { k })?;
    Ok((w, w_inv))
}

/// Raw canonical coefficient vector
/// `(alpha_{k,1}, alpha_{k-1,2}, ..., alpha_{k-n+1,n}) = W_k^-1 A_k W_{k-1} e_n`.
///
/// Entry `i` (0-based) belongs to time row `k - i`; assembling the last row
/// of the canonical `A~_j` therefore reads entry `i` of the vector computed
/// at `k = j + i`.
pub fn canonical_coefficients(sys: &LtvSystem, k: i64, tol: &Tol) -> Result<Vec<Scalar>> {
    let n = sys.dim();
    let (_, wk_inv) = inverted_controllability(sys, k, tol)?;
    let w_prev = controllability_matrix(sys, k - 1)?;
    if !w_prev.is_nonsingular(tol) {
        return Err(Error::SingularControllability { k: k - 1 });
    }
    let e_n = basis_vector(n, n - 1, sys.mode());
    let v = sys.a(k)?.mat_vec(&w_prev.mat_vec(&e_n));
    Ok(wk_inv.mat_vec(&v))
}

/// Result of [`canonical_transform`].
#[derive(Debug, Clone)]
pub struct CanonicalDecomposition {
    /// The system in controller canonical form over the requested range.
    pub canonical: LtvSystem,
    /// Transform over `[k_lo, k_hi + 1]`, one index past the system range so
    /// the equivalence can be applied across every step.
    pub transform: EquivalenceTransform,
    /// Largest |entry| of `T_{k+1} A_k T_k^-1 - A~_k` over the range, in the
    /// f64 image. Exactly zero in rational mode.
    pub max_structure_residual: f64,
}

/// Compute the controller canonical form of `sys` on `[k_lo, k_hi]`.
///
/// Needs `W_j` nonsingular for `j` in `[k_lo - n, k_hi + n - 1]`, which in
/// turn needs the source resolvable on `[k_lo - 2n + 1, k_hi + n - 1]`;
/// windowed systems therefore lose a `2n - 1` lead-in and an `n - 1`
/// lead-out relative to their window.
pub fn canonical_transform(
    sys: &LtvSystem,
    k_lo: i64,
    k_hi: i64,
    tol: &Tol,
) -> Result<CanonicalDecomposition> {
    if k_lo > k_hi {
        return Err(Error::InvalidSystem(format!("empty range [{k_lo}, {k_hi}]")));
    }
    let n = sys.dim() as i64;
    let nu = sys.dim();
    let mode = sys.mode();

    let mut w_inv = BTreeMap::new();
    for j in (k_lo - n)..=(k_hi + n - 1) {
        w_inv.insert(j, inverted_controllability(sys, j, tol)?.1);
    }

    // Raw coefficient vectors, then the per-time alpha rows.
    let e_n = basis_vector(nu, nu - 1, mode);
    let mut raw = BTreeMap::new();
    for j in (k_lo - n + 1)..=(k_hi + n - 1) {
        let w_prev = controllability_matrix(sys, j - 1)?;
        let v = sys.a(j)?.mat_vec(&w_prev.mat_vec(&e_n));
        raw.insert(j, w_inv[&j].mat_vec(&v));
    }
    let mut alpha = BTreeMap::new();
    for j in (k_lo - n + 1)..=k_hi {
        let row: Vec<Scalar> = (0..nu).map(|i| raw[&(j + i as i64)][i].clone()).collect();
        alpha.insert(j, row);
    }

    let companion = |row: &[Scalar]| {
        let mut a = Matrix::zeros(nu, nu, mode);
        for i in 0..nu.saturating_sub(1) {
            a[(i, i + 1)] = Scalar::one(mode);
        }
        for j in 0..nu {
            a[(nu - 1, j)] = row[j].clone();
        }
        a
    };

    // Controllability matrices of the canonical data: column m of W~_j is
    // A~_j A~_{j-1} ... A~_{j-m+1} b~, accumulated left to right. Columns
    // are shifts of e_n, so W~ is skew lower triangular with a unit
    // anti-diagonal.
    let mut w_tilde = BTreeMap::new();
    for j in (k_lo - 1)..=k_hi {
        let mut w = Matrix::zeros(nu, nu, mode);
        w.set_column(0, &e_n);
        let mut prefix: Option<Matrix> = None;
        for m in 1..nu {
            let factor = companion(&alpha[&(j - m as i64 + 1)]);
            let product = match prefix {
                None => factor,
                Some(p) => p.mul(&factor),
            };
            w.set_column(m, &product.mat_vec(&e_n));
            prefix = Some(product);
        }
        w_tilde.insert(j, w);
    }

    let mut t = BTreeMap::new();
    for k in k_lo..=(k_hi + 1) {
        t.insert(k, w_tilde[&(k - 1)].mul(&w_inv[&(k - 1)]));
    }
    let transform = EquivalenceTransform::new(t, tol)?;

    let b_tilde = e_n.clone();
    let mut steps = BTreeMap::new();
    let mut max_residual: f64 = 0.0;
    for k in k_lo..=k_hi {
        let a_imposed = companion(&alpha[&k]);
        let t_k = transform.matrix(k)?;
        let t_k_inv = t_k.inverse().map_err(|_| Error::SingularTransform { k })?;
        let t_next = transform.matrix(k + 1)?;
        let a_computed = t_next.mul(sys.a(k)?).mul(&t_k_inv);
        max_residual = max_residual.max(a_computed.sub(&a_imposed).max_abs());
        let c_tilde = Matrix::vec_mat(sys.c(k)?, &t_k_inv);
        steps.insert(k, StepTriple { a: a_imposed, b: b_tilde.clone(), c: c_tilde });
    }
    let canonical = LtvSystem::new(nu, k_lo, k_hi, steps, Extension::None)?;
    Ok(CanonicalDecomposition { canonical, transform, max_structure_residual: max_residual })
}

/// Apply `(T_{k+1} A_k T_k^-1, T_{k+1} b_k, c_k T_k^-1)` over the transform's
/// range; the output window is `[k_lo, k_hi - 1]`.
pub fn apply_equivalence(sys: &LtvSystem, transform: &EquivalenceTransform) -> Result<LtvSystem> {
    if transform.k_hi <= transform.k_lo {
        return Err(Error::InvalidSystem(
            "transform must cover at least two indices to produce one step".into(),
        ));
    }
    let mut steps = BTreeMap::new();
    for k in transform.k_lo..transform.k_hi {
        let step = sys.step(k)?;
        let t_k = transform.matrix(k)?;
        let t_k_inv = t_k.inverse().map_err(|_| Error::SingularTransform { k })?;
        let t_next = transform.matrix(k + 1)?;
        steps.insert(
            k,
            StepTriple {
                a: t_next.mul(&step.a).mul(&t_k_inv),
                b: t_next.mat_vec(&step.b),
                c: Matrix::vec_mat(&step.c, &t_k_inv),
            },
        );
    }
    LtvSystem::new(sys.dim(), transform.k_lo, transform.k_hi - 1, steps, Extension::None)
}

/// Per-index residual of the decoupling-term invariance law
/// `det(T_k) c~_k adj(A~_k) b~_k - det(T_{k+1}) c_k adj(A_k) b_k`,
/// which is identically zero for algebraically equivalent pairs: the
/// adjugate transports as
/// `adj(A~_k) = (det T_{k+1} / det T_k) T_k adj(A_k) T_{k+1}^-1`,
/// so `c~ adj(A~) b~ = (det T_{k+1} / det T_k) c adj(A) b`.
pub fn invariance_residual(
    sys_a: &LtvSystem,
    sys_b: &LtvSystem,
    transform: &EquivalenceTransform,
) -> Result<Vec<(i64, Scalar)>> {
    if sys_a.dim() != sys_b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "systems have dimensions {} and {}",
            sys_a.dim(),
            sys_b.dim()
        )));
    }
    let mut out = Vec::new();
    for k in transform.k_lo..transform.k_hi {
        let da = crate::analysis::decoupling_term(sys_a, k)?;
        let db = crate::analysis::decoupling_term(sys_b, k)?;
        let det_k = transform.matrix(k)?.det();
        let det_next = transform.matrix(k + 1)?.det();
        out.push((k, det_k * db - det_next * da));
    }
    Ok(out)
}

/// First coordinate of `c~_k`, which vanishes exactly when the decoupling
/// term of the source system does.
pub fn leading_observation_coordinate(canonical: &LtvSystem, k: i64) -> Result<Scalar> {
    Ok(canonical.c(k)?[0].clone())
}
