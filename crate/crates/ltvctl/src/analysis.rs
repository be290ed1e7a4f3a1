//! Controllability and observability certificates, and the decoupling term
//! `c_k adj(A_k) b_k` whose nonvanishing licenses output-feedback
//! nullification.

use crate::error::Result;
use crate::matrix::{dot, Matrix};
use crate::scalar::{Scalar, ScalarMode, Tol};
use crate::system::LtvSystem;

/// Controllability matrix
/// `W_k = [ b_k, A_k b_{k-1}, A_k A_{k-1} b_{k-2}, ..., A_k ... A_{k-n+2} b_{k-n+1} ]`.
pub fn controllability_matrix(sys: &LtvSystem, k: i64) -> Result<Matrix> {
    let n = sys.dim();
    let mut w = Matrix::zeros(n, n, sys.mode());
    // Column j (0-based) is A_k ... A_{k-j+1} b_{k-j}; build the product
    // incrementally while walking j upward.
    let mut prefix: Option<Matrix> = None;
    for j in 0..n {
        let col_src = sys.b(k - j as i64)?.to_vec();
        let col = match &prefix {
            None => col_src,
            Some(p) => p.mat_vec(&col_src),
        };
        w.set_column(j, &col);
        if j + 1 < n {
            let a = sys.a(k - j as i64)?;
            prefix = Some(match prefix {
                None => a.clone(),
                Some(p) => p.mul(a),
            });
        }
    }
    Ok(w)
}

/// Observability matrix with rows `c_k, c_{k+1} A_k, ..., c_{k+n-1} A_{k+n-2} ... A_k`.
pub fn observability_matrix(sys: &LtvSystem, k: i64) -> Result<Matrix> {
    let n = sys.dim();
    let mut rows = Vec::with_capacity(n);
    let mut prefix: Option<Matrix> = None;
    for i in 0..n {
        let c = sys.c(k + i as i64)?.to_vec();
        let row = match &prefix {
            None => c,
            Some(p) => Matrix::vec_mat(&c, p),
        };
        rows.push(row);
        if i + 1 < n {
            let a = sys.a(k + i as i64)?;
            prefix = Some(match prefix {
                None => a.clone(),
                Some(p) => a.mul(&p),
            });
        }
    }
    Ok(Matrix::from_rows(rows))
}

/// Per-index nonsingularity evidence: the exact determinant in rational
/// mode, the singular-value interval in float mode.
#[derive(Debug, Clone)]
pub enum RankEvidence {
    ExactDeterminant(Scalar),
    SingularValues { min: f64, max: f64 },
}

impl RankEvidence {
    pub fn summary(&self) -> String {
        match self {
            RankEvidence::ExactDeterminant(d) => format!("det = {d}"),
            RankEvidence::SingularValues { min, max } => {
                format!("min_sv = {min:.6e}, max_sv = {max:.6e}")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct IndexDiagnostic {
    pub k: i64,
    pub nonsingular: bool,
    pub evidence: RankEvidence,
}

/// Verdict over a range plus the per-index diagnostics it was derived from.
#[derive(Debug, Clone)]
pub struct RangeVerdict {
    pub verdict: bool,
    pub diagnostics: Vec<IndexDiagnostic>,
}

impl RangeVerdict {
    /// First index that failed, if any.
    pub fn first_failure(&self) -> Option<i64> {
        self.diagnostics.iter().find(|d| !d.nonsingular).map(|d| d.k)
    }
}

fn diagnose(m: &Matrix, k: i64, tol: &Tol) -> IndexDiagnostic {
    match m.mode() {
        ScalarMode::Rational => {
            let d = m.det();
            IndexDiagnostic {
                k,
                nonsingular: !d.is_zero(),
                evidence: RankEvidence::ExactDeterminant(d),
            }
        }
        ScalarMode::Float => {
            let (min, max) = m.singular_value_range();
            IndexDiagnostic {
                k,
                nonsingular: max > 0.0 && min >= tol.rel * max,
                evidence: RankEvidence::SingularValues { min, max },
            }
        }
    }
}

/// Check `W_k` nonsingular for every `k` in `[k_lo, k_hi]`.
pub fn is_completely_controllable(
    sys: &LtvSystem,
    k_lo: i64,
    k_hi: i64,
    tol: &Tol,
) -> Result<RangeVerdict> {
    let mut diagnostics = Vec::new();
    for k in k_lo..=k_hi {
        let w = controllability_matrix(sys, k)?;
        diagnostics.push(diagnose(&w, k, tol));
    }
    Ok(RangeVerdict { verdict: diagnostics.iter().all(|d| d.nonsingular), diagnostics })
}

/// Check the stacked-rows observability certificate for every `k` in
/// `[k_lo, k_hi]`: with known controls the map from `x_k` to the next `n`
/// observations is affine with this matrix as its linear part, so
/// nonsingularity is equivalent to unique recovery of the state.
pub fn is_completely_observable(
    sys: &LtvSystem,
    k_lo: i64,
    k_hi: i64,
    tol: &Tol,
) -> Result<RangeVerdict> {
    let mut diagnostics = Vec::new();
    for k in k_lo..=k_hi {
        let o = observability_matrix(sys, k)?;
        diagnostics.push(diagnose(&o, k, tol));
    }
    Ok(RangeVerdict { verdict: diagnostics.iter().all(|d| d.nonsingular), diagnostics })
}

/// The scalar `c_k adj(A_k) b_k`.
pub fn decoupling_term(sys: &LtvSystem, k: i64) -> Result<Scalar> {
    let step = sys.step(k)?;
    Ok(dot(&step.c, &step.a.adjugate().mat_vec(&step.b)))
}

/// Scale against which a float-mode decoupling value should be judged:
/// `|c| * |adj A| * |b|` before cancellation.
pub fn decoupling_scale(sys: &LtvSystem, k: i64) -> Result<f64> {
    let step = sys.step(k)?;
    let c_norm = crate::matrix::vec_norm_f64(&step.c);
    let b_norm = crate::matrix::vec_norm_f64(&step.b);
    let adj_norm = step.a.adjugate().max_abs() * (sys.dim() as f64);
    Ok(c_norm * b_norm * adj_norm.max(1.0))
}
