//! Combinatorial identities behind preservation of controllability under
//! sampling: positivity of the coefficient-matrix determinants
//! `det((k+i)^{m_j} - (k+i-1)^{m_j})` and the expansion of the m-th
//! derivative at zero of
//! `f(delta) = det[ int psi over ((k+i-1) delta, (k+i) delta) ]_i`
//! as a sum over ordered index tuples with multinomial weights.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::matrix::Matrix;
use crate::scalar::{Scalar, ScalarMode};

fn validate_orders(m: &[u32]) -> Result<()> {
    if m.is_empty() {
        return Err(Error::InvalidSystem("order list must be nonempty".into()));
    }
    if m[0] == 0 || m.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidSystem(
            "orders must be strictly increasing positive integers".into(),
        ));
    }
    Ok(())
}

/// `det( (k+i)^{m_j} - (k+i-1)^{m_j} )_{i,j=1..n}` for `k >= 0` and strictly
/// increasing positive integer orders; positive for every such input, with
/// the generalized Vandermonde case at `k = 0`.
pub fn coeff_matrix_det(k: &Scalar, m: &[u32]) -> Result<Scalar> {
    validate_orders(m)?;
    if k.to_f64() < 0.0 {
        return Err(Error::InvalidSystem("k must be nonnegative".into()));
    }
    let n = m.len();
    let mode = k.mode();
    let one = Scalar::one(mode);
    let mut mat = Matrix::zeros(n, n, mode);
    for i in 0..n {
        let base_hi = k + &Scalar::from_int(i as i64 + 1, mode);
        let base_lo = &base_hi - &one;
        for (j, &mj) in m.iter().enumerate() {
            mat[(i, j)] = base_hi.powu(mj) - base_lo.powu(mj);
        }
    }
    Ok(mat.det())
}

/// Both sides of the derivative identity.
#[derive(Debug, Clone)]
pub struct DerivativeIdentity {
    /// m-th derivative at zero of `f(delta)`, exact for polynomial `psi`,
    /// high-order finite differences otherwise.
    pub lhs: Scalar,
    /// The combinatorial sum over ordered tuples.
    pub rhs: Scalar,
    /// Whether the comparison is exact rational arithmetic.
    pub exact: bool,
}

/// Largest derivative order the finite-difference fallback accepts.
pub const DEFAULT_FD_MAX: u32 = 8;

/// Compare the m-th derivative at zero of
/// `f(delta) = det[g_1(delta), ..., g_n(delta)]`,
/// `g_i(delta) = int_{(k+i-1) delta}^{(k+i) delta} psi(t) dt`,
/// against the sum over `0 < m_1 < ... < m_n`, `sum m_i = m` of
/// `multinomial(m; m_1..m_n) * det(c(i, m_j)) * det[psi^(m_1-1)(0), ...]`
/// with `c(i, l) = (k+i)^l - (k+i-1)^l`.
///
/// Polynomial `psi` takes the exact route (both sides rational). Otherwise
/// `f` is differentiated by symmetric finite differences, which caps `m` at
/// `fd_max`.
pub fn f_derivative_check(
    psi: &[Expr],
    k: i64,
    m: u32,
    fd_max: u32,
) -> Result<DerivativeIdentity> {
    let n = psi.len();
    if n == 0 {
        return Err(Error::InvalidSystem("psi must have at least one component".into()));
    }
    if k < 0 {
        return Err(Error::InvalidSystem("k must be nonnegative".into()));
    }
    if m == 0 {
        return Err(Error::InvalidSystem("derivative order must be positive".into()));
    }

    let polys: Option<Vec<Vec<BigRational>>> =
        psi.iter().map(Expr::as_polynomial).collect();

    match polys {
        Some(polys) => {
            let lhs = exact_lhs(&polys, k, m);
            let rhs = exact_rhs(psi, k, m, n);
            Ok(DerivativeIdentity {
                lhs: Scalar::Rational(lhs),
                rhs: Scalar::Rational(rhs),
                exact: true,
            })
        }
        None => {
            if m > fd_max {
                return Err(Error::InvalidSystem(format!(
                    "derivative order {m} exceeds the finite-difference cap {fd_max} for non-polynomial psi"
                )));
            }
            let lhs = fd_lhs(psi, k, m, n);
            let rhs = float_rhs(psi, k, m, n);
            Ok(DerivativeIdentity {
                lhs: Scalar::Float(lhs),
                rhs: Scalar::Float(rhs),
                exact: false,
            })
        }
    }
}

// ---- exact route -----------------------------------------------------

type Poly = Vec<BigRational>;

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

fn poly_axpy(acc: &mut Poly, sign: i32, term: &Poly) {
    if acc.len() < term.len() {
        acc.resize(term.len(), BigRational::zero());
    }
    for (i, c) in term.iter().enumerate() {
        if sign > 0 {
            acc[i] += c;
        } else {
            acc[i] -= c;
        }
    }
}

/// Determinant of a matrix of polynomials by cofactor expansion along the
/// first column; dimensions here never exceed four.
fn poly_det(mat: &[Vec<Poly>]) -> Poly {
    let n = mat.len();
    if n == 1 {
        return mat[0][0].clone();
    }
    let mut acc: Poly = vec![BigRational::zero()];
    for i in 0..n {
        let mut minor = Vec::with_capacity(n - 1);
        for (r, row) in mat.iter().enumerate() {
            if r == i {
                continue;
            }
            minor.push(row[1..].to_vec());
        }
        let term = poly_mul(&mat[i][0], &poly_det(&minor));
        poly_axpy(&mut acc, if i % 2 == 0 { 1 } else { -1 }, &term);
    }
    acc
}

fn int_pow(base: i64, e: u32) -> BigInt {
    BigInt::from(base).pow(e)
}

fn exact_lhs(polys: &[Vec<BigRational>], k: i64, m: u32) -> BigRational {
    let n = polys.len();
    // Column i entry j: sum_r p_{j,r} / (r+1) * c(i, r+1) * delta^(r+1).
    let mut mat: Vec<Vec<Poly>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = Vec::with_capacity(n);
        for i in 1..=n as i64 {
            let mut entry: Poly = vec![BigRational::zero()];
            for (r, p) in polys[j].iter().enumerate() {
                if p.is_zero() {
                    continue;
                }
                let deg = r as u32 + 1;
                let c = int_pow(k + i, deg) - int_pow(k + i - 1, deg);
                let coeff = p * BigRational::new(c, BigInt::from(deg));
                if entry.len() <= deg as usize {
                    entry.resize(deg as usize + 1, BigRational::zero());
                }
                entry[deg as usize] += coeff;
            }
            row.push(entry);
        }
        mat.push(row);
    }
    let f = poly_det(&mat);
    let coeff = f.get(m as usize).cloned().unwrap_or_else(BigRational::zero);
    coeff * BigRational::from_integer(factorial(m))
}

fn factorial(m: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=m as u64 {
        acc *= BigInt::from(i);
    }
    acc
}

fn ordered_tuples(n: usize, m: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(n);
    fn rec(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, n: usize, remaining: u32, min_next: u32) {
        if current.len() == n {
            if remaining == 0 {
                out.push(current.clone());
            }
            return;
        }
        let slots_left = (n - current.len()) as u32;
        // The remaining entries are strictly increasing from v, so they use
        // at least v + (v+1) + ... ; prune when that already overshoots.
        let mut v = min_next;
        loop {
            let min_use = v * slots_left + slots_left * (slots_left - 1) / 2;
            if min_use > remaining {
                break;
            }
            current.push(v);
            rec(out, current, n, remaining - v, v + 1);
            current.pop();
            v += 1;
        }
    }
    rec(&mut out, &mut current, n, m, 1);
    out
}

fn multinomial(m: u32, parts: &[u32]) -> BigInt {
    let mut num = factorial(m);
    for &p in parts {
        num /= factorial(p);
    }
    num
}

fn exact_rhs(psi: &[Expr], k: i64, m: u32, n: usize) -> BigRational {
    // Derivatives of psi at zero, exact (psi is polynomial here).
    let max_order = m as usize;
    let mut derivs: Vec<Vec<BigRational>> = Vec::with_capacity(max_order);
    let zero = BigRational::zero();
    let mut current: Vec<Expr> = psi.to_vec();
    for _ in 0..max_order {
        derivs.push(
            current
                .iter()
                .map(|e| e.eval_exact(&zero).expect("polynomials evaluate exactly"))
                .collect(),
        );
        current = current.iter().map(Expr::derivative).collect();
    }

    let mut acc = BigRational::zero();
    for tuple in ordered_tuples(n, m) {
        let coeff_det = coeff_det_exact(k, &tuple);
        if coeff_det.is_zero() {
            continue;
        }
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for &mj in &tuple {
                row.push(Scalar::Rational(derivs[(mj - 1) as usize][i].clone()));
            }
            rows.push(row);
        }
        let psi_det = Matrix::from_rows(rows).det();
        let Scalar::Rational(psi_det) = psi_det else { unreachable!() };
        acc += BigRational::from_integer(multinomial(m, &tuple)) * coeff_det * psi_det;
    }
    acc
}

fn coeff_det_exact(k: i64, m: &[u32]) -> BigRational {
    let n = m.len();
    let rows: Vec<Vec<Scalar>> = (1..=n as i64)
        .map(|i| {
            m.iter()
                .map(|&mj| {
                    Scalar::Rational(BigRational::from_integer(
                        int_pow(k + i, mj) - int_pow(k + i - 1, mj),
                    ))
                })
                .collect()
        })
        .collect();
    let Scalar::Rational(det) = Matrix::from_rows(rows).det() else { unreachable!() };
    det
}

// ---- finite-difference route ------------------------------------------

/// Composite Simpson quadrature; the integrands are analytic and the
/// intervals short, so a fixed fine grid reaches near machine precision.
fn integrate_component(e: &Expr, a: f64, b: f64) -> f64 {
    const PANELS: usize = 128;
    let h = (b - a) / (2 * PANELS) as f64;
    let mut acc = e.eval_f64(a) + e.eval_f64(b);
    for i in 1..2 * PANELS {
        let t = a + i as f64 * h;
        acc += e.eval_f64(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn f_value(psi: &[Expr], k: i64, n: usize, delta: f64) -> f64 {
    let mut mat = Matrix::zeros(n, n, ScalarMode::Float);
    for i in 0..n {
        let lo = (k + i as i64) as f64 * delta;
        let hi = (k + i as i64 + 1) as f64 * delta;
        for j in 0..n {
            mat[(j, i)] = Scalar::Float(integrate_component(&psi[j], lo, hi));
        }
    }
    mat.det().to_f64()
}

/// Fornberg weights for the `m`-th derivative at `x0` on the given nodes.
fn fornberg_weights(x: &[f64], x0: f64, m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - x0;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for s in (1..=mn).rev() {
                    c[i][s] = c1 * (s as f64 * c[i - 1][s - 1] - c5 * c[i - 1][s]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for s in (1..=mn).rev() {
                c[j][s] = (c4 * c[j][s] - s as f64 * c[j][s - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[m]).collect()
}

fn fd_lhs(psi: &[Expr], k: i64, m: u32, n: usize) -> f64 {
    // Symmetric stencil with at least ninth-order accuracy beyond m.
    let mut points = m as usize + 9;
    if points % 2 == 0 {
        points += 1;
    }
    let half = (points / 2) as i64;
    let h = 0.08;
    let nodes: Vec<f64> = (-half..=half).map(|i| i as f64 * h).collect();
    let weights = fornberg_weights(&nodes, 0.0, m as usize);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&d, &w)| w * f_value(psi, k, n, d))
        .sum()
}

fn float_rhs(psi: &[Expr], k: i64, m: u32, n: usize) -> f64 {
    let mut derivs: Vec<Vec<f64>> = Vec::with_capacity(m as usize);
    let mut current: Vec<Expr> = psi.to_vec();
    for _ in 0..m {
        derivs.push(current.iter().map(|e| e.eval_f64(0.0)).collect());
        current = current.iter().map(Expr::derivative).collect();
    }
    let mut acc = 0.0;
    for tuple in ordered_tuples(n, m) {
        let coeff_det = coeff_det_exact(k, &tuple).to_f64().unwrap_or(f64::NAN);
        if coeff_det == 0.0 {
            continue;
        }
        let mut mat = Matrix::zeros(n, n, ScalarMode::Float);
        for i in 0..n {
            for (j, &mj) in tuple.iter().enumerate() {
                mat[(i, j)] = Scalar::Float(derivs[(mj - 1) as usize][i]);
            }
        }
        let multi = multinomial(m, &tuple).to_f64().unwrap_or(f64::NAN);
        acc += multi * coeff_det * mat.det().to_f64();
    }
    acc
}
