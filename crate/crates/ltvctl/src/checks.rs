//! The invariant suite behind the `check` subcommand: construction
//! bookkeeping, decoupling-term invariance, coefficient-matrix positivity
//! and the derivative identity, all on seeded random instances.

use crate::canonical::{apply_equivalence, invariance_residual};
use crate::comb::{coeff_matrix_det, f_derivative_check, DEFAULT_FD_MAX};
use crate::error::Result;
use crate::expr::Expr;
use crate::gen;
use crate::nullify::{nullify_state, NullifyOptions};
use crate::scalar::{Scalar, ScalarMode};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Run every invariant family and collect one outcome per family.
pub fn run_invariant_suite(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        construction_checks(seed)?,
        invariance_checks(seed)?,
        positivity_checks()?,
        derivative_identity_checks()?,
    ])
}

/// d-monotonicity, the one-step lemma, the k0 bound and the window
/// structure, plus exact terminal zeros, across random nullification runs.
fn construction_checks(seed: u64) -> Result<CheckOutcome> {
    let mut rng = gen::rng_from_seed(seed);
    let mut runs = 0usize;
    let mut violations = Vec::new();
    for n in 1..=3usize {
        for period in [1i64, 2, 3] {
            for _ in 0..3 {
                let sys = gen::random_nullifiable(&mut rng, n, period, ScalarMode::Rational)?;
                let x0 = gen::random_state(&mut rng, n, ScalarMode::Rational);
                let opts = NullifyOptions { seed: seed ^ runs as u64, ..Default::default() };
                let outcome = match nullify_state(&sys, 0, &x0, &opts) {
                    Ok(o) => o,
                    Err(e) => {
                        violations.push(format!("n={n} p={period}: pipeline failed: {e}"));
                        continue;
                    }
                };
                runs += 1;
                let d = &outcome.trace.d;
                for t in 0..d.len() - n {
                    if d[t] > d[t + n] {
                        violations.push(format!("n={n}: d({t}) > d({})", t + n));
                    }
                }
                for t in 0..d.len() - n - 1 {
                    if d[t] == d[t + n] && d[t + n + 1] < d[t + n] {
                        violations.push(format!("n={n}: lemma fails at {t}"));
                    }
                }
                if outcome.k0 > n.pow(3) + n.pow(2) {
                    violations.push(format!("n={n}: k0 = {} beyond bound", outcome.k0));
                }
                if outcome.steps > crate::nullify::single_state_bound(n) {
                    violations.push(format!("n={n}: {} steps beyond bound", outcome.steps));
                }
                if !outcome.trajectory.final_state().iter().all(Scalar::is_zero) {
                    violations.push(format!("n={n}: terminal state not zero"));
                }
            }
        }
    }
    Ok(CheckOutcome {
        name: "construction bookkeeping (d-monotonicity, lemma, k0 bound, terminal zero)",
        passed: violations.is_empty(),
        detail: if violations.is_empty() {
            format!("{runs} nullification runs clean")
        } else {
            violations.join("; ")
        },
    })
}

/// `det(T_{k+1}) c~ adj(A~) b~ = det(T_k) c adj(A) b` on random equivalent
/// pairs, exactly.
fn invariance_checks(seed: u64) -> Result<CheckOutcome> {
    let mut rng = gen::rng_from_seed(seed.wrapping_add(1));
    let mut pairs = 0usize;
    let mut violations = Vec::new();
    for n in 1..=3usize {
        for _ in 0..17 {
            let sys = gen::random_periodic(&mut rng, n, 3, ScalarMode::Rational);
            let t = gen::random_transform(&mut rng, n, 0, 4, ScalarMode::Rational);
            let tilde = apply_equivalence(&sys, &t)?;
            for (k, r) in invariance_residual(&sys, &tilde, &t)? {
                pairs += 1;
                if !r.is_zero() {
                    violations.push(format!("n={n}, k={k}: residual {r}"));
                }
            }
        }
    }
    Ok(CheckOutcome {
        name: "decoupling-term invariance under algebraic equivalence",
        passed: violations.is_empty(),
        detail: if violations.is_empty() {
            format!("{pairs} residuals exactly zero")
        } else {
            violations.join("; ")
        },
    })
}

/// `det((k+i)^{m_j} - (k+i-1)^{m_j}) > 0` over the exhaustive small grid.
fn positivity_checks() -> Result<CheckOutcome> {
    let ks = [
        Scalar::from_int(0, ScalarMode::Rational),
        Scalar::from_ratio(1, 2, ScalarMode::Rational),
        Scalar::from_int(1, ScalarMode::Rational),
        Scalar::from_int(2, ScalarMode::Rational),
        Scalar::from_int(10, ScalarMode::Rational),
    ];
    let mut checked = 0usize;
    let mut violations = Vec::new();
    for n in 1..=4usize {
        for m in increasing_tuples(n, 8) {
            for k in &ks {
                let det = coeff_matrix_det(k, &m)?;
                checked += 1;
                if det.to_f64() <= 0.0 {
                    violations.push(format!("k={k}, m={m:?}: det = {det}"));
                }
            }
        }
    }
    Ok(CheckOutcome {
        name: "coefficient-matrix determinant positivity",
        passed: violations.is_empty(),
        detail: if violations.is_empty() {
            format!("{checked} determinants positive")
        } else {
            violations.join("; ")
        },
    })
}

fn increasing_tuples(n: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, n: usize, next: u32, max: u32) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for v in next..=max {
            cur.push(v);
            rec(out, cur, n, v + 1, max);
            cur.pop();
        }
    }
    rec(&mut out, &mut cur, n, 1, max);
    out
}

/// Exact agreement of both sides of the derivative identity for polynomial
/// curves, including the worked value 6 for psi = (1, t), m = 3.
fn derivative_identity_checks() -> Result<CheckOutcome> {
    let cases: Vec<(Vec<Expr>, i64)> = vec![
        (vec![Expr::constant_i64(1), Expr::Time], 1),
        (vec![Expr::constant_i64(1), Expr::Time], 4),
        (
            vec![Expr::constant_i64(1), Expr::Time, Expr::pow(Expr::Time, 2)],
            1,
        ),
        (
            vec![
                Expr::sub(Expr::constant_i64(2), Expr::Time),
                Expr::pow(Expr::Time, 2),
                Expr::add(Expr::Time, Expr::pow(Expr::Time, 3)),
            ],
            2,
        ),
    ];
    let mut checked = 0usize;
    let mut violations = Vec::new();
    for (psi, k) in &cases {
        for m in 1..=9u32 {
            let id = f_derivative_check(psi, *k, m, DEFAULT_FD_MAX)?;
            checked += 1;
            if !id.exact || id.lhs != id.rhs {
                violations.push(format!("k={k}, m={m}: lhs = {} rhs = {}", id.lhs, id.rhs));
            }
        }
    }
    let worked = f_derivative_check(&[Expr::constant_i64(1), Expr::Time], 1, 3, DEFAULT_FD_MAX)?;
    checked += 1;
    if worked.lhs != Scalar::from_int(6, ScalarMode::Rational) || worked.lhs != worked.rhs {
        violations.push(format!("worked value: lhs = {} rhs = {}", worked.lhs, worked.rhs));
    }
    Ok(CheckOutcome {
        name: "derivative identity for polynomial curves",
        passed: violations.is_empty(),
        detail: if violations.is_empty() {
            format!("{checked} identities exact")
        } else {
            violations.join("; ")
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn the_suite_passes_on_seed_zero() {
        let outcomes = run_invariant_suite(0).unwrap();
        assert_eq!(outcomes.len(), 4);
        for o in &outcomes {
            assert!(o.passed, "{}: {}", o.name, o.detail);
        }
    }
}
