//! Continuous-time analytic systems and their zero-order-hold sampling.
//!
//! `A(t), b(t), c(t)` are expression trees. The fundamental matrix comes
//! from integrating `X' = A(t) X`; the sampled input vector rides along as
//! the augmented state `v' = A v + b` with `v(t_k) = 0`, which is the
//! variation-of-constants integral without any inner fundamental-matrix
//! solves. Sweeps over the sampling period expose the isolated periods
//! where controllability or the decoupling term degenerates.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::analysis::{controllability_matrix, decoupling_scale, decoupling_term};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::matrix::Matrix;
use crate::ode::{integrate, OdeReport};
use crate::scalar::{Scalar, ScalarMode, Tol};
use crate::system::{Extension, LtvSystem, StepTriple};

/// Continuous-time SISO system with closed-form coefficients.
#[derive(Debug, Clone)]
pub struct CtSystem {
    n: usize,
    a: Vec<Vec<Expr>>,
    b: Vec<Expr>,
    c: Vec<Expr>,
}

impl CtSystem {
    pub fn new(a: Vec<Vec<Expr>>, b: Vec<Expr>, c: Vec<Expr>) -> Result<Self> {
        let n = a.len();
        if n == 0 {
            return Err(Error::InvalidSystem("state dimension must be positive".into()));
        }
        if a.iter().any(|row| row.len() != n) || b.len() != n || c.len() != n {
            return Err(Error::DimensionMismatch(
                "A must be n x n and b, c must have length n".into(),
            ));
        }
        Ok(CtSystem { n, a, b, c })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> &[Vec<Expr>] {
        &self.a
    }

    pub fn b(&self) -> &[Expr] {
        &self.b
    }

    pub fn c(&self) -> &[Expr] {
        &self.c
    }

    fn eval_a(&self, t: f64, out: &mut [f64]) {
        for (i, row) in self.a.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                out[i * self.n + j] = e.eval_f64(t);
            }
        }
    }
}

/// Fundamental matrix `Phi(t1, t0)` solving `X' = A(t) X`, `X(t0) = I`.
pub fn transition(ct: &CtSystem, t1: f64, t0: f64, tol: f64) -> Result<(Matrix, OdeReport)> {
    let n = ct.dim();
    let mut a_buf = vec![0.0; n * n];
    let mut y0 = vec![0.0; n * n];
    for i in 0..n {
        y0[i * n + i] = 1.0;
    }
    let (y, report) = integrate(
        |t, y, dy| {
            ct.eval_a(t, &mut a_buf);
            // dX = A X, flattened row major.
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += a_buf[i * n + l] * y[l * n + j];
                    }
                    dy[i * n + j] = acc;
                }
            }
        },
        t0,
        t1,
        y0,
        tol,
    )?;
    let mut m = Matrix::zeros(n, n, ScalarMode::Float);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = Scalar::Float(y[i * n + j]);
        }
    }
    Ok((m, report))
}

/// Per-sample integrator evidence collected by [`discretize`].
#[derive(Debug, Clone)]
pub struct SampleReport {
    pub k: i64,
    pub steps_accepted: usize,
    pub max_error_estimate: f64,
    /// Fundamental matrices are invertible; this records how far from
    /// singular the computed `A_delta(k)` actually is.
    pub min_singular_value: f64,
    pub invertible: bool,
}

/// A zero-order-hold sampled system together with its integration evidence.
#[derive(Debug, Clone)]
pub struct SampledSystem {
    pub delta: f64,
    pub system: LtvSystem,
    pub reports: Vec<SampleReport>,
}

/// Sample with period `delta` over sample indices `[k_lo, k_hi]`:
/// `A_delta(k) = Phi(t_{k+1}, t_k)`, `b_delta(k)` is the zero-order-hold
/// integral computed from the augmented system, and `c_delta(k) = c(k delta)`.
pub fn discretize(ct: &CtSystem, delta: f64, k_lo: i64, k_hi: i64, tol: f64) -> Result<SampledSystem> {
    if !(delta > 0.0) {
        return Err(Error::InvalidSystem(format!("sampling period must be positive, got {delta}")));
    }
    if k_lo > k_hi {
        return Err(Error::InvalidSystem(format!("empty sample range [{k_lo}, {k_hi}]")));
    }
    let n = ct.dim();
    let policy = Tol::default();
    let mut steps = BTreeMap::new();
    let mut reports = Vec::with_capacity((k_hi - k_lo + 1) as usize);
    let mut a_buf = vec![0.0; n * n];
    for k in k_lo..=k_hi {
        let t_k = k as f64 * delta;
        let t_next = (k + 1) as f64 * delta;
        // Augmented state [X | v]: X' = A X, v' = A v + b, v(t_k) = 0.
        let mut y0 = vec![0.0; n * n + n];
        for i in 0..n {
            y0[i * n + i] = 1.0;
        }
        let (y, report) = integrate(
            |t, y, dy| {
                ct.eval_a(t, &mut a_buf);
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for l in 0..n {
                            acc += a_buf[i * n + l] * y[l * n + j];
                        }
                        dy[i * n + j] = acc;
                    }
                }
                for i in 0..n {
                    let mut acc = ct.b[i].eval_f64(t);
                    for l in 0..n {
                        acc += a_buf[i * n + l] * y[n * n + l];
                    }
                    dy[n * n + i] = acc;
                }
            },
            t_k,
            t_next,
            y0,
            tol,
        )?;
        let mut a = Matrix::zeros(n, n, ScalarMode::Float);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = Scalar::Float(y[i * n + j]);
            }
        }
        let b: Vec<Scalar> = (0..n).map(|i| Scalar::Float(y[n * n + i])).collect();
        let c: Vec<Scalar> = ct.c.iter().map(|e| Scalar::Float(e.eval_f64(t_k))).collect();
        let (min_sv, max_sv) = a.singular_value_range();
        reports.push(SampleReport {
            k,
            steps_accepted: report.steps_accepted,
            max_error_estimate: report.max_error_estimate,
            min_singular_value: min_sv,
            invertible: max_sv > 0.0 && min_sv >= policy.rel * max_sv,
        });
        steps.insert(k, StepTriple { a, b, c });
    }
    let system = LtvSystem::new(n, k_lo, k_hi, steps, Extension::None)?;
    Ok(SampledSystem { delta, system, reports })
}

/// Continuous-time controllability matrix `[p_0(t), ..., p_{n-1}(t)]` with
/// `p_0 = b` and `p_{j+1} = A p_j + p_j'`, evaluated at `t`.
///
/// In rational mode the evaluation must be exact (polynomial entries, or
/// transcendentals evaluated at zero); otherwise request float mode.
pub fn continuous_controllability_matrix(
    ct: &CtSystem,
    t: &Scalar,
) -> Result<Matrix> {
    let n = ct.dim();
    let mut columns: Vec<Vec<Expr>> = Vec::with_capacity(n);
    columns.push(ct.b.to_vec());
    for _ in 1..n {
        let prev = columns.last().unwrap();
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = prev[i].derivative();
            for (j, p) in prev.iter().enumerate() {
                acc = Expr::add(acc, Expr::mul(ct.a[i][j].clone(), p.clone()));
            }
            next.push(acc);
        }
        columns.push(next);
    }
    let mut m = Matrix::zeros(n, n, t.mode());
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            let value = match t {
                Scalar::Float(tf) => Scalar::Float(col[i].eval_f64(*tf)),
                Scalar::Rational(tr) => Scalar::Rational(col[i].eval_exact(tr).ok_or_else(|| {
                    Error::InvalidSystem(
                        "expression does not evaluate exactly; use float mode".into(),
                    )
                })?),
            };
            m[(i, j)] = value;
        }
    }
    Ok(m)
}

/// One `(delta, k)` cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub delta: f64,
    pub k: i64,
    pub min_singular_value: f64,
    pub decoupling: f64,
    /// Magnitude `|c| |adj A| |b|` against which the decoupling value is
    /// judged zero or not.
    pub decoupling_scale: f64,
    pub controllable_here: bool,
}

/// Per-delta outcome of a sweep.
#[derive(Debug, Clone)]
pub struct DeltaSummary {
    pub delta: f64,
    /// All `W_k` in range nonsingular under the float policy. Derived from
    /// the row diagnostics, never stored independently of them.
    pub controllable: bool,
    pub decoupling_vanishes_everywhere: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<DeltaSummary>,
}

/// Discretize at every grid period and record, for each sample index where
/// a full controllability matrix exists, its minimum singular value and the
/// decoupling term. Integrator failures at one period are recorded and the
/// sweep continues. Grid periods are processed in parallel.
pub fn delta_sweep(
    ct: &CtSystem,
    grid: &[f64],
    k_lo: i64,
    k_hi: i64,
    tol: f64,
    zero_tol: &Tol,
) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(Error::InvalidSystem("empty sweep grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid[0] <= 0.0 {
        return Err(Error::InvalidSystem("sweep grid must be strictly increasing and positive".into()));
    }
    let n = ct.dim() as i64;
    if k_hi - k_lo + 1 < n {
        return Err(Error::InvalidSystem(format!(
            "sample range [{k_lo}, {k_hi}] is shorter than the state dimension"
        )));
    }

    let results: Vec<(Vec<SweepRow>, DeltaSummary)> = grid
        .par_iter()
        .map(|&delta| sweep_one(ct, delta, k_lo, k_hi, tol, zero_tol))
        .collect();

    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (r, s) in results {
        rows.extend(r);
        summaries.push(s);
    }
    Ok(SweepReport { rows, summaries })
}

fn sweep_one(
    ct: &CtSystem,
    delta: f64,
    k_lo: i64,
    k_hi: i64,
    tol: f64,
    zero_tol: &Tol,
) -> (Vec<SweepRow>, DeltaSummary) {
    let n = ct.dim() as i64;
    let sampled = match discretize(ct, delta, k_lo, k_hi, tol) {
        Ok(s) => s,
        Err(e) => {
            return (
                Vec::new(),
                DeltaSummary {
                    delta,
                    controllable: false,
                    decoupling_vanishes_everywhere: false,
                    error: Some(e.to_string()),
                },
            );
        }
    };
    let mut rows = Vec::new();
    let mut all_controllable = true;
    let mut all_decoupling_zero = true;
    for k in (k_lo + n - 1)..=k_hi {
        let w = match controllability_matrix(&sampled.system, k) {
            Ok(w) => w,
            Err(e) => {
                return (
                    rows,
                    DeltaSummary {
                        delta,
                        controllable: false,
                        decoupling_vanishes_everywhere: false,
                        error: Some(e.to_string()),
                    },
                );
            }
        };
        let (min_sv, max_sv) = w.singular_value_range();
        let controllable_here = max_sv > 0.0 && min_sv >= zero_tol.rel * max_sv;
        let dec = decoupling_term(&sampled.system, k).map(|s| s.to_f64()).unwrap_or(f64::NAN);
        let scale = decoupling_scale(&sampled.system, k).unwrap_or(1.0);
        all_controllable &= controllable_here;
        all_decoupling_zero &= dec.abs() <= zero_tol.rel * scale;
        rows.push(SweepRow {
            delta,
            k,
            min_singular_value: min_sv,
            decoupling: dec,
            decoupling_scale: scale,
            controllable_here,
        });
    }
    (
        rows,
        DeltaSummary {
            delta,
            controllable: all_controllable,
            decoupling_vanishes_everywhere: all_decoupling_zero,
            error: None,
        },
    )
}

/// The worked degenerate observable: `A = 0`,
/// `b(t) = (1-n, 2t, 3t^2, ..., n t^{n-1})`, and `c(t)` tuned to a fixed
/// sample index `k` so that `c_delta(k) adj(A_delta(k)) b_delta(k) = 0` for
/// every sampling period, while the sampled system stays controllable.
pub fn vanishing_decoupling_example(n: usize, k: i64) -> Result<CtSystem> {
    if n < 2 {
        return Err(Error::InvalidSystem("the example needs n >= 2".into()));
    }
    if k <= 0 {
        return Err(Error::InvalidSystem("the example needs k >= 1".into()));
    }
    let a = vec![vec![Expr::zero(); n]; n];
    let mut b = Vec::with_capacity(n);
    b.push(Expr::constant_i64(1 - n as i64));
    for i in 2..=n {
        b.push(Expr::mul(
            Expr::constant_i64(i as i64),
            Expr::pow(Expr::Time, (i - 1) as u32),
        ));
    }
    let mut c = Vec::with_capacity(n);
    for i in 1..=n as i64 {
        // lambda_i = -(t/k)^(n-i) / ((k+1)^i - k^i)
        let denom = BigInt::from(k + 1).pow(i as u32) - BigInt::from(k).pow(i as u32);
        let coeff = -BigRational::new(
            BigInt::from(1),
            denom * BigInt::from(k).pow((n as i64 - i) as u32),
        );
        c.push(Expr::mul(
            Expr::Const(coeff),
            Expr::pow(Expr::Time, (n as i64 - i) as u32),
        ));
    }
    CtSystem::new(a, b, c)
}
