//! Acceptance suite. Each criterion runs as one test, pinned to its stated
//! tolerances and time budgets, and prints a PASS line (visible under
//! `cargo test --test acceptance -- --nocapture`).

use std::time::Instant;

use ltvctl::analysis::{controllability_matrix, decoupling_scale, decoupling_term};
use ltvctl::canonical::{apply_equivalence, canonical_transform, invariance_residual, is_canonical_form};
use ltvctl::comb::{coeff_matrix_det, f_derivative_check, DEFAULT_FD_MAX};
use ltvctl::ct::{delta_sweep, discretize, vanishing_decoupling_example, CtSystem};
use ltvctl::expr::Expr;
use ltvctl::gen;
use ltvctl::nullify::{
    all_states_bound, nullify_all, nullify_state, single_state_bound, NullifyOptions,
};
use ltvctl::scalar::{Scalar, ScalarMode, Tol};
use ltvctl::system::LtvSystem;

const RATIONAL: ScalarMode = ScalarMode::Rational;

fn seeded_controllable_batch() -> Vec<(usize, LtvSystem)> {
    // 108 systems: n in 1..=4, periods 1..=3, nine draws each.
    let mut out = Vec::new();
    for n in 1..=4usize {
        for period in 1..=3i64 {
            let mut rng = gen::rng_from_seed(1000 + (n as u64) * 10 + period as u64);
            for _ in 0..9 {
                out.push((n, gen::random_controllable(&mut rng, n, period, RATIONAL).unwrap()));
            }
        }
    }
    out
}

#[test]
fn criterion_1_canonical_form() {
    let start = Instant::now();
    let tol = Tol::default();
    let batch = seeded_controllable_batch();
    assert!(batch.len() >= 100, "need at least 100 systems, built {}", batch.len());

    for (n, sys) in &batch {
        let span = *n as i64 + 2;
        // Exact route.
        let dec = canonical_transform(sys, 0, span, &tol).unwrap();
        assert!(is_canonical_form(&dec.canonical), "companion structure must be exact");
        assert_eq!(dec.max_structure_residual, 0.0, "rational residual must be exactly zero");
        let direct = apply_equivalence(sys, &dec.transform).unwrap();
        for k in 0..=span {
            assert_eq!(
                direct.step(k).unwrap(),
                dec.canonical.step(k).unwrap(),
                "apply_equivalence must reproduce the canonical system exactly"
            );
        }

        // Float route on the same data.
        let fsys = sys.to_float_mode();
        let fdec = canonical_transform(&fsys, 0, span, &tol).unwrap();
        assert!(is_canonical_form(&fdec.canonical));
        let fdirect = apply_equivalence(&fsys, &fdec.transform).unwrap();
        for k in 0..=span {
            let a = fdirect.step(k).unwrap();
            let b = fdec.canonical.step(k).unwrap();
            let scale = a
                .a
                .max_abs()
                .max(ltvctl::matrix::vec_norm_f64(&a.c))
                .max(1.0);
            for (x, y) in a
                .a
                .iter()
                .chain(a.b.iter())
                .chain(a.c.iter())
                .zip(b.a.iter().chain(b.b.iter()).chain(b.c.iter()))
            {
                assert!(
                    (x.to_f64() - y.to_f64()).abs() <= 1e-8 * scale,
                    "float residual beyond 1e-8 relative (n = {n})"
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "criterion 1 took {elapsed:?}, budget 10 s");
    println!(
        "ACCEPTANCE 1 (canonical form): PASS ({} systems, n in 1..=4, exact + float, {elapsed:?})",
        batch.len()
    );
}

fn seeded_nullifiable_batch() -> Vec<(usize, u64, LtvSystem)> {
    // 54 systems: n in 1..=3, periods 1..=3, six draws each.
    let mut out = Vec::new();
    for n in 1..=3usize {
        for period in 1..=3i64 {
            let seed = 2000 + (n as u64) * 10 + period as u64;
            let mut rng = gen::rng_from_seed(seed);
            for draw in 0..6u64 {
                let sys = gen::random_nullifiable(&mut rng, n, period, RATIONAL).unwrap();
                out.push((n, seed * 100 + draw, sys));
            }
        }
    }
    out
}

#[test]
fn criterion_2_nullification_bounds() {
    let start = Instant::now();
    let batch = seeded_nullifiable_batch();
    assert!(batch.len() >= 50, "need at least 50 systems, built {}", batch.len());

    for (n, seed, sys) in &batch {
        let opts = NullifyOptions { seed: *seed, ..Default::default() };
        let mut rng = gen::rng_from_seed(*seed);
        let x0 = gen::random_state(&mut rng, *n, RATIONAL);

        let outcome = nullify_state(sys, 0, &x0, &opts).unwrap();
        assert!(
            outcome.trajectory.final_state().iter().all(Scalar::is_zero),
            "terminal state must be exactly zero (n = {n}, seed = {seed})"
        );
        assert!(
            outcome.steps <= single_state_bound(*n),
            "nullify_state took {} steps, bound {} (n = {n})",
            outcome.steps,
            single_state_bound(*n)
        );

        let all = nullify_all(sys, 0, &opts).unwrap();
        assert!(
            all.closed_loop_product.iter().all(Scalar::is_zero),
            "closed-loop product must be the exact zero matrix (n = {n}, seed = {seed})"
        );
        assert!(
            all.schedule.len() <= all_states_bound(*n),
            "nullify_all used {} steps, bound {}",
            all.schedule.len(),
            all_states_bound(*n)
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 2 took {elapsed:?}, budget 60 s");
    println!(
        "ACCEPTANCE 2 (nullification bounds): PASS ({} systems, n in 1..=3, exact zeros within n^3+n^2+n and n^4+n^3+n^2, {elapsed:?})",
        batch.len()
    );
}

#[test]
fn criterion_3_construction_claims() {
    // The same seeded runs as criterion 2, inspected at the trace level.
    let batch = seeded_nullifiable_batch();
    let mut traces = 0usize;
    for (n, seed, sys) in &batch {
        let opts = NullifyOptions { seed: *seed, ..Default::default() };
        let mut rng = gen::rng_from_seed(*seed);
        let x0 = gen::random_state(&mut rng, *n, RATIONAL);
        let outcome = nullify_state(sys, 0, &x0, &opts).unwrap();
        let trace = &outcome.trace;
        let k0 = outcome.k0;
        traces += 1;

        for t in 0..trace.d.len() - n {
            assert!(
                trace.d[t] <= trace.d[t + n],
                "d({t}) > d({}) in an accepted trace (n = {n})",
                t + n
            );
        }
        assert!(k0 <= n.pow(3) + n.pow(2), "k0 = {k0} beyond n^3 + n^2 (n = {n})");
        for step in k0..=k0 + n {
            for (i, entry) in trace.states[step].iter().enumerate() {
                if entry.is_identically_zero() {
                    continue;
                }
                let expected = step as i64 - *n as i64 + i as i64 + 1;
                let bare = entry.as_bare_variable();
                assert!(
                    expected >= 1
                        && bare == Some(expected as u32)
                        && trace.active[expected as usize],
                    "entry {i} of x_{step} is neither zero nor the bare active variable d_{expected}: {entry}"
                );
            }
        }
    }
    println!(
        "ACCEPTANCE 3 (construction claims): PASS ({traces} traces, d-monotonicity, k0 bound, bare-or-zero window)"
    );
}

#[test]
fn criterion_4_invariance() {
    let mut pairs = 0usize;
    for n in 1..=3usize {
        let mut rng = gen::rng_from_seed(4000 + n as u64);
        for _ in 0..34 {
            let sys = gen::random_periodic(&mut rng, n, 3, RATIONAL);
            let t = gen::random_transform(&mut rng, n, 0, 4, RATIONAL);
            let tilde = apply_equivalence(&sys, &t).unwrap();
            for (k, r) in invariance_residual(&sys, &tilde, &t).unwrap() {
                assert!(r.is_zero(), "nonzero residual {r} at k = {k} (n = {n})");
            }
            pairs += 1;
        }
    }
    assert!(pairs >= 100);
    println!("ACCEPTANCE 4 (decoupling invariance): PASS ({pairs} equivalent pairs, residuals exactly zero)");
}

fn rotation_system() -> CtSystem {
    CtSystem::new(
        vec![
            vec![Expr::zero(), Expr::constant_i64(1)],
            vec![Expr::constant_i64(-1), Expr::zero()],
        ],
        vec![Expr::zero(), Expr::constant_i64(1)],
        vec![Expr::constant_i64(1), Expr::zero()],
    )
    .unwrap()
}

#[test]
fn criterion_5_rotation_sweep() {
    let start = Instant::now();
    let ct = rotation_system();
    let count = 200usize;
    let spacing = 3.5 / count as f64;
    let grid: Vec<f64> = (1..=count).map(|i| i as f64 * spacing).collect();

    let report = delta_sweep(&ct, &grid, 0, 1, 1e-10, &Tol::default()).unwrap();
    for row in &report.rows {
        if (row.delta - std::f64::consts::PI).abs() >= spacing {
            assert!(
                row.min_singular_value >= 1e-6,
                "min singular value dipped below 1e-6 away from pi (delta = {})",
                row.delta
            );
        }
    }
    // Closed-form comparison of the zero-order-hold input vector.
    for &delta in &grid {
        let sampled = discretize(&ct, delta, 0, 1, 1e-10).unwrap();
        let b = sampled.system.b(0).unwrap();
        let err = ((b[0].to_f64() - (1.0 - delta.cos())).powi(2)
            + (b[1].to_f64() - delta.sin()).powi(2))
        .sqrt();
        assert!(err <= 1e-8, "b_delta off by {err} at delta = {delta}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "criterion 5 took {elapsed:?}, budget 10 s");
    println!(
        "ACCEPTANCE 5 (rotation sweep): PASS (200 periods, singular only at |delta - pi| < {spacing:.4}, closed-form b within 1e-8, {elapsed:?})"
    );
}

#[test]
fn criterion_6_vanishing_decoupling_example() {
    let mut points = 0usize;
    for n in [2usize, 3] {
        for k in [1i64, 2] {
            let ct = vanishing_decoupling_example(n, k).unwrap();
            let lo = k - n as i64 + 1;
            for i in 1..=20 {
                let delta = i as f64 * 0.1;
                let sampled = discretize(&ct, delta, lo, k, 1e-11).unwrap();
                let dec = decoupling_term(&sampled.system, k).unwrap().to_f64();
                let scale = decoupling_scale(&sampled.system, k).unwrap();
                assert!(
                    dec.abs() <= 1e-10 * scale,
                    "decoupling {dec} above 1e-10 * {scale} (n = {n}, k = {k}, delta = {delta})"
                );
                let w = controllability_matrix(&sampled.system, k).unwrap();
                assert!(
                    w.is_nonsingular(&Tol::default()),
                    "W_k singular at n = {n}, k = {k}, delta = {delta}"
                );
                points += 1;
            }
        }
    }
    println!(
        "ACCEPTANCE 6 (vanishing decoupling example): PASS ({points} grid points, |c adj(A) b| <= 1e-10 scale with W nonsingular)"
    );
}

#[test]
fn criterion_7_combinatorics() {
    // Exhaustive positivity over n <= 4, orders <= 8, five k values.
    let ks = [
        Scalar::from_int(0, RATIONAL),
        Scalar::from_ratio(1, 2, RATIONAL),
        Scalar::from_int(1, RATIONAL),
        Scalar::from_int(2, RATIONAL),
        Scalar::from_int(10, RATIONAL),
    ];
    let mut dets = 0usize;
    for n in 1..=4usize {
        let mut stack = vec![Vec::<u32>::new()];
        while let Some(cur) = stack.pop() {
            if cur.len() == n {
                for k in &ks {
                    let det = coeff_matrix_det(k, &cur).unwrap();
                    assert!(det.to_f64() > 0.0, "det <= 0 at k = {k}, m = {cur:?}");
                    dets += 1;
                }
                continue;
            }
            let next_min = cur.last().map_or(1, |v| v + 1);
            for v in next_min..=8 {
                let mut ext = cur.clone();
                ext.push(v);
                stack.push(ext);
            }
        }
    }

    // Exact derivative identity for polynomial curves up to n = 3, m <= 9.
    let cases: Vec<(Vec<Expr>, i64)> = vec![
        (vec![Expr::constant_i64(1), Expr::Time], 1),
        (vec![Expr::constant_i64(1), Expr::Time], 2),
        (vec![Expr::constant_i64(1), Expr::Time, Expr::pow(Expr::Time, 2)], 1),
        (
            vec![
                Expr::add(Expr::constant_i64(1), Expr::Time),
                Expr::pow(Expr::Time, 2),
                Expr::sub(Expr::Time, Expr::pow(Expr::Time, 3)),
            ],
            2,
        ),
    ];
    let mut identities = 0usize;
    for (psi, k) in &cases {
        for m in 1..=9u32 {
            let id = f_derivative_check(psi, *k, m, DEFAULT_FD_MAX).unwrap();
            assert!(id.exact);
            assert_eq!(id.lhs, id.rhs, "identity fails for k = {k}, m = {m}");
            identities += 1;
        }
    }
    let worked = f_derivative_check(&[Expr::constant_i64(1), Expr::Time], 1, 3, DEFAULT_FD_MAX).unwrap();
    assert_eq!(worked.lhs, Scalar::from_int(6, RATIONAL));
    assert_eq!(worked.rhs, Scalar::from_int(6, RATIONAL));
    println!(
        "ACCEPTANCE 7 (combinatorics): PASS ({dets} positive determinants, {identities} exact identities, worked value 6)"
    );
}

/// Scaling-and-squaring matrix exponential, the independent oracle for
/// constant-coefficient discretization: scale so the norm is small, run the
/// Taylor series to convergence, square back up.
fn expm_oracle(a: &nalgebra::DMatrix<f64>, t: f64) -> nalgebra::DMatrix<f64> {
    let n = a.nrows();
    let scaled = a * t;
    let norm = scaled.iter().map(|v| v.abs()).fold(0.0f64, f64::max) * n as f64;
    let squarings = norm.max(1e-300).log2().ceil().max(0.0) as u32 + 1;
    let small = &scaled / 2f64.powi(squarings as i32);
    let mut result = nalgebra::DMatrix::<f64>::identity(n, n);
    let mut term = nalgebra::DMatrix::<f64>::identity(n, n);
    for order in 1..=24 {
        term = (&term * &small) / order as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

#[test]
fn criterion_8_constant_coefficient_consistency() {
    let mut rng = gen::rng_from_seed(8000);
    for case in 0..20 {
        // Entries are quarter-integer values in [-1, 1], exact in f64.
        let mut a_exprs = Vec::new();
        let mut a_f64 = nalgebra::DMatrix::<f64>::zeros(3, 3);
        for i in 0..3 {
            let mut row = Vec::new();
            for j in 0..3 {
                let v = gen::random_state(&mut rng, 1, RATIONAL)[0].to_f64() as i64;
                row.push(Expr::ratio(v, 4));
                a_f64[(i, j)] = v as f64 / 4.0;
            }
            a_exprs.push(row);
        }
        let ct = CtSystem::new(
            a_exprs,
            vec![Expr::constant_i64(1), Expr::zero(), Expr::constant_i64(1)],
            vec![Expr::constant_i64(1), Expr::zero(), Expr::zero()],
        )
        .unwrap();
        let delta = 0.2 + 0.03 * case as f64;
        let sampled = discretize(&ct, delta, 0, 0, 1e-12).unwrap();
        let want = expm_oracle(&a_f64, delta);
        let got = sampled.system.a(0).unwrap();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((got[(i, j)].to_f64() - want[(i, j)]).abs());
            }
        }
        assert!(
            worst <= 1e-9,
            "discretized A differs from the matrix exponential by {worst} (case {case})"
        );
    }
    println!(
        "ACCEPTANCE 8 (constant-coefficient consistency): PASS (20 random 3x3 cases within 1e-9 of scaling-and-squaring expm)"
    );
}
