//! Seeded random test instances: periodic systems with small integer
//! entries, filtered for the structural properties the algorithms assume.
//! Used by the `check` subcommand and the acceptance suite; fixed seeds
//! keep every run reproducible.

use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::analysis::{decoupling_term, is_completely_controllable, is_completely_observable};
use crate::canonical::EquivalenceTransform;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Scalar, ScalarMode, Tol};
use crate::system::{Extension, LtvSystem, StepTriple};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn draw_int(rng: &mut ChaCha8Rng, span: i64) -> i64 {
    (rng.next_u64() % (2 * span as u64 + 1)) as i64 - span
}

fn draw_nonzero(rng: &mut ChaCha8Rng, span: i64) -> i64 {
    let raw = (rng.next_u64() % (2 * span as u64)) as i64 - span;
    if raw >= 0 {
        raw + 1
    } else {
        raw
    }
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize, mode: ScalarMode) -> Vec<Scalar> {
    (0..n).map(|_| Scalar::from_int(draw_int(rng, 4), mode)).collect()
}

fn random_step(rng: &mut ChaCha8Rng, n: usize, mode: ScalarMode) -> StepTriple {
    let mut a = Matrix::zeros(n, n, mode);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = Scalar::from_int(draw_int(rng, 3), mode);
        }
    }
    let b = (0..n).map(|_| Scalar::from_int(draw_int(rng, 3), mode)).collect();
    let c = (0..n).map(|_| Scalar::from_int(draw_int(rng, 3), mode)).collect();
    StepTriple { a, b, c }
}

/// A periodic system with entries drawn from small integers; no structural
/// guarantees beyond valid dimensions.
pub fn random_periodic(
    rng: &mut ChaCha8Rng,
    n: usize,
    period: i64,
    mode: ScalarMode,
) -> LtvSystem {
    let steps: BTreeMap<i64, StepTriple> =
        (0..period).map(|k| (k, random_step(rng, n, mode))).collect();
    LtvSystem::new(n, 0, period - 1, steps, Extension::Periodic(period))
        .expect("generated dimensions are consistent")
}

const MAX_TRIES: usize = 20_000;

/// Periodic and completely controllable over the whole of `Z` (checked over
/// one period, which periodicity makes sufficient).
pub fn random_controllable(
    rng: &mut ChaCha8Rng,
    n: usize,
    period: i64,
    mode: ScalarMode,
) -> Result<LtvSystem> {
    let tol = Tol::default();
    for _ in 0..MAX_TRIES {
        let sys = random_periodic(rng, n, period, mode);
        let ok = is_completely_controllable(&sys, 0, period - 1, &tol)?.verdict
            && well_conditioned(&sys, period);
        if ok {
            return Ok(sys);
        }
    }
    Err(Error::InvalidSystem("could not draw a completely controllable system".into()))
}

/// Float-mode transforms square the conditioning of W; keep generated
/// instances comfortably away from that cliff so both modes can share them.
fn well_conditioned(sys: &LtvSystem, period: i64) -> bool {
    (0..period).all(|k| {
        crate::analysis::controllability_matrix(sys, k)
            .map(|w| w.condition_estimate() < 1e6)
            .unwrap_or(false)
    })
}

/// Periodic, completely controllable, completely observable, and with a
/// nowhere-vanishing decoupling term: everything nullification needs.
pub fn random_nullifiable(
    rng: &mut ChaCha8Rng,
    n: usize,
    period: i64,
    mode: ScalarMode,
) -> Result<LtvSystem> {
    let tol = Tol::default();
    for _ in 0..MAX_TRIES {
        let sys = random_periodic(rng, n, period, mode);
        if !is_completely_controllable(&sys, 0, period - 1, &tol)?.verdict
            || !well_conditioned(&sys, period)
        {
            continue;
        }
        if !is_completely_observable(&sys, 0, period - 1, &tol)?.verdict {
            continue;
        }
        if (0..period).any(|k| decoupling_term(&sys, k).map(|d| d.is_zero()).unwrap_or(true)) {
            continue;
        }
        return Ok(sys);
    }
    Err(Error::InvalidSystem(
        "could not draw a controllable, observable system with nonzero decoupling term".into(),
    ))
}

fn random_invertible_matrix(rng: &mut ChaCha8Rng, n: usize, mode: ScalarMode) -> Matrix {
    loop {
        let mut m = Matrix::zeros(n, n, mode);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = Scalar::from_int(draw_int(rng, 3), mode);
            }
        }
        // Nudge the diagonal to keep determinants away from zero.
        for i in 0..n {
            if m[(i, i)].is_zero() {
                m[(i, i)] = Scalar::from_int(draw_nonzero(rng, 3), mode);
            }
        }
        if !m.det().is_zero() && m.condition_estimate() < 1e6 {
            return m;
        }
    }
}

/// A random invertible transform sequence over `[k_lo, k_hi]`.
pub fn random_transform(
    rng: &mut ChaCha8Rng,
    n: usize,
    k_lo: i64,
    k_hi: i64,
    mode: ScalarMode,
) -> EquivalenceTransform {
    let map: BTreeMap<i64, Matrix> =
        (k_lo..=k_hi).map(|k| (k, random_invertible_matrix(rng, n, mode))).collect();
    EquivalenceTransform::new(map, &Tol::default()).expect("matrices are invertible by construction")
}
