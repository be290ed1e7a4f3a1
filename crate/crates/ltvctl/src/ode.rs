//! Adaptive Dormand-Prince 5(4) integration for the fundamental-matrix and
//! zero-order-hold computations. Plain f64 state vectors; the right-hand
//! side is a closure so matrix and augmented systems share one driver.

use crate::error::{Error, Result};

/// What the integrator did on one call.
#[derive(Debug, Clone, Copy, Default)]
pub struct OdeReport {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Largest accepted local error estimate, in the mixed abs/rel norm.
    pub max_error_estimate: f64,
}

const MAX_STEPS: usize = 2_000_000;

// Dormand-Prince coefficients (7-stage FSAL pair of orders 5 and 4).
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t1` (either direction) with local
/// tolerance `tol` used as both the absolute and relative target.
pub fn integrate<F>(mut f: F, t0: f64, t1: f64, y0: Vec<f64>, tol: f64) -> Result<(Vec<f64>, OdeReport)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    assert!(tol > 0.0, "tolerance must be positive");
    let dim = y0.len();
    let mut report = OdeReport::default();
    if t0 == t1 || dim == 0 {
        return Ok((y0, report));
    }
    let span = t1 - t0;
    let direction = span.signum();
    let mut h = span / 100.0;
    let h_min = span.abs() * 1e-14 + f64::MIN_POSITIVE;

    let mut t = t0;
    let mut y = y0;
    let mut k = vec![vec![0.0; dim]; 7];
    let mut y_stage = vec![0.0; dim];
    f(t, &y, &mut k[0]);

    while (t1 - t) * direction > 0.0 {
        if report.steps_accepted + report.steps_rejected > MAX_STEPS {
            return Err(Error::StepBudgetExceeded { t0, t1 });
        }
        if h.abs() < h_min {
            return Err(Error::StepSizeUnderflow { t });
        }
        if (t + h - t1) * direction > 0.0 {
            h = t1 - t;
        }

        for stage in 0..6 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    acc += A[stage][j] * kj[i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            let ts = t + C[stage] * h;
            f(ts, &y_stage, &mut k[stage + 1]);
        }

        // 5th-order solution and embedded error estimate.
        let mut err_norm: f64 = 0.0;
        let mut y_new = vec![0.0; dim];
        for i in 0..dim {
            let mut acc5 = 0.0;
            let mut acc4 = 0.0;
            for j in 0..7 {
                acc5 += B5[j] * k[j][i];
                acc4 += B4[j] * k[j][i];
            }
            y_new[i] = y[i] + h * acc5;
            let scale = tol + tol * y[i].abs().max(y_new[i].abs());
            let e = h * (acc5 - acc4) / scale;
            err_norm += e * e;
        }
        err_norm = (err_norm / dim as f64).sqrt();

        if err_norm <= 1.0 {
            t += h;
            y = y_new;
            report.steps_accepted += 1;
            report.max_error_estimate = report.max_error_estimate.max(err_norm * tol);
            // FSAL: the seventh stage sits at (t + h, y_new) and becomes the
            // first stage of the next step. On rejection k[0] is untouched
            // and still holds f(t, y).
            k.swap(0, 6);
        } else {
            report.steps_rejected += 1;
        }

        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok((y, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_matches_closed_form() {
        let (y, rep) = integrate(|_, y, dy| dy[0] = y[0], 0.0, 1.0, vec![1.0], 1e-10).unwrap();
        assert!((y[0] - 1.0f64.exp()).abs() < 1e-9);
        assert!(rep.steps_accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_round_trip() {
        let f = |_: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let (y, _) = integrate(f, 0.0, std::f64::consts::TAU, vec![1.0, 0.0], 1e-11).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8);
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn backward_integration_works() {
        let (y, _) = integrate(|_, y, dy| dy[0] = y[0], 1.0, 0.0, vec![1.0f64.exp()], 1e-10).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let (y, rep) = integrate(|_, _, dy| dy[0] = 1.0, 2.0, 2.0, vec![7.0], 1e-10).unwrap();
        assert_eq!(y, vec![7.0]);
        assert_eq!(rep.steps_accepted, 0);
    }
}
