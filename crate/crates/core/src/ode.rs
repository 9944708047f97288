//! Dormand–Prince 5(4) integrator for autonomous systems with a post-step projection hook.

use nalgebra::DVector;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone)]
pub struct OdeOutcome {
    pub y: DVector<f64>,
    pub steps: usize,
    /// Largest value returned by the projection hook.
    pub max_drift: f64,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights (equal to the last row of `A`).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = rhs(y)` from `0` to `t_end` (either sign).
///
/// `project` is applied after every accepted step and returns the constraint
/// drift it removed.
pub fn integrate<F, P>(
    rhs: F,
    y0: &DVector<f64>,
    t_end: f64,
    opts: &OdeOptions,
    mut project: P,
) -> Result<OdeOutcome>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    P: FnMut(&mut DVector<f64>) -> f64,
{
    let mut y = y0.clone();
    if t_end == 0.0 {
        return Ok(OdeOutcome {
            y,
            steps: 0,
            max_drift: 0.0,
        });
    }
    debug_assert_eq!(C[6], 1.0);
    let dir = t_end.signum();
    let span = t_end.abs();
    let mut t = 0.0f64;
    let mut h = opts.initial_step.abs().min(span).max(f64::MIN_POSITIVE);
    let mut steps = 0usize;
    let mut max_drift = 0.0f64;
    let mut k: [DVector<f64>; 7] = std::array::from_fn(|_| DVector::zeros(y.len()));

    while t < span {
        if steps >= opts.max_steps {
            return Err(Error::IntegratorFailure {
                t: dir * t,
                step: h,
            });
        }
        let last = t + h >= span;
        if last {
            h = span - t;
        }
        let hs = dir * h;

        k[0] = rhs(&y);
        for stage in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate().take(stage) {
                let a = A[stage][j];
                if a != 0.0 {
                    ys.axpy(hs * a, kj, 1.0);
                }
            }
            k[stage] = rhs(&ys);
        }
        let mut y5 = y.clone();
        let mut err = DVector::zeros(y.len());
        for (s, ks) in k.iter().enumerate() {
            if B5[s] != 0.0 {
                y5.axpy(hs * B5[s], ks, 1.0);
            }
            let e = B5[s] - B4[s];
            if e != 0.0 {
                err.axpy(hs * e, ks, 1.0);
            }
        }

        let n = y.len().max(1) as f64;
        let err_norm = (err
            .iter()
            .zip(y.iter().zip(y5.iter()))
            .map(|(e, (a, b))| {
                let scale = opts.abs_tol + opts.rel_tol * a.abs().max(b.abs());
                (e / scale).powi(2)
            })
            .sum::<f64>()
            / n)
            .sqrt();

        if !err_norm.is_finite() {
            h *= 0.2;
        } else if err_norm <= 1.0 {
            t = if last { span } else { t + h };
            y = y5;
            max_drift = max_drift.max(project(&mut y));
            steps += 1;
            let factor = if err_norm == 0.0 {
                5.0
            } else {
                (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0);
        }
        if h < 1e-14 * span.max(1.0) && t < span {
            return Err(Error::IntegratorFailure {
                t: dir * t,
                step: h,
            });
        }
    }
    Ok(OdeOutcome {
        y,
        steps,
        max_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> OdeOptions {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            initial_step: 0.1,
            max_steps: 100_000,
        }
    }

    #[test]
    fn exponential_growth_and_decay() {
        let y0 = DVector::from_column_slice(&[1.0]);
        for t in [2.0, -2.0] {
            let out = integrate(|y| y.clone(), &y0, t, &opts(), |_| 0.0).unwrap();
            assert!((out.y[0] - f64::exp(t)).abs() < 1e-9 * f64::exp(t));
        }
    }

    #[test]
    fn harmonic_oscillator() {
        let y0 = DVector::from_column_slice(&[1.0, 0.0]);
        let rhs = |y: &DVector<f64>| DVector::from_column_slice(&[y[1], -y[0]]);
        let out = integrate(rhs, &y0, 10.0, &opts(), |_| 0.0).unwrap();
        assert!((out.y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((out.y[1] + 10f64.sin()).abs() < 1e-8);
        assert!(out.steps > 10);
    }

    #[test]
    fn zero_time_is_identity() {
        let y0 = DVector::from_column_slice(&[3.0]);
        let out = integrate(|y| y.clone(), &y0, 0.0, &opts(), |_| 0.0).unwrap();
        assert_eq!(out.y, y0);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn blow_up_is_an_error() {
        let y0 = DVector::from_column_slice(&[1.0]);
        let res = integrate(|y| y.map(|v| v * v), &y0, 2.0, &opts(), |_| 0.0);
        assert!(matches!(res, Err(Error::IntegratorFailure { .. })));
    }
}
