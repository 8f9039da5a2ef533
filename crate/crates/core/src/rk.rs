//! Embedded Dormand-Prince 5(4) stepper shared by the steady-state
//! shooting integrator and the ODE comparison oracle.
//!
//! The controller is the textbook one: componentwise error weighted by
//! `abs_tol + rel_tol * |y|`, step factor 0.9 * err^(-1/5) clamped to
//! [0.2, 5]. Accepted samples keep the derivative so callers can evaluate
//! the trajectory between steps with cubic Hermite interpolation (the
//! integrator's own dense-output order is not needed at the tolerances
//! used here).

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    pub dy: [f64; N],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RkStatus {
    Completed,
    /// |y[0]| crossed the caller's threshold; the crossing lies between the
    /// last two accepted samples.
    ThresholdExit { t_prev: f64, t: f64 },
    /// The caller's stop predicate fired at an accepted sample.
    Stopped { t: f64 },
    /// The controller drove the step below `min_step`. Callers decide
    /// whether this is an error or (for runs heading into a power
    /// singularity too steep for the threshold to be representable) the
    /// blow-up signature itself.
    Stalled { t: f64 },
}

pub(crate) struct RkOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Below this step size the run is declared stalled.
    pub min_step: f64,
    /// Magnitude of y[0] that terminates the run as a threshold exit.
    pub threshold: Option<f64>,
    pub max_steps: usize,
}

impl Default for RkOptions {
    fn default() -> Self {
        RkOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            min_step: 1e-14,
            threshold: None,
            max_steps: 10_000_000,
        }
    }
}

pub(crate) struct RkRun<const N: usize> {
    pub samples: Vec<Sample<N>>,
    pub status: RkStatus,
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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
/// Fifth-order weights (row 7 of A: the last stage is the solution).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded fourth-order weights for the error estimate.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates y' = f(t, y) from (t0, y0) to t_end.
///
/// `stop` is evaluated at accepted samples and ends the run early without
/// flagging an error (used for zero-crossing detection in shooting).
pub(crate) fn integrate<const N: usize>(
    mut f: impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    opts: &RkOptions,
    mut stop: impl FnMut(f64, &[f64; N]) -> bool,
) -> Result<RkRun<N>> {
    if !(t_end > t0) {
        return Err(Error::invalid(format!(
            "integration span ({t0}, {t_end}) is empty"
        )));
    }
    let mut t = t0;
    let mut y = y0;
    let mut dy = f(t, &y)?;
    let mut samples = vec![Sample { t, y, dy }];
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    // Initial step: conservative fraction of the span, capped by max_step.
    let mut dt = ((t_end - t0) * 1e-4).min(opts.max_step).max(opts.min_step);

    if stop(t, &y) {
        return Ok(RkRun {
            samples,
            status: RkStatus::Stopped { t },
            accepted,
            rejected,
        });
    }

    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok(RkRun {
                samples,
                status: RkStatus::Completed,
                accepted,
                rejected,
            });
        }
        dt = dt.min(t_end - t).min(opts.max_step);
        if dt < opts.min_step {
            return Ok(RkRun {
                samples,
                status: RkStatus::Stalled { t },
                accepted,
                rejected,
            });
        }

        let mut k = [[0.0; N]; 7];
        k[0] = dy;
        let mut failed_stage = false;
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += dt * a * kj[i];
                    }
                }
            }
            match f(t + C[s] * dt, &ys) {
                Ok(ks) => k[s] = ks,
                Err(Error::HypothesisViolated(msg)) => {
                    return Err(Error::HypothesisViolated(msg))
                }
                Err(_) => {
                    failed_stage = true;
                    break;
                }
            }
        }
        if failed_stage {
            dt *= 0.25;
            rejected += 1;
            continue;
        }

        let mut y5 = y;
        let mut y4 = y;
        for (j, kj) in k.iter().enumerate() {
            for i in 0..N {
                y5[i] += dt * B5[j] * kj[i];
                y4[i] += dt * B4[j] * kj[i];
            }
        }
        if y5.iter().any(|v| !v.is_finite()) {
            dt *= 0.25;
            rejected += 1;
            continue;
        }

        let mut err: f64 = 0.0;
        for i in 0..N {
            let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
            err = err.max((y5[i] - y4[i]).abs() / scale);
        }

        if err <= 1.0 {
            let t_prev = t;
            t += dt;
            y = y5;
            dy = f(t, &y)?;
            samples.push(Sample { t, y, dy });
            accepted += 1;
            if let Some(thr) = opts.threshold {
                if y[0].abs() >= thr {
                    return Ok(RkRun {
                        samples,
                        status: RkStatus::ThresholdExit { t_prev, t },
                        accepted,
                        rejected,
                    });
                }
            }
            if stop(t, &y) {
                return Ok(RkRun {
                    samples,
                    status: RkStatus::Stopped { t },
                    accepted,
                    rejected,
                });
            }
        } else {
            rejected += 1;
        }
        let factor = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        dt *= factor;
    }
    Err(Error::NonConvergence(format!(
        "integrator exceeded {} steps at t = {t}",
        opts.max_steps
    )))
}

/// Cubic Hermite evaluation of a recorded trajectory at time `t`.
/// `t` must lie inside the recorded span.
pub(crate) fn hermite_eval<const N: usize>(samples: &[Sample<N>], t: f64, component: usize) -> f64 {
    debug_assert!(!samples.is_empty());
    let first = samples.first().unwrap();
    let last = samples.last().unwrap();
    if t <= first.t {
        return first.y[component];
    }
    if t >= last.t {
        return last.y[component];
    }
    // Binary search for the bracketing step.
    let mut lo = 0usize;
    let mut hi = samples.len() - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if samples[mid].t <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = &samples[lo];
    let b = &samples[hi];
    let dt = b.t - a.t;
    let s = (t - a.t) / dt;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    h00 * a.y[component]
        + h10 * dt * a.dy[component]
        + h01 * b.y[component]
        + h11 * dt * b.dy[component]
}
