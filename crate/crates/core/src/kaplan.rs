//! The Kaplan projection W(t) = <phi_1, u - v> and its differential
//! inequality.
//!
//! Projecting the perturbation equation onto the nonnegative principal
//! eigenfunction of the linearization and using convexity of the
//! nonlinearity yields
//!
//! ```text
//!   a(t) W'' + b(t) W' - sigma^2 W >= 0.
//! ```
//!
//! The recorded series carries W and W' but no trustworthy W'', so the
//! check is window averaged: for a smooth bump theta supported on a window
//! and vanishing at its ends, integration by parts turns the inequality
//! into
//!
//! ```text
//!   integral( -a theta' W' - a' theta W' + b theta W' - sigma^2 theta W ) >= 0,
//! ```
//!
//! which is evaluated by trapezoid quadrature over the recorded samples,
//! window by window. The parabolic variant drops the two a-terms. The
//! tolerance is scaled by max(sigma^2 max|W|, max|coef W'| / window), the
//! natural magnitude of the integrand, so pass margins are comparable
//! across runs whose W spans many orders of magnitude.

use crate::envelope::EnvelopeBound;
use crate::error::{Error, Result};
use crate::evolve::RunRecord;
use crate::grid::Grid;
use crate::oracle::{compare_series, EnvelopeCheck};
use crate::profile::{CoefficientProfile, EquationKind};
use crate::spectral::EigenPair;

/// Minimum recorded samples per averaging window.
pub const MIN_WINDOW_SAMPLES: usize = 20;

/// Sign convention of the projection. Concave runs mirror the convex ones,
/// so their meaningful functional is -<phi_1, w>.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignMode {
    Standard,
    ConcaveFlipped,
}

/// Projected trajectory (W, W') on the run's sample times.
#[derive(Debug, Clone)]
pub struct KaplanSeries {
    pub times: Vec<f64>,
    pub w: Vec<f64>,
    pub wprime: Vec<f64>,
    pub sign_mode: SignMode,
}

/// Projects the recorded snapshots onto the principal eigenfunction.
///
/// Hyperbolic records supply the exact projected rate from the recorded
/// w_t snapshots; parabolic rates come from centered differences of W.
pub fn project_series(
    grid: &Grid,
    record: &RunRecord,
    eig: &EigenPair,
    mode: SignMode,
) -> Result<KaplanSeries> {
    let n = record.times.len();
    if record.w_snapshots.len() != n {
        return Err(Error::invalid(
            "record does not carry a snapshot per sample",
        ));
    }
    if eig.phi1.len() != grid.interior_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.interior_count(),
            got: eig.phi1.len(),
        });
    }
    let sign = match mode {
        SignMode::Standard => 1.0,
        SignMode::ConcaveFlipped => -1.0,
    };
    let mut w = Vec::with_capacity(n);
    for snap in &record.w_snapshots {
        w.push(sign * grid.inner_interior(&eig.phi1, snap));
    }
    let wprime = match record.kind {
        EquationKind::Hyperbolic => {
            if record.wt_snapshots.len() != n {
                return Err(Error::invalid(
                    "hyperbolic record is missing rate snapshots",
                ));
            }
            record
                .wt_snapshots
                .iter()
                .map(|snap| sign * grid.inner_interior(&eig.phi1, snap))
                .collect()
        }
        EquationKind::Parabolic => {
            let mut d = vec![0.0; n];
            for i in 0..n {
                d[i] = if n < 2 {
                    0.0
                } else if i == 0 {
                    (w[1] - w[0]) / (record.times[1] - record.times[0])
                } else if i == n - 1 {
                    (w[n - 1] - w[n - 2]) / (record.times[n - 1] - record.times[n - 2])
                } else {
                    (w[i + 1] - w[i - 1]) / (record.times[i + 1] - record.times[i - 1])
                };
            }
            d
        }
    };
    Ok(KaplanSeries {
        times: record.times.clone(),
        w,
        wprime,
        sign_mode: mode,
    })
}

/// One averaging window of the inequality check.
#[derive(Debug, Clone, Copy)]
pub struct WindowCheck {
    pub t_center: f64,
    /// Value of the integrated-by-parts functional; nonnegative for a true
    /// solution up to quadrature error.
    pub integral: f64,
    /// Magnitude the tolerance is measured against.
    pub scale: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct InequalityReport {
    pub windows: Vec<WindowCheck>,
    /// Smallest normalized margin integral / scale over the windows.
    pub worst_margin: f64,
    pub pass: bool,
}

fn bump(s: f64) -> (f64, f64) {
    // Returns (theta, d theta / d s). Underflow handling: theta decays like
    // exp(-1/q) with q = 1 - s^2, which beats every power of 1/q, so both
    // values are clamped to zero near the support boundary.
    let q = 1.0 - s * s;
    if q <= 1e-12 {
        return (0.0, 0.0);
    }
    let th = (-1.0 / q).exp();
    (th, th * (-2.0 * s / (q * q)))
}

/// Checks the window-averaged inequality over consecutive windows of the
/// given width. Needs at least [`MIN_WINDOW_SAMPLES`] samples per window
/// and at least one complete window.
pub fn check_projected_inequality(
    ks: &KaplanSeries,
    prof: &CoefficientProfile,
    sigma_sq: f64,
    window: f64,
    tol: f64,
    kind: EquationKind,
) -> Result<InequalityReport> {
    if !(window > 0.0) || !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "need positive window and tolerance, got {window}, {tol}"
        )));
    }
    let n = ks.times.len();
    if n < 2 {
        return Err(Error::invalid("series too short for any window"));
    }
    let t_last = ks.times[n - 1];
    if t_last < window {
        return Err(Error::invalid(format!(
            "series ends at t = {t_last}, before one full window of width {window}"
        )));
    }
    let rho = 0.5 * window;
    let mut windows = Vec::new();
    let mut worst = f64::INFINITY;
    let mut all_pass = true;
    let mut k = 0usize;
    loop {
        let t0 = k as f64 * window;
        let t1 = t0 + window;
        if t1 > t_last * (1.0 + 1e-12) {
            break;
        }
        let center = 0.5 * (t0 + t1);
        let idx: Vec<usize> = (0..n)
            .filter(|&i| ks.times[i] >= t0 - 1e-12 && ks.times[i] <= t1 + 1e-12)
            .collect();
        if idx.len() < MIN_WINDOW_SAMPLES {
            return Err(Error::invalid(format!(
                "window [{t0}, {t1}] holds {} samples, fewer than {MIN_WINDOW_SAMPLES}; \
                 record with cadence at most {}",
                idx.len(),
                window / MIN_WINDOW_SAMPLES as f64
            )));
        }
        let mut g = Vec::with_capacity(idx.len());
        let mut max_w = 0.0f64;
        let mut max_cwp = 0.0f64;
        for &i in &idx {
            let t = ks.times[i];
            let s = (t - center) / rho;
            let (th, dth_ds) = bump(s);
            let th_t = dth_ds / rho;
            let wv = ks.w[i];
            let wp = ks.wprime[i];
            let bt = prof.b(t);
            let val = match kind {
                EquationKind::Hyperbolic => {
                    let at = prof.a(t);
                    let fd = 1e-6 * (1.0 + t.abs());
                    let ap = (prof.a(t + fd) - prof.a(t - fd)) / (2.0 * fd);
                    max_cwp = max_cwp.max((at * wp).abs());
                    -at * th_t * wp - ap * th * wp + bt * th * wp - sigma_sq * th * wv
                }
                EquationKind::Parabolic => {
                    max_cwp = max_cwp.max((bt * wp).abs());
                    bt * th * wp - sigma_sq * th * wv
                }
            };
            max_w = max_w.max(wv.abs());
            g.push((t, val));
        }
        let mut integral = 0.0;
        for pair in g.windows(2) {
            integral += 0.5 * (pair[0].1 + pair[1].1) * (pair[1].0 - pair[0].0);
        }
        let scale = (sigma_sq.abs() * max_w).max(max_cwp / window);
        let pass = integral >= -tol * scale;
        let margin = if scale > 0.0 { integral / scale } else { 0.0 };
        worst = worst.min(margin);
        all_pass &= pass;
        windows.push(WindowCheck {
            t_center: center,
            integral,
            scale,
            pass,
        });
        k += 1;
    }
    if windows.is_empty() {
        return Err(Error::invalid("no complete window fits the series"));
    }
    Ok(InequalityReport {
        windows,
        worst_margin: worst,
        pass: all_pass,
    })
}

/// Compares the projected series against a certified envelope, sample by
/// sample, stopping at `t_cutoff` (callers pass the start of a blow-up
/// bracket so the comparison never uses post-threshold samples).
pub fn compare_to_envelope(
    ks: &KaplanSeries,
    env: &EnvelopeBound,
    rel_slack: f64,
    t_cutoff: f64,
) -> EnvelopeCheck {
    compare_series(&ks.times, &ks.w, env, rel_slack, t_cutoff)
}

/// Least-squares slope of log W over [t_lo, t_hi]: the empirical
/// exponential growth rate.
pub fn fit_rate(ks: &KaplanSeries, t_lo: f64, t_hi: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = ks
        .times
        .iter()
        .zip(&ks.w)
        .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
        .map(|(t, w)| (*t, *w))
        .collect();
    if pts.len() < 3 {
        return Err(Error::invalid(format!(
            "only {} samples in [{t_lo}, {t_hi}], need at least 3 for a rate fit",
            pts.len()
        )));
    }
    if pts.iter().any(|(_, w)| !(*w > 0.0)) {
        return Err(Error::invalid(
            "rate fit needs strictly positive W over the fit range",
        ));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_l = pts.iter().map(|(_, w)| w.ln()).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, w) in &pts {
        num += (t - mean_t) * (w.ln() - mean_l);
        den += (t - mean_t) * (t - mean_t);
    }
    if den == 0.0 {
        return Err(Error::invalid("degenerate time span in rate fit"));
    }
    Ok(num / den)
}
