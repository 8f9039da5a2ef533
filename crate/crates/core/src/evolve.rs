//! Method-of-lines evolution of the perturbation w = u - v.
//!
//! Substituting u = v + w into a u_tt + b u_t + L u = f(x, u) gives
//!
//! ```text
//!   a(t) w_tt + b(t) w_t + L_h w = f(x, v + w) - L_h v,
//! ```
//!
//! where L_h v is the discrete operator applied once to the steady state
//! with its true boundary samples. Keeping the discrete L_h v (rather than
//! substituting f(x, v)) preserves the exact discrete u-dynamics, so an
//! unperturbed run drifts only at the scale of the steady state's own
//! residual, and that drift is part of what the tests budget for. The
//! perturbation itself carries homogeneous Dirichlet data.
//!
//! Time stepping is classical RK4 with a per-step cap
//!
//! ```text
//!   dt <= cfl * h * sqrt(a0 / Lambda)            (hyperbolic),
//!   dt <= cfl * min b * h^2 / Lambda             (parabolic),
//! ```
//!
//! where Lambda = h^2 lambda_max(L_h) is the dimensionless stencil
//! eigenvalue (about 4 on intervals), plus a nonlinear cap dt <= cfl / rate
//! with rate = sqrt(max |f_u| / a0) or max |f_u| / min b. The nonlinear cap
//! shrinks like 1 / |u| near a superlinear blow-up, so the state grows by a
//! bounded factor per step and the sup-norm threshold is crossed in finitely
//! many steps with a tight bracket.

use crate::error::{Error, Result};
use crate::operator::OperatorMatrix;
use crate::profile::{CoefficientProfile, EquationKind};
use crate::spectral::EigenPair;
use crate::steady::SteadyState;

pub const DEFAULT_CFL: f64 = 0.5;

/// Run-termination thresholds.
#[derive(Debug, Clone, Copy)]
pub struct BlowupThresholds {
    /// Sup-norm of w that counts as numerical blow-up.
    pub sup: f64,
    /// Step size below which the run is declared stalled.
    pub dt_min: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        BlowupThresholds {
            sup: 1e8,
            dt_min: 1e-12,
        }
    }
}

/// A fully specified evolution experiment. The grid lives inside `steady`.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub label: String,
    /// Spatial operator L = -Delta + V on the interior nodes.
    pub operator: OperatorMatrix,
    pub steady: SteadyState,
    pub profile: CoefficientProfile,
    pub kind: EquationKind,
    /// Amplitude of the initial perturbation eps * phi_1.
    pub eps: f64,
    /// Amplitude of the initial rate delta * phi_1 (hyperbolic only).
    pub delta: f64,
    /// Mirror mode for concave nonlinearities: initial data flips sign and
    /// the projection is negated, so the recorded W grows positive.
    pub concave: bool,
    pub t_max: f64,
    /// Sampling cadence of the recorded time series.
    pub cadence: f64,
    pub thresholds: BlowupThresholds,
    pub cfl: f64,
    /// Reject hyperbolic runs whose initial rate sits below the certified
    /// instability threshold instead of silently producing an
    /// unclassifiable trajectory.
    pub require_threshold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Completed,
    /// Sup norm crossed the threshold inside `bracket`; `time` is the
    /// bracket midpoint.
    Blowup { time: f64, bracket: (f64, f64) },
    /// State left the floating-point range without crossing the threshold
    /// first (a stability failure, not a physical blow-up).
    NonfiniteState { t: f64 },
    Stalled { t: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct RunStats {
    pub steps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
    /// Dimensionless stencil eigenvalue h^2 lambda_max used by the caps.
    pub lambda_stencil: f64,
}

/// Recorded trajectory of one scenario.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario_label: String,
    pub kind: EquationKind,
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub sup: Vec<f64>,
    /// Kaplan projection W(t), already sign-adjusted in concave mode.
    pub w_proj: Vec<f64>,
    /// W'(t): exact projection of w_t for hyperbolic runs, centered
    /// differences of W for parabolic ones.
    pub wprime_proj: Vec<f64>,
    /// Step size in effect when each sample was recorded.
    pub dts: Vec<f64>,
    pub w_snapshots: Vec<Vec<f64>>,
    /// Empty for parabolic runs.
    pub wt_snapshots: Vec<Vec<f64>>,
    pub status: RunStatus,
    pub stats: RunStats,
    /// FNV-1a hash of the run parameters, for reproducibility bookkeeping.
    pub fingerprint: u64,
}

/// Initial data (w, w_t) = +-(eps, delta) phi_1 on the interior nodes;
/// the sign flips in concave mode.
pub fn build_perturbation(
    eig: &EigenPair,
    eps: f64,
    delta: f64,
    concave: bool,
) -> (Vec<f64>, Vec<f64>) {
    let sign = if concave { -1.0 } else { 1.0 };
    let w0 = eig.phi1.iter().map(|p| sign * eps * p).collect();
    let wt0 = eig.phi1.iter().map(|p| sign * delta * p).collect();
    (w0, wt0)
}

/// Runs the scenario from its standard eigenfunction perturbation.
pub fn run_scenario(sc: &Scenario, eig: &EigenPair) -> Result<RunRecord> {
    if !(sc.eps >= 0.0) || !(sc.delta >= 0.0) {
        return Err(Error::invalid(format!(
            "perturbation amplitudes must be nonnegative, got eps = {}, delta = {}",
            sc.eps, sc.delta
        )));
    }
    if sc.kind == EquationKind::Hyperbolic && sc.require_threshold {
        if !(eig.sigma_sq > 0.0) {
            return Err(Error::invalid(format!(
                "threshold check needs a positive growth rate, got sigma^2 = {}",
                eig.sigma_sq
            )));
        }
        let th =
            crate::envelope::hyperbolic_threshold(eig.sigma_sq, &sc.profile, sc.eps, sc.delta)?;
        if !th.satisfied {
            return Err(Error::HypothesisViolated(format!(
                "initial rate delta = {} below the instability threshold {}",
                sc.delta, th.required_rate
            )));
        }
    }
    let (w0, wt0) = build_perturbation(eig, sc.eps, sc.delta, sc.concave);
    run_with_initial(sc, eig, w0, wt0)
}

struct System<'a> {
    op: &'a OperatorMatrix,
    lv: &'a [f64],
    xs: &'a [f64],
    vs: &'a [f64],
    sc: &'a Scenario,
}

impl System<'_> {
    /// f(x, v + w) - L_h v - L_h w on the interior nodes.
    fn forcing(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut lw = self.op.apply_nodal(w)?;
        for i in 0..w.len() {
            lw[i] = self.sc.steady.nonlinearity.eval(self.xs[i], self.vs[i] + w[i])
                - self.lv[i]
                - lw[i];
        }
        Ok(lw)
    }

    fn accel(&self, t: f64, w: &[f64], wt: &[f64]) -> Result<Vec<f64>> {
        let at = self.sc.profile.a(t);
        if !(at > 0.0) {
            return Err(Error::HypothesisViolated(format!(
                "a({t}) = {at} is not positive"
            )));
        }
        let bt = self.sc.profile.b(t);
        let mut g = self.forcing(w)?;
        for i in 0..g.len() {
            g[i] = (g[i] - bt * wt[i]) / at;
        }
        Ok(g)
    }

    fn parabolic_rate(&self, t: f64, w: &[f64]) -> Result<Vec<f64>> {
        let bt = self.sc.profile.b(t);
        if !(bt > 0.0) {
            return Err(Error::HypothesisViolated(format!(
                "b({t}) = {bt} is not positive"
            )));
        }
        let mut g = self.forcing(w)?;
        for v in g.iter_mut() {
            *v /= bt;
        }
        Ok(g)
    }

    fn max_deriv(&self, w: &[f64]) -> f64 {
        let mut m = 0.0f64;
        for i in 0..w.len() {
            m = m.max(
                self.sc
                    .steady
                    .nonlinearity
                    .deriv(self.xs[i], self.vs[i] + w[i])
                    .abs(),
            );
        }
        m
    }
}

fn add_scaled(base: &[f64], dir: &[f64], s: f64) -> Vec<f64> {
    base.iter().zip(dir).map(|(b, d)| b + s * d).collect()
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn fingerprint_of(sc: &Scenario) -> u64 {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(sc.label.as_bytes());
    bytes.extend_from_slice(sc.kind.label().as_bytes());
    bytes.push(sc.concave as u8);
    for v in [
        sc.eps,
        sc.delta,
        sc.t_max,
        sc.cadence,
        sc.cfl,
        sc.thresholds.sup,
        sc.thresholds.dt_min,
        sc.steady.grid.spacing,
        sc.operator.dim() as f64,
    ] {
        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fnv1a(&bytes)
}

/// Runs the scenario from caller-supplied initial data. `wt0` must match
/// the state dimension for hyperbolic runs and may be empty for parabolic
/// ones, where it is ignored.
pub fn run_with_initial(
    sc: &Scenario,
    eig: &EigenPair,
    w0: Vec<f64>,
    wt0: Vec<f64>,
) -> Result<RunRecord> {
    let grid = &sc.steady.grid;
    let dim = sc.operator.dim();
    if dim != grid.interior_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.interior_count(),
            got: dim,
        });
    }
    if w0.len() != dim || eig.phi1.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: w0.len().max(eig.phi1.len()),
        });
    }
    if sc.kind == EquationKind::Hyperbolic && wt0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: wt0.len(),
        });
    }
    if !(sc.t_max > 0.0) || !(sc.cadence > 0.0) || sc.cadence > sc.t_max {
        return Err(Error::invalid(format!(
            "need 0 < cadence <= t_max, got cadence = {}, t_max = {}",
            sc.cadence, sc.t_max
        )));
    }
    if !(sc.cfl > 0.0 && sc.cfl <= 1.0) {
        return Err(Error::invalid(format!("cfl = {} out of (0, 1]", sc.cfl)));
    }
    if !(sc.thresholds.sup > 0.0) || !(sc.thresholds.dt_min > 0.0) {
        return Err(Error::invalid("thresholds must be positive"));
    }

    let h = grid.spacing;
    let lambda_stencil = h * h * sc.operator.lambda_max_estimate(80);
    let lv = sc.operator.apply_field(grid, &sc.steady.values)?;
    let xs = grid.interior_nodes();
    let vs = sc.steady.interior_values().to_vec();
    let sys = System {
        op: &sc.operator,
        lv: &lv,
        xs: &xs,
        vs: &vs,
        sc,
    };
    let a0 = sc.profile.decl.a0;
    let proj_sign = if sc.concave { -1.0 } else { 1.0 };

    let mut w = w0;
    let mut wt = if sc.kind == EquationKind::Hyperbolic {
        wt0
    } else {
        Vec::new()
    };
    let mut t = 0.0f64;
    let mut status = RunStatus::Completed;
    let mut steps = 0usize;
    let mut min_dt = f64::INFINITY;
    let mut max_dt = 0.0f64;
    let mut dt_last = 0.0f64;

    let mut times = Vec::new();
    let mut l2 = Vec::new();
    let mut sup = Vec::new();
    let mut w_proj = Vec::new();
    let mut wprime_proj = Vec::new();
    let mut dts = Vec::new();
    let mut w_snapshots = Vec::new();
    let mut wt_snapshots = Vec::new();

    let record = |t: f64,
                      w: &[f64],
                      wt: &[f64],
                      dt: f64,
                      times: &mut Vec<f64>,
                      l2: &mut Vec<f64>,
                      sup: &mut Vec<f64>,
                      w_proj: &mut Vec<f64>,
                      wprime_proj: &mut Vec<f64>,
                      dts: &mut Vec<f64>,
                      w_snapshots: &mut Vec<Vec<f64>>,
                      wt_snapshots: &mut Vec<Vec<f64>>| {
        times.push(t);
        l2.push(grid.l2_norm_interior(w));
        sup.push(w.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        w_proj.push(proj_sign * grid.inner_interior(&eig.phi1, w));
        wprime_proj.push(if wt.is_empty() {
            f64::NAN
        } else {
            proj_sign * grid.inner_interior(&eig.phi1, wt)
        });
        dts.push(dt);
        w_snapshots.push(w.to_vec());
        if !wt.is_empty() {
            wt_snapshots.push(wt.to_vec());
        }
    };

    record(
        0.0, &w, &wt, 0.0, &mut times, &mut l2, &mut sup, &mut w_proj, &mut wprime_proj,
        &mut dts, &mut w_snapshots, &mut wt_snapshots,
    );
    let mut sample_index = 1usize;

    'outer: while t < sc.t_max * (1.0 - 1e-14) {
        // Linear stability cap.
        let mut dt = match sc.kind {
            EquationKind::Hyperbolic => sc.cfl * h * (a0 / lambda_stencil).sqrt(),
            EquationKind::Parabolic => {
                // Probe the damping over a candidate window; the final step
                // is no longer than the probe window, so the minimum over
                // the window is safe.
                let probe = sc.cfl * sc.profile.b(t).abs().max(1e-300) * h * h / lambda_stencil;
                let mut b_min = f64::INFINITY;
                for k in 0..5 {
                    let bt = sc.profile.b(t + probe * k as f64 / 4.0);
                    if !(bt > 0.0) {
                        return Err(Error::HypothesisViolated(format!(
                            "b({}) = {bt} is not positive",
                            t + probe * k as f64 / 4.0
                        )));
                    }
                    b_min = b_min.min(bt);
                }
                sc.cfl * b_min * h * h / lambda_stencil
            }
        };
        // Nonlinear rate cap.
        let fu = sys.max_deriv(&w);
        if fu > 0.0 {
            let rate = match sc.kind {
                EquationKind::Hyperbolic => (fu / a0).sqrt(),
                EquationKind::Parabolic => {
                    let bt = sc.profile.b(t);
                    fu / bt.max(1e-300)
                }
            };
            dt = dt.min(sc.cfl / rate);
        }
        dt = dt.min(sc.t_max - t);
        // Land exactly on the next cadence sample when it is within reach.
        let t_sample = sample_index as f64 * sc.cadence;
        let mut hits_sample = false;
        if t_sample <= sc.t_max * (1.0 + 1e-14) && t_sample - t <= dt * (1.0 + 1e-9) {
            dt = t_sample - t;
            hits_sample = true;
        }
        if dt < sc.thresholds.dt_min {
            status = RunStatus::Stalled { t };
            break 'outer;
        }

        let t_prev = t;
        match sc.kind {
            EquationKind::Hyperbolic => {
                let k1w = wt.clone();
                let k1t = sys.accel(t, &w, &wt)?;
                let w2 = add_scaled(&w, &k1w, 0.5 * dt);
                let wt2 = add_scaled(&wt, &k1t, 0.5 * dt);
                let k2w = wt2.clone();
                let k2t = sys.accel(t + 0.5 * dt, &w2, &wt2)?;
                let w3 = add_scaled(&w, &k2w, 0.5 * dt);
                let wt3 = add_scaled(&wt, &k2t, 0.5 * dt);
                let k3w = wt3.clone();
                let k3t = sys.accel(t + 0.5 * dt, &w3, &wt3)?;
                let w4 = add_scaled(&w, &k3w, dt);
                let wt4 = add_scaled(&wt, &k3t, dt);
                let k4w = wt4.clone();
                let k4t = sys.accel(t + dt, &w4, &wt4)?;
                for i in 0..dim {
                    w[i] += dt / 6.0 * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i]);
                    wt[i] += dt / 6.0 * (k1t[i] + 2.0 * k2t[i] + 2.0 * k3t[i] + k4t[i]);
                }
            }
            EquationKind::Parabolic => {
                let k1 = sys.parabolic_rate(t, &w)?;
                let w2 = add_scaled(&w, &k1, 0.5 * dt);
                let k2 = sys.parabolic_rate(t + 0.5 * dt, &w2)?;
                let w3 = add_scaled(&w, &k2, 0.5 * dt);
                let k3 = sys.parabolic_rate(t + 0.5 * dt, &w3)?;
                let w4 = add_scaled(&w, &k3, dt);
                let k4 = sys.parabolic_rate(t + dt, &w4)?;
                for i in 0..dim {
                    w[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        t = if hits_sample { t_sample } else { t + dt };
        steps += 1;
        min_dt = min_dt.min(dt);
        max_dt = max_dt.max(dt);
        dt_last = dt;

        if w.iter().any(|v| !v.is_finite()) || wt.iter().any(|v| !v.is_finite()) {
            status = RunStatus::NonfiniteState { t };
            break 'outer;
        }
        let s = w.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if s >= sc.thresholds.sup {
            record(
                t, &w, &wt, dt, &mut times, &mut l2, &mut sup, &mut w_proj, &mut wprime_proj,
                &mut dts, &mut w_snapshots, &mut wt_snapshots,
            );
            status = RunStatus::Blowup {
                time: 0.5 * (t_prev + t),
                bracket: (t_prev, t),
            };
            break 'outer;
        }
        if hits_sample {
            record(
                t, &w, &wt, dt, &mut times, &mut l2, &mut sup, &mut w_proj, &mut wprime_proj,
                &mut dts, &mut w_snapshots, &mut wt_snapshots,
            );
            sample_index += 1;
        }
    }
    if status == RunStatus::Completed && times.last().copied().unwrap_or(0.0) < t * (1.0 - 1e-14) {
        record(
            t, &w, &wt, dt_last, &mut times, &mut l2, &mut sup, &mut w_proj, &mut wprime_proj,
            &mut dts, &mut w_snapshots, &mut wt_snapshots,
        );
    }

    // Parabolic W' from centered differences of the recorded projection.
    if sc.kind == EquationKind::Parabolic {
        let n = times.len();
        for i in 0..n {
            wprime_proj[i] = if n < 2 {
                0.0
            } else if i == 0 {
                (w_proj[1] - w_proj[0]) / (times[1] - times[0])
            } else if i == n - 1 {
                (w_proj[n - 1] - w_proj[n - 2]) / (times[n - 1] - times[n - 2])
            } else {
                (w_proj[i + 1] - w_proj[i - 1]) / (times[i + 1] - times[i - 1])
            };
        }
    }

    Ok(RunRecord {
        scenario_label: sc.label.clone(),
        kind: sc.kind,
        times,
        l2,
        sup,
        w_proj,
        wprime_proj,
        dts,
        w_snapshots,
        wt_snapshots,
        status,
        stats: RunStats {
            steps,
            min_dt: if min_dt.is_finite() { min_dt } else { 0.0 },
            max_dt,
            lambda_stencil,
        },
        fingerprint: fingerprint_of(sc),
    })
}
