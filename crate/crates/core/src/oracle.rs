//! Scalar ODE witnesses for the growth lemmas.
//!
//! This module is independent of the PDE stack. It integrates the extremal
//! equality cases of the differential inequalities,
//!
//! ```text
//!   a(t) Y'' + b(t) Y' = c Y   (or c Y^p),
//!          b(t) Y'     = c Y   (or c Y^p),
//! ```
//!
//! with the adaptive Dormand-Prince stepper, and compares trajectories
//! against certified envelopes sample by sample. Any solution of the
//! corresponding inequality with the same initial data dominates these
//! witnesses, so an envelope the equality case already violates is unsound.
//! Blow-up is reported together with the bracket of accepted times around
//! the threshold crossing.

use crate::envelope::EnvelopeBound;
use crate::error::{Error, Result};
use crate::profile::{CoefficientProfile, EquationKind};
use crate::rk::{self, RkOptions, RkStatus};

/// |Y| at which a trajectory counts as blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// |Y| above which a step-size underflow on a superlinear run is escalated
/// to a blow-up verdict instead of a stall error. For steep powers the
/// threshold itself is unreachable in double precision: at p = 3 the time
/// remaining when |Y| = 1e12 is of order Y^{-(p-1)} = 1e-24, far below one
/// ulp of the blow-up time, so the controller underflows first and that
/// underflow is the blow-up signature. The controller gives up when the
/// distance to the singularity is around 1e-12, where |Y| is roughly
/// 10^{12/(p-1)}; the floor stays clear of that for powers up to about 4
/// while still demanding growth by orders of magnitude over unit-scale
/// data.
pub const STALL_ESCALATION_FLOOR: f64 = 1e4;

/// Largest local timescale |Y / Y'|, relative to 1 + t, that counts as a
/// singular stall. Near a power blow-up the timescale collapses with the
/// distance to the singularity, far below the step floor; a stall caused by
/// degenerating coefficients instead leaves it at order one.
const SINGULAR_TIMESCALE: f64 = 1e-6;

/// Right-hand side c Y or its superlinear power variant
/// c (1+t)^{-r} |Y|^{p-1} Y, extended oddly through zero so trajectories
/// that graze the origin stay well defined. `r_decay = 0` recovers the
/// autonomous power.
#[derive(Debug, Clone, Copy)]
pub enum GrowthRhs {
    Linear { c: f64 },
    Power { c: f64, p: f64, r_decay: f64 },
}

impl GrowthRhs {
    fn eval(&self, t: f64, y: f64) -> f64 {
        match *self {
            GrowthRhs::Linear { c } => c * y,
            GrowthRhs::Power { c, p, r_decay } => {
                c * (1.0 + t).powf(-r_decay) * y.abs().powf(p - 1.0) * y
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WitnessStatus {
    Completed,
    /// |Y| reached [`BLOWUP_THRESHOLD`] inside `bracket`; `time` is the
    /// bracket midpoint.
    Blowup { time: f64, bracket: (f64, f64) },
}

/// A scalar trajectory with its derivative, recorded at the accepted steps
/// of the adaptive integrator.
#[derive(Debug, Clone)]
pub struct OdeWitness {
    pub kind: EquationKind,
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub yprime: Vec<f64>,
    pub status: WitnessStatus,
    pub rel_tol: f64,
    pub steps: usize,
    pub rejections: usize,
}

/// Integrates the equality-case ODE for the requested equation kind.
///
/// `yp0` is the initial rate for the hyperbolic equation and is ignored by
/// the parabolic one, whose trajectory is fixed by Y(0) alone. The
/// parabolic branch requires a declared-positive damping and turns any
/// observed b(t) <= 0 into a hypothesis violation mid-run.
pub fn oracle_integrate(
    kind: EquationKind,
    rhs: GrowthRhs,
    prof: &CoefficientProfile,
    y0: f64,
    yp0: f64,
    t_end: f64,
    rel_tol: f64,
) -> Result<OdeWitness> {
    if !y0.is_finite() || !yp0.is_finite() {
        return Err(Error::invalid("initial data must be finite"));
    }
    let opts = RkOptions {
        rel_tol,
        abs_tol: rel_tol * 1e-2,
        threshold: Some(BLOWUP_THRESHOLD),
        ..RkOptions::default()
    };
    match kind {
        EquationKind::Hyperbolic => {
            let run = rk::integrate(
                |t, y: &[f64; 2]| {
                    let at = prof.a(t);
                    if !(at > 0.0) {
                        return Err(Error::HypothesisViolated(format!(
                            "a({t}) = {at} is not positive"
                        )));
                    }
                    Ok([y[1], (rhs.eval(t, y[0]) - prof.b(t) * y[1]) / at])
                },
                0.0,
                [y0, yp0],
                t_end,
                &opts,
                |_, _| false,
            )?;
            let times: Vec<f64> = run.samples.iter().map(|s| s.t).collect();
            let y: Vec<f64> = run.samples.iter().map(|s| s.y[0]).collect();
            let yprime: Vec<f64> = run.samples.iter().map(|s| s.y[1]).collect();
            let status = witness_status(run.status, kind, rhs, prof, &y, &yprime)?;
            Ok(OdeWitness {
                kind,
                times,
                y,
                yprime,
                status,
                rel_tol,
                steps: run.accepted,
                rejections: run.rejected,
            })
        }
        EquationKind::Parabolic => {
            if !prof.decl.b_positive {
                return Err(Error::MissingDeclaration(
                    "b_positive (positive damping)".into(),
                ));
            }
            let run = rk::integrate(
                |t, y: &[f64; 1]| {
                    let bt = prof.b(t);
                    if !(bt > 0.0) {
                        return Err(Error::HypothesisViolated(format!(
                            "b({t}) = {bt} is not positive"
                        )));
                    }
                    Ok([rhs.eval(t, y[0]) / bt])
                },
                0.0,
                [y0],
                t_end,
                &opts,
                |_, _| false,
            )?;
            let times: Vec<f64> = run.samples.iter().map(|s| s.t).collect();
            let y: Vec<f64> = run.samples.iter().map(|s| s.y[0]).collect();
            let yprime: Vec<f64> = run.samples.iter().map(|s| s.dy[0]).collect();
            let status = witness_status(run.status, kind, rhs, prof, &y, &yprime)?;
            Ok(OdeWitness {
                kind,
                times,
                y,
                yprime,
                status,
                rel_tol,
                steps: run.accepted,
                rejections: run.rejected,
            })
        }
    }
}

fn witness_status(
    status: RkStatus,
    kind: EquationKind,
    rhs: GrowthRhs,
    prof: &CoefficientProfile,
    y: &[f64],
    yprime: &[f64],
) -> Result<WitnessStatus> {
    match status {
        RkStatus::Completed => Ok(WitnessStatus::Completed),
        RkStatus::ThresholdExit { t_prev, t } => Ok(WitnessStatus::Blowup {
            time: 0.5 * (t_prev + t),
            bracket: (t_prev, t),
        }),
        RkStatus::Stopped { t } => Err(Error::NonConvergence(format!(
            "oracle run stopped unexpectedly at t = {t}"
        ))),
        RkStatus::Stalled { t } => {
            let y_last = y.last().copied().unwrap_or(0.0);
            let dy_last = yprime.last().copied().unwrap_or(0.0);
            let superlinear = matches!(rhs, GrowthRhs::Power { .. });
            let singular = (y_last / dy_last).abs() <= SINGULAR_TIMESCALE * (1.0 + t.abs());
            if !superlinear
                || y_last.abs() < STALL_ESCALATION_FLOOR
                || dy_last * y_last <= 0.0
                || !singular
            {
                return Err(Error::IntegratorStall { t });
            }
            // The state is already past the escalation floor and still
            // accelerating into the power singularity; the remaining time
            // is bounded in closed form from the final state.
            let rem = remaining_time(kind, rhs, prof, t, y_last, dy_last);
            Ok(WitnessStatus::Blowup {
                time: t + 0.5 * rem,
                bracket: (t, t + rem),
            })
        }
    }
}

/// Upper bound on the time left to the singularity of a superlinear run
/// sitting at (|Y|, |Y'|).
///
/// Parabolic with a declared sup b: separation of variables on the
/// equality case gives exactly sup b * |Y|^{1-p} / (c (p-1)), and adding
/// it to the elapsed time never exceeds the certified T_inf. Without the
/// declaration, and for the hyperbolic observation harness, the local
/// power-law profile Y ~ (T-t)^{-k} (k = 1/(p-1) first order, 2/(p-1)
/// second order) gives T - t = k Y / Y', inflated by a safety factor.
fn remaining_time(
    kind: EquationKind,
    rhs: GrowthRhs,
    prof: &CoefficientProfile,
    t: f64,
    y_last: f64,
    dy_last: f64,
) -> f64 {
    let (c, p, r_decay) = match rhs {
        GrowthRhs::Power { c, p, r_decay } => (c, p, r_decay),
        GrowthRhs::Linear { .. } => unreachable!("escalation is gated on the power rhs"),
    };
    // The decay factor is frozen at the stall time; the remaining interval
    // is far too short for it to move.
    let c_eff = c * (1.0 + t).powf(-r_decay);
    let local = (y_last / dy_last).abs();
    match kind {
        EquationKind::Parabolic => match prof.decl.b_sup {
            Some(b_sup) => b_sup * y_last.abs().powf(1.0 - p) / (c_eff * (p - 1.0)),
            None => 1.5 * local / (p - 1.0),
        },
        EquationKind::Hyperbolic => 1.5 * 2.0 * local / (p - 1.0),
    }
}

/// Outcome of a pointwise series-vs-envelope comparison.
#[derive(Debug, Clone)]
pub struct EnvelopeCheck {
    /// Raw margins Y_i - envelope(t_i) at the checked samples.
    pub margins: Vec<f64>,
    /// Most negative normalized margin, min over i of
    /// (Y_i - envelope(t_i)) / max(1, |Y_i|).
    pub min_margin: f64,
    pub checked: usize,
    pub pass: bool,
}

pub(crate) fn compare_series(
    times: &[f64],
    values: &[f64],
    env: &EnvelopeBound,
    rel_slack: f64,
    t_cutoff: f64,
) -> EnvelopeCheck {
    let mut margins = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut pass = true;
    for (&t, &v) in times.iter().zip(values) {
        if t >= env.valid_until.min(t_cutoff) {
            break;
        }
        let bound = env.eval(t);
        if bound.is_infinite() {
            continue;
        }
        let margin = v - bound;
        let normalized = margin / v.abs().max(1.0);
        margins.push(margin);
        if normalized < min_margin {
            min_margin = normalized;
        }
        if normalized < -rel_slack {
            pass = false;
        }
    }
    if margins.is_empty() {
        min_margin = 0.0;
    }
    EnvelopeCheck {
        margins,
        min_margin,
        checked: times.len().min(values.len()),
        pass,
    }
}

/// Checks Y_i >= envelope(t_i) - rel_slack * max(1, |Y_i|) at every
/// recorded sample inside the envelope's validity window.
pub fn verify_envelope(w: &OdeWitness, env: &EnvelopeBound, rel_slack: f64) -> EnvelopeCheck {
    compare_series(&w.times, &w.y, env, rel_slack, f64::INFINITY)
}

/// Same as [`verify_envelope`], stopping the comparison at `t_cutoff`.
///
/// Near a singular endpoint of the envelope both sides of the comparison
/// lose relative accuracy: a blow-up time shift delta in the integrated
/// trajectory moves Y(t) by a factor around 1 + k delta / (T - t), so the
/// last sliver before T is not comparable at tight slack. Callers cut the
/// window just short of T instead of loosening the slack everywhere.
pub fn verify_envelope_until(
    w: &OdeWitness,
    env: &EnvelopeBound,
    rel_slack: f64,
    t_cutoff: f64,
) -> EnvelopeCheck {
    compare_series(&w.times, &w.y, env, rel_slack, t_cutoff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{
        envelope_positive_damping, envelope_variable_inertia, lower_curve_superlinear,
    };
    use crate::profile::Declarations;

    #[test]
    fn parabolic_linear_is_exponential() {
        let p = CoefficientProfile::constant(1.0, 1.0).unwrap();
        let w = oracle_integrate(
            EquationKind::Parabolic,
            GrowthRhs::Linear { c: 1.0 },
            &p,
            1.0,
            0.0,
            3.0,
            1e-10,
        )
        .unwrap();
        assert_eq!(w.status, WitnessStatus::Completed);
        let end = *w.y.last().unwrap();
        assert!((end - 3.0f64.exp()).abs() < 1e-7, "end = {end}");

        // Negative growth constant decays like the heat semigroup.
        let d = oracle_integrate(
            EquationKind::Parabolic,
            GrowthRhs::Linear { c: -1.0 },
            &p,
            1.0,
            0.0,
            2.0,
            1e-10,
        )
        .unwrap();
        assert!((d.y.last().unwrap() - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn riccati_blowup_time_is_bracketed() {
        // Y' = Y^2, Y(0) = 1 blows up at t = 1.
        let p = CoefficientProfile::constant(1.0, 1.0).unwrap();
        let w = oracle_integrate(
            EquationKind::Parabolic,
            GrowthRhs::Power { c: 1.0, p: 2.0, r_decay: 0.0 },
            &p,
            1.0,
            0.0,
            5.0,
            1e-10,
        )
        .unwrap();
        match w.status {
            WitnessStatus::Blowup { time, bracket } => {
                assert!((time - 1.0).abs() < 1e-3, "time = {time}");
                assert!(bracket.0 < 1.0 + 1e-9 && bracket.1 <= 1.0 + 1e-6);
            }
            WitnessStatus::Completed => panic!("expected blow-up"),
        }
        // The certified lower curve stays below the trajectory.
        let env = lower_curve_superlinear(1.0, 2.0, &p, 1.0).unwrap();
        let check = verify_envelope(&w, &env, 1e-6);
        assert!(check.pass, "min margin {}", check.min_margin);
    }

    #[test]
    fn decaying_superlinear_forcing_still_blows_up() {
        // Y'' + Y' = (1+t)^{-1/2} Y^2, Y(0) = Y'(0) = 1. The algebraic
        // decay is integrable against the quadratic growth, so the run
        // ends in blow-up; the time itself is observational.
        let p = CoefficientProfile::constant(1.0, 1.0).unwrap();
        let w = oracle_integrate(
            EquationKind::Hyperbolic,
            GrowthRhs::Power { c: 1.0, p: 2.0, r_decay: 0.5 },
            &p,
            1.0,
            1.0,
            50.0,
            1e-10,
        )
        .unwrap();
        match w.status {
            WitnessStatus::Blowup { time, bracket } => {
                assert!(time.is_finite() && time > 0.0);
                assert!(bracket.0 < bracket.1);
                println!("second-order decaying-coefficient blow-up near t = {time}");
            }
            WitnessStatus::Completed => panic!("expected blow-up within t = 50"),
        }
    }

    #[test]
    fn hyperbolic_exponential_and_growing_inertia() {
        let p = CoefficientProfile::constant(1.0, 0.0).unwrap();
        let w = oracle_integrate(
            EquationKind::Hyperbolic,
            GrowthRhs::Linear { c: 1.0 },
            &p,
            1.0,
            1.0,
            2.0,
            1e-11,
        )
        .unwrap();
        assert!((w.y.last().unwrap() - 2.0f64.exp()).abs() < 1e-8);

        // a = 1 + t dominates its certified envelope e^{2(sqrt(1+t)-1)}.
        let grow = CoefficientProfile::new(
            "a = 1 + t",
            |t| 1.0 + t,
            |_| 0.0,
            Declarations {
                a0: 1.0,
                a_monotone: true,
                b_sup: Some(0.0),
                ..Declarations::default()
            },
        )
        .unwrap();
        let w = oracle_integrate(
            EquationKind::Hyperbolic,
            GrowthRhs::Linear { c: 1.0 },
            &grow,
            1.0,
            1.0,
            6.0,
            1e-11,
        )
        .unwrap();
        let env = envelope_variable_inertia(1.0, &grow, 1.0, 1.0).unwrap();
        let check = verify_envelope(&w, &env, 1e-8);
        assert!(check.pass, "min margin {}", check.min_margin);
    }

    #[test]
    fn saturating_damping_meets_envelope_with_equality() {
        let p = CoefficientProfile::constant(1.0, 2.0).unwrap();
        let w = oracle_integrate(
            EquationKind::Parabolic,
            GrowthRhs::Linear { c: 1.0 },
            &p,
            1.0,
            0.0,
            4.0,
            1e-11,
        )
        .unwrap();
        let env = envelope_positive_damping(1.0, &p, 1.0).unwrap();
        let check = verify_envelope(&w, &env, 1e-8);
        assert!(check.pass);
        // Equality case: the margin stays at round-off scale.
        let worst = check
            .margins
            .iter()
            .zip(&w.y)
            .map(|(m, y)| m.abs() / y.abs().max(1.0))
            .fold(0.0f64, f64::max);
        assert!(worst < 1e-7, "worst normalized gap {worst}");
    }

    #[test]
    fn envelope_check_rejects_overclaiming_bound() {
        let p = CoefficientProfile::constant(1.0, 1.0).unwrap();
        let w = oracle_integrate(
            EquationKind::Parabolic,
            GrowthRhs::Linear { c: 1.0 },
            &p,
            1.0,
            0.0,
            3.0,
            1e-10,
        )
        .unwrap();
        // Claim growth rate 1.1 against the true e^t: must fail.
        let overclaim = envelope_positive_damping(1.1, &p, 1.0).unwrap();
        let check = verify_envelope(&w, &overclaim, 1e-6);
        assert!(!check.pass);
        assert!(check.min_margin < -1e-3);
    }

    #[test]
    fn parabolic_guards_sign_of_damping() {
        let undeclared = CoefficientProfile::constant(1.0, -1.0).unwrap();
        assert!(matches!(
            oracle_integrate(
                EquationKind::Parabolic,
                GrowthRhs::Linear { c: 1.0 },
                &undeclared,
                1.0,
                0.0,
                1.0,
                1e-10
            ),
            Err(Error::MissingDeclaration(_))
        ));

        // A smooth sign change is useless here: Y' = Y / b blows up along
        // with 1/b and the run ends before b itself is sampled at or below
        // zero. The step profile keeps the trajectory regular until the
        // first stage lands past t = 1 and trips the guard.
        let lying = CoefficientProfile::new(
            "steps negative",
            |_| 1.0,
            |t| if t < 1.0 { 1.0 } else { -1.0 },
            Declarations {
                b_sup: Some(1.0),
                b_positive: true,
                ..Declarations::default()
            },
        )
        .unwrap();
        let got = oracle_integrate(
            EquationKind::Parabolic,
            GrowthRhs::Linear { c: 1.0 },
            &lying,
            1.0,
            0.0,
            3.0,
            1e-10,
        );
        assert!(got.unwrap_err().is_hypothesis_violation());
    }
}
