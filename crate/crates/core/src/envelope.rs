//! Lower envelopes for the Kaplan projection Y(t).
//!
//! Each envelope certifies a differential inequality consequence. Writing
//! B = sup|b| / a0, beta = sup|b| / a0, gamma = c / a1:
//!
//! * variable inertia (nondecreasing a, hyperbolic): if
//!   Y'(0) >= (-B + sqrt(c / a(0) + B^2)) Y(0) then
//!   Y(t) >= Y(0) exp(mu(t)) with
//!   mu(t) = integral_0^t (-B + sqrt(c / a(s) + B^2)) ds;
//! * bounded inertia (hyperbolic): comparison with Z'' + beta Z' = gamma Z
//!   gives the two-exponential bound
//!   Y(t) >= Z0 / (lambda_+ - lambda_-) (e^{lambda_+ t} - e^{lambda_- t})
//!           + Y(0) e^{lambda_- t},
//!   lambda_{+-} = (-beta +- sqrt(beta^2 + 4 gamma)) / 2,
//!   Z0 = Y'(0) - lambda_- Y(0);
//! * integrable damping ratio (hyperbolic): with mu =
//!   sqrt(21 c / (40 a1)) e^{-||b/a||_1}, Y(t) >= Y(0) e^{mu t} / 2;
//! * positive damping (parabolic): Y(t) >= Y(0) e^{(c / sup b) t};
//! * superlinear parabolic: from b Y' >= c Y^p the curve
//!   Y(t) >= (Y(0)^{1-p} - (p-1)(c / sup b) t)^{1/(1-p)}
//!   forces blow-up no later than
//!   T = sup b * Y(0)^{p-1 ... };
//!
//! every constructor checks the declarations and initial hypotheses it
//! needs and refuses to build an envelope whose premises fail, so an
//! existing [`EnvelopeBound`] is already a certificate of its own
//! applicability.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::profile::{adaptive_simpson, CoefficientProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeKind {
    /// Hyperbolic, nondecreasing inertia.
    VariableInertia,
    /// Hyperbolic, bounded inertia, two-exponential form.
    BoundedInertia,
    /// Hyperbolic, integrable damping ratio.
    IntegrableRatio,
    /// Parabolic, positive bounded damping.
    PositiveDamping,
    /// Parabolic superlinear lower curve (finite-time blow-up).
    SuperlinearLower,
}

impl EnvelopeKind {
    pub fn label(&self) -> &'static str {
        match self {
            EnvelopeKind::VariableInertia => "variable_inertia",
            EnvelopeKind::BoundedInertia => "bounded_inertia",
            EnvelopeKind::IntegrableRatio => "integrable_ratio",
            EnvelopeKind::PositiveDamping => "positive_damping",
            EnvelopeKind::SuperlinearLower => "superlinear_lower",
        }
    }
}

#[derive(Debug, Clone)]
enum Form {
    /// floor * y0 * exp(rate * t).
    ExpRate { y0: f64, rate: f64, floor: f64 },
    /// z0/(lp - lm) (e^{lp t} - e^{lm t}) + y0 e^{lm t}.
    TwoExp { z0: f64, lam_p: f64, lam_m: f64, y0: f64 },
    /// y0 * exp(integral of -B + sqrt(c/a(s) + B^2)).
    ExpIntegral {
        y0: f64,
        c: f64,
        ratio: f64,
        profile: CoefficientProfile,
    },
    /// (y0^{1-p} - (p-1) k t)^{1/(1-p)}.
    PowerBlow { y0: f64, k: f64, pm1: f64 },
}

/// A certified lower bound on the projection Y, valid on [0, valid_until).
#[derive(Debug, Clone)]
pub struct EnvelopeBound {
    pub kind: EnvelopeKind,
    /// Upper end of the guaranteed validity window; infinite except for the
    /// blow-up curve, which diverges at its own blow-up time.
    pub valid_until: f64,
    form: Form,
}

impl EnvelopeBound {
    pub fn eval(&self, t: f64) -> f64 {
        match &self.form {
            Form::ExpRate { y0, rate, floor } => floor * y0 * (rate * t).exp(),
            Form::TwoExp { z0, lam_p, lam_m, y0 } => {
                z0 / (lam_p - lam_m) * ((lam_p * t).exp() - (lam_m * t).exp())
                    + y0 * (lam_m * t).exp()
            }
            Form::ExpIntegral { y0, c, ratio, profile } => {
                let b = *ratio;
                let rate = |s: f64| -b + (c / profile.a(s) + b * b).sqrt();
                let mu = adaptive_simpson(&rate, 0.0, t, 1e-12 * (1.0 + t.abs()));
                y0 * mu.exp()
            }
            Form::PowerBlow { y0, k, pm1 } => {
                let base = y0.powf(-pm1) - pm1 * k * t;
                if base <= 0.0 {
                    f64::INFINITY
                } else {
                    base.powf(-1.0 / pm1)
                }
            }
        }
    }

    /// Flat parameter map for run verdicts; keys are stable and sorted.
    pub fn params(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match &self.form {
            Form::ExpRate { y0, rate, floor } => {
                m.insert("y0".into(), *y0);
                m.insert("rate".into(), *rate);
                m.insert("floor".into(), *floor);
            }
            Form::TwoExp { z0, lam_p, lam_m, y0 } => {
                m.insert("y0".into(), *y0);
                m.insert("z0".into(), *z0);
                m.insert("lambda_plus".into(), *lam_p);
                m.insert("lambda_minus".into(), *lam_m);
            }
            Form::ExpIntegral { y0, c, ratio, .. } => {
                m.insert("y0".into(), *y0);
                m.insert("c".into(), *c);
                m.insert("ratio_bound".into(), *ratio);
            }
            Form::PowerBlow { y0, k, pm1 } => {
                m.insert("y0".into(), *y0);
                m.insert("k".into(), *k);
                m.insert("p".into(), pm1 + 1.0);
                m.insert("blowup_time".into(), self.valid_until);
            }
        }
        m
    }
}

/// Threshold check for the variable-inertia clause: the envelope needs
/// Y'(0) >= (-B + sqrt(c / a(0) + B^2)) Y(0).
#[derive(Debug, Clone, Copy)]
pub struct ThresholdReport {
    /// The slope -B + sqrt(c / a(0) + B^2).
    pub slope: f64,
    /// slope * Y(0), the minimum admissible initial rate.
    pub required_rate: f64,
    pub satisfied: bool,
}

pub fn hyperbolic_threshold(
    c: f64,
    prof: &CoefficientProfile,
    y0: f64,
    yp0: f64,
) -> Result<ThresholdReport> {
    if !(c > 0.0) {
        return Err(Error::invalid(format!("growth constant c = {c} must be positive")));
    }
    let a_at_0 = prof.a(0.0);
    if !(a_at_0 > 0.0) {
        return Err(Error::invalid(format!("a(0) = {a_at_0} must be positive")));
    }
    let ratio = prof.ratio_bound()?;
    let slope = -ratio + (c / a_at_0 + ratio * ratio).sqrt();
    let required_rate = slope * y0;
    Ok(ThresholdReport {
        slope,
        required_rate,
        satisfied: yp0 >= required_rate - 1e-12 * required_rate.abs(),
    })
}

fn check_initial(y0: f64, yp0: Option<f64>) -> Result<()> {
    if !(y0 > 0.0) || !y0.is_finite() {
        return Err(Error::HypothesisViolated(format!(
            "initial projection Y(0) = {y0} is not positive"
        )));
    }
    if let Some(yp0) = yp0 {
        if !(yp0 >= 0.0) || !yp0.is_finite() {
            return Err(Error::HypothesisViolated(format!(
                "initial rate Y'(0) = {yp0} is not nonnegative"
            )));
        }
    }
    Ok(())
}

/// Variable-inertia envelope (hyperbolic, a nondecreasing).
pub fn envelope_variable_inertia(
    c: f64,
    prof: &CoefficientProfile,
    y0: f64,
    yp0: f64,
) -> Result<EnvelopeBound> {
    check_initial(y0, Some(yp0))?;
    if !prof.decl.a_monotone {
        return Err(Error::MissingDeclaration(
            "a_monotone (nondecreasing inertia)".into(),
        ));
    }
    let threshold = hyperbolic_threshold(c, prof, y0, yp0)?;
    if !threshold.satisfied {
        return Err(Error::HypothesisViolated(format!(
            "initial rate {yp0} below the threshold {} required by the variable-inertia envelope",
            threshold.required_rate
        )));
    }
    let ratio = prof.ratio_bound()?;
    Ok(EnvelopeBound {
        kind: EnvelopeKind::VariableInertia,
        valid_until: f64::INFINITY,
        form: Form::ExpIntegral {
            y0,
            c,
            ratio,
            profile: prof.clone(),
        },
    })
}

/// Bounded-inertia two-exponential envelope (hyperbolic).
pub fn envelope_bounded_inertia(
    c: f64,
    prof: &CoefficientProfile,
    y0: f64,
    yp0: f64,
) -> Result<EnvelopeBound> {
    check_initial(y0, Some(yp0))?;
    if !(c > 0.0) {
        return Err(Error::invalid(format!("growth constant c = {c} must be positive")));
    }
    let beta = prof.ratio_bound()?;
    let a1 = prof.a1_required()?;
    let gamma = c / a1;
    let disc = (beta * beta + 4.0 * gamma).sqrt();
    let lam_p = 0.5 * (-beta + disc);
    let lam_m = 0.5 * (-beta - disc);
    let z0 = yp0 - lam_m * y0;
    Ok(EnvelopeBound {
        kind: EnvelopeKind::BoundedInertia,
        valid_until: f64::INFINITY,
        form: Form::TwoExp { z0, lam_p, lam_m, y0 },
    })
}

/// Integrable-ratio envelope (hyperbolic, b/a in L1).
pub fn envelope_integrable_ratio(
    c: f64,
    prof: &CoefficientProfile,
    y0: f64,
    yp0: f64,
) -> Result<EnvelopeBound> {
    check_initial(y0, Some(yp0))?;
    if !(c > 0.0) {
        return Err(Error::invalid(format!("growth constant c = {c} must be positive")));
    }
    let a1 = prof.a1_required()?;
    let l1 = prof.b_over_a_l1_required()?;
    let rate = (21.0 * c / (40.0 * a1)).sqrt() * (-l1).exp();
    Ok(EnvelopeBound {
        kind: EnvelopeKind::IntegrableRatio,
        valid_until: f64::INFINITY,
        form: Form::ExpRate { y0, rate, floor: 0.5 },
    })
}

/// Positive-damping envelope (parabolic).
pub fn envelope_positive_damping(
    c: f64,
    prof: &CoefficientProfile,
    y0: f64,
) -> Result<EnvelopeBound> {
    check_initial(y0, None)?;
    if !(c > 0.0) {
        return Err(Error::invalid(format!("growth constant c = {c} must be positive")));
    }
    if !prof.decl.b_positive {
        return Err(Error::MissingDeclaration("b_positive (positive damping)".into()));
    }
    let b_sup = prof.b_sup_required()?;
    if !(b_sup > 0.0) {
        return Err(Error::invalid("sup b must be positive for the parabolic envelope"));
    }
    Ok(EnvelopeBound {
        kind: EnvelopeKind::PositiveDamping,
        valid_until: f64::INFINITY,
        form: Form::ExpRate {
            y0,
            rate: c / b_sup,
            floor: 1.0,
        },
    })
}

/// Blow-up time forced by the superlinear parabolic inequality
/// b Y' >= c Y^p: T = sup b * Y(0)^{1-p} / (c (p - 1)).
pub fn blowup_time_superlinear(
    c: f64,
    p: f64,
    prof: &CoefficientProfile,
    y0: f64,
) -> Result<f64> {
    check_initial(y0, None)?;
    if !(c > 0.0) || !(p > 1.0) {
        return Err(Error::invalid(format!(
            "superlinear curve needs c > 0 and p > 1, got c = {c}, p = {p}"
        )));
    }
    if !prof.decl.b_positive {
        return Err(Error::MissingDeclaration("b_positive (positive damping)".into()));
    }
    let b_sup = prof.b_sup_required()?;
    if !(b_sup > 0.0) {
        return Err(Error::invalid("sup b must be positive for the parabolic envelope"));
    }
    Ok(b_sup * y0.powf(1.0 - p) / (c * (p - 1.0)))
}

/// Superlinear parabolic lower curve; diverges at [`blowup_time_superlinear`].
pub fn lower_curve_superlinear(
    c: f64,
    p: f64,
    prof: &CoefficientProfile,
    y0: f64,
) -> Result<EnvelopeBound> {
    let t_star = blowup_time_superlinear(c, p, prof, y0)?;
    let b_sup = prof.b_sup_required()?;
    Ok(EnvelopeBound {
        kind: EnvelopeKind::SuperlinearLower,
        valid_until: t_star,
        form: Form::PowerBlow {
            y0,
            k: c / b_sup,
            pm1: p - 1.0,
        },
    })
}
