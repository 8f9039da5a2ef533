//! Nonlinear source terms f(x, u) with the convexity metadata the Kaplan
//! argument needs.
//!
//! Every term carries its convexity in u (the projected differential
//! inequality requires f(x, u) - f(x, v) - f_u(x, v)(u - v) to have one
//! sign) and, where applicable, a lower-bound pair (C, p) certifying
//! f(x, u) >= C |u|^p, the hypothesis behind the finite-time blow-up
//! results. Exponential terms carry no such pair: no power lower bound
//! holds as u -> -infinity, and the blow-up statements are out of scope
//! for them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Concave,
}

/// Power lower bound f(x, u) >= c |u|^p.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    pub c: f64,
    pub p: f64,
}

type ScalarFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Nonlinearity {
    pub label: String,
    pub convexity: Convexity,
    pub lower_bound: Option<LowerBound>,
    eval: ScalarFn,
    deriv: ScalarFn,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("label", &self.label)
            .field("convexity", &self.convexity)
            .field("lower_bound", &self.lower_bound)
            .finish()
    }
}

/// Sample points for the construction-time convexity audit. Zero is
/// included on purpose: |u|^p and u^2 have their flattest spot there.
const AUDIT_POINTS: usize = 25;
const AUDIT_RANGE: f64 = 3.0;

impl Nonlinearity {
    /// f(x, u) = |u|^p, convex for p > 1.
    pub fn power_abs(p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::invalid(format!("power_abs needs p > 1, got {p}")));
        }
        Self::checked(
            format!("power_abs(p={p})"),
            Convexity::Convex,
            Some(LowerBound { c: 1.0, p }),
            Arc::new(move |_x, u: f64| u.abs().powf(p)),
            Arc::new(move |_x, u: f64| {
                if u == 0.0 {
                    0.0
                } else {
                    p * u.abs().powf(p - 1.0) * u.signum()
                }
            }),
        )
    }

    /// f(x, u) = -|u|^p, the concave mirror of `power_abs`.
    pub fn power_neg(p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::invalid(format!("power_neg needs p > 1, got {p}")));
        }
        Self::checked(
            format!("power_neg(p={p})"),
            Convexity::Concave,
            None,
            Arc::new(move |_x, u: f64| -u.abs().powf(p)),
            Arc::new(move |_x, u: f64| {
                if u == 0.0 {
                    0.0
                } else {
                    -p * u.abs().powf(p - 1.0) * u.signum()
                }
            }),
        )
    }

    /// f(x, u) = e^u.
    pub fn exponential() -> Self {
        Self::checked(
            "exponential".to_string(),
            Convexity::Convex,
            None,
            Arc::new(|_x, u: f64| u.exp()),
            Arc::new(|_x, u: f64| u.exp()),
        )
        .expect("e^u is convex")
    }

    /// f(x, u) = u^2.
    pub fn quadratic() -> Self {
        Self::checked(
            "quadratic".to_string(),
            Convexity::Convex,
            Some(LowerBound { c: 1.0, p: 2.0 }),
            Arc::new(|_x, u: f64| u * u),
            Arc::new(|_x, u: f64| 2.0 * u),
        )
        .expect("u^2 is convex")
    }

    /// f(x, u) = -u^2, the concave quadratic.
    pub fn quadratic_neg() -> Self {
        Self::checked(
            "quadratic_neg".to_string(),
            Convexity::Concave,
            None,
            Arc::new(|_x, u: f64| -u * u),
            Arc::new(|_x, u: f64| -2.0 * u),
        )
        .expect("-u^2 is concave")
    }

    /// User-supplied term. The claimed convexity is audited at construction
    /// by midpoint sampling; a claim the samples contradict is rejected.
    pub fn custom(
        label: impl Into<String>,
        eval: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        convexity: Convexity,
        lower_bound: Option<LowerBound>,
    ) -> Result<Self> {
        Self::checked(
            label.into(),
            convexity,
            lower_bound,
            Arc::new(eval),
            Arc::new(deriv),
        )
    }

    fn checked(
        label: String,
        convexity: Convexity,
        lower_bound: Option<LowerBound>,
        eval: ScalarFn,
        deriv: ScalarFn,
    ) -> Result<Self> {
        let f = Nonlinearity {
            label,
            convexity,
            lower_bound,
            eval,
            deriv,
        };
        f.audit_convexity()?;
        Ok(f)
    }

    pub fn eval(&self, x: f64, u: f64) -> f64 {
        (self.eval)(x, u)
    }

    pub fn deriv(&self, x: f64, u: f64) -> f64 {
        (self.deriv)(x, u)
    }

    /// Midpoint convexity audit over a fixed sample set, 1e-12 slack.
    fn audit_convexity(&self) -> Result<()> {
        let pts: Vec<f64> = (0..AUDIT_POINTS)
            .map(|i| -AUDIT_RANGE + 2.0 * AUDIT_RANGE * i as f64 / (AUDIT_POINTS - 1) as f64)
            .collect();
        for (idx, &a) in pts.iter().enumerate() {
            for &b in &pts[idx + 1..] {
                let mid = self.eval(0.0, 0.5 * (a + b));
                let avg = 0.5 * (self.eval(0.0, a) + self.eval(0.0, b));
                let slack = 1e-12 * (1.0 + mid.abs().max(avg.abs()));
                let ok = match self.convexity {
                    Convexity::Convex => mid <= avg + slack,
                    Convexity::Concave => mid >= avg - slack,
                };
                if !ok {
                    return Err(Error::invalid(format!(
                        "nonlinearity '{}' fails its declared {:?} midpoint test at ({a}, {b})",
                        self.label, self.convexity
                    )));
                }
            }
        }
        Ok(())
    }
}
