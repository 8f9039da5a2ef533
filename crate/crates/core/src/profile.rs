//! Time-dependent coefficients a(t), b(t) and their declared norm data.
//!
//! The instability certificates consume declared scalars: a0 <= inf a,
//! sup a <= a1, sup |b|, the L1 norms of b or b/a, and the structural flags
//! (a nondecreasing, b positive). The only envelope that touches a handle
//! is the variable-inertia one, which integrates the audited a itself. The
//! handles otherwise drive the time stepper and the declaration audit:
//! [`CoefficientProfile::certify`] samples both handles densely on the run
//! horizon, integrates |b| and |b/a|, and rejects any declaration the
//! samples contradict. A failed audit is reported as a hypothesis
//! violation, the same verdict class as a sign-changing principal
//! eigenfunction, because the declared norms are exactly the hypotheses of
//! the growth lemmas.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Which time derivatives the coefficients multiply: the hyperbolic
/// equation reads a u_tt + b u_t + L u = f, the parabolic one drops the
/// inertial term and needs b > 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationKind {
    Hyperbolic,
    Parabolic,
}

impl EquationKind {
    pub fn label(&self) -> &'static str {
        match self {
            EquationKind::Hyperbolic => "hyperbolic",
            EquationKind::Parabolic => "parabolic",
        }
    }
}

/// Declared norm bounds for a coefficient pair over the whole run horizon.
#[derive(Debug, Clone)]
pub struct Declarations {
    /// Positive lower bound a0 <= inf a. Always required.
    pub a0: f64,
    /// Upper bound sup a <= a1.
    pub a1: Option<f64>,
    /// Declares a nondecreasing, so a(0) = inf a and a' >= 0.
    pub a_monotone: bool,
    /// Upper bound sup |b| <= b_sup.
    pub b_sup: Option<f64>,
    /// Upper bound on the L1 norm of b over [0, infinity).
    pub b_l1: Option<f64>,
    /// Upper bound on the L1 norm of b/a over [0, infinity).
    pub b_over_a_l1: Option<f64>,
    /// Declares b(t) > 0 pointwise.
    pub b_positive: bool,
}

impl Default for Declarations {
    fn default() -> Self {
        Declarations {
            a0: 1.0,
            a1: None,
            a_monotone: false,
            b_sup: None,
            b_l1: None,
            b_over_a_l1: None,
            b_positive: false,
        }
    }
}

/// Coefficient pair with declared norms. Cheap to clone; the handles are
/// shared.
#[derive(Clone)]
pub struct CoefficientProfile {
    pub label: String,
    a: TimeFn,
    b: TimeFn,
    pub decl: Declarations,
}

impl fmt::Debug for CoefficientProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientProfile")
            .field("label", &self.label)
            .field("decl", &self.decl)
            .finish()
    }
}

/// Report returned by a successful certification pass.
#[derive(Debug, Clone, Copy)]
pub struct CertifyReport {
    pub samples: usize,
    pub a_min_observed: f64,
    pub a_max_observed: f64,
    pub b_sup_observed: f64,
    pub b_l1_observed: Option<f64>,
    pub b_over_a_l1_observed: Option<f64>,
}

impl CoefficientProfile {
    pub fn new(
        label: impl Into<String>,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        decl: Declarations,
    ) -> Result<Self> {
        if !(decl.a0 > 0.0) || !decl.a0.is_finite() {
            return Err(Error::invalid(format!(
                "a0 = {} must be a positive finite lower bound",
                decl.a0
            )));
        }
        if let Some(a1) = decl.a1 {
            if !(a1 >= decl.a0) || !a1.is_finite() {
                return Err(Error::invalid(format!(
                    "a1 = {a1} must be finite and at least a0 = {}",
                    decl.a0
                )));
            }
        }
        for (name, v) in [
            ("b_sup", decl.b_sup),
            ("b_l1", decl.b_l1),
            ("b_over_a_l1", decl.b_over_a_l1),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "{name} = {v} must be finite and nonnegative"
                    )));
                }
            }
        }
        Ok(CoefficientProfile {
            label: label.into(),
            a: Arc::new(a),
            b: Arc::new(b),
            decl,
        })
    }

    /// Constant coefficients with their exact declarations filled in.
    pub fn constant(a_val: f64, b_val: f64) -> Result<Self> {
        let decl = Declarations {
            a0: a_val,
            a1: Some(a_val),
            a_monotone: true,
            b_sup: Some(b_val.abs()),
            b_l1: None,
            b_over_a_l1: None,
            b_positive: b_val > 0.0,
        };
        Self::new(
            format!("a = {a_val}, b = {b_val}"),
            move |_| a_val,
            move |_| b_val,
            decl,
        )
    }

    pub fn a(&self, t: f64) -> f64 {
        (self.a)(t)
    }

    pub fn b(&self, t: f64) -> f64 {
        (self.b)(t)
    }

    pub fn a0(&self) -> f64 {
        self.decl.a0
    }

    pub fn a1_required(&self) -> Result<f64> {
        self.decl
            .a1
            .ok_or_else(|| Error::MissingDeclaration("a1 (upper bound on a)".into()))
    }

    pub fn b_sup_required(&self) -> Result<f64> {
        self.decl
            .b_sup
            .ok_or_else(|| Error::MissingDeclaration("b_sup (sup norm of b)".into()))
    }

    pub fn b_over_a_l1_required(&self) -> Result<f64> {
        self.decl.b_over_a_l1.ok_or_else(|| {
            Error::MissingDeclaration("b_over_a_l1 (L1 norm of b/a)".into())
        })
    }

    /// The damping-to-inertia ratio B = sup|b| / a0 used by the hyperbolic
    /// envelopes.
    pub fn ratio_bound(&self) -> Result<f64> {
        Ok(self.b_sup_required()? / self.decl.a0)
    }

    /// Audits every declaration against `samples` evaluations of the
    /// handles on [0, t_max], plus adaptive quadrature for the L1 norms.
    pub fn certify(&self, t_max: f64, samples: usize) -> Result<CertifyReport> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::invalid(format!("t_max = {t_max} out of range")));
        }
        let n = samples.max(64);
        let mut a_min = f64::INFINITY;
        let mut a_max = f64::NEG_INFINITY;
        let mut b_sup = 0.0f64;
        let mut a_prev = f64::NEG_INFINITY;
        for i in 0..=n {
            let t = t_max * i as f64 / n as f64;
            let at = self.a(t);
            let bt = self.b(t);
            if !at.is_finite() || !bt.is_finite() {
                return Err(Error::invalid(format!(
                    "coefficient handle returned a non-finite value at t = {t}"
                )));
            }
            a_min = a_min.min(at);
            a_max = a_max.max(at);
            b_sup = b_sup.max(bt.abs());
            if self.decl.b_positive && bt <= 0.0 {
                return Err(Error::HypothesisViolated(format!(
                    "b declared positive but b({t}) = {bt}"
                )));
            }
            if self.decl.a_monotone && at < a_prev * (1.0 - 1e-12) - 1e-300 {
                return Err(Error::HypothesisViolated(format!(
                    "a declared nondecreasing but a({t}) = {at} < {a_prev}"
                )));
            }
            a_prev = a_prev.max(at);
        }
        if a_min < self.decl.a0 * (1.0 - 1e-9) {
            return Err(Error::HypothesisViolated(format!(
                "declared a0 = {} exceeds the observed minimum {a_min}",
                self.decl.a0
            )));
        }
        if let Some(a1) = self.decl.a1 {
            if a_max > a1 * (1.0 + 1e-9) {
                return Err(Error::HypothesisViolated(format!(
                    "declared a1 = {a1} below the observed maximum {a_max}"
                )));
            }
        }
        if let Some(sup) = self.decl.b_sup {
            if b_sup > sup * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::HypothesisViolated(format!(
                    "declared sup|b| = {sup} below the observed {b_sup}"
                )));
            }
        }
        let b = self.b.clone();
        let b_l1_observed = match self.decl.b_l1 {
            Some(l1) => {
                let got = adaptive_simpson(&|t| b(t).abs(), 0.0, t_max, 1e-10 * (1.0 + l1));
                if got > l1 * (1.0 + 1e-6) + 1e-12 {
                    return Err(Error::HypothesisViolated(format!(
                        "declared L1 norm of b = {l1} below the observed {got} on [0, {t_max}]"
                    )));
                }
                Some(got)
            }
            None => None,
        };
        let a = self.a.clone();
        let b = self.b.clone();
        let b_over_a_l1_observed = match self.decl.b_over_a_l1 {
            Some(l1) => {
                let got =
                    adaptive_simpson(&|t| (b(t) / a(t)).abs(), 0.0, t_max, 1e-10 * (1.0 + l1));
                if got > l1 * (1.0 + 1e-6) + 1e-12 {
                    return Err(Error::HypothesisViolated(format!(
                        "declared L1 norm of b/a = {l1} below the observed {got} on [0, {t_max}]"
                    )));
                }
                Some(got)
            }
            None => None,
        };
        Ok(CertifyReport {
            samples: n + 1,
            a_min_observed: a_min,
            a_max_observed: a_max,
            b_sup_observed: b_sup,
            b_l1_observed,
            b_over_a_l1_observed,
        })
    }
}

/// Adaptive Simpson quadrature with a recursion depth cap. Good to the
/// requested absolute tolerance for smooth integrands and still convergent
/// on the kinks of |b|.
pub(crate) fn adaptive_simpson(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, lo: f64, flo: f64, hi: f64, fhi: f64) -> (f64, f64, f64) {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        ((hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi), mid, fmid)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        lo: f64,
        flo: f64,
        hi: f64,
        fhi: f64,
        whole: f64,
        mid: f64,
        fmid: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lmid, flmid) = simpson(f, lo, flo, mid, fmid);
        let (right, rmid, frmid) = simpson(f, mid, fmid, hi, fhi);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, lo, flo, mid, fmid, left, lmid, flmid, 0.5 * tol, depth - 1)
            + recurse(f, mid, fmid, hi, fhi, right, rmid, frmid, 0.5 * tol, depth - 1)
    }
    if lo == hi {
        return 0.0;
    }
    let flo = f(lo);
    let fhi = f(hi);
    let (whole, mid, fmid) = simpson(f, lo, flo, hi, fhi);
    recurse(f, lo, flo, hi, fhi, whole, mid, fmid, tol.max(1e-300), 48)
}
