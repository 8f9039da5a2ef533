//! Steady states -Delta v = f(x, v) on the truncated domains.
//!
//! Three families are built in:
//!
//! * the zero state (valid whenever f(x, 0) = 0),
//! * the explicit planar exponential family
//!   v(r) = log(32 lambda^2 / (4 + lambda^2 r^2)^2), which solves
//!   -Delta v = e^v on R^2 with v(0) = log(2 lambda^2),
//! * supercritical power profiles obtained by shooting the radial ODE
//!   v'' + (n-1)/r v' + |v|^p = 0 from v(0) = v_center, v'(0) = 0.
//!
//! Values are stored on all grid nodes, boundary included. The boundary
//! sample of a truncated profile is generally not zero; validation and the
//! evolution source term use the true sample, and its magnitude is reported
//! as boundary leakage instead of being silently folded into the residual.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind};
use crate::nonlinearity::Nonlinearity;
use crate::operator::{assemble_dirichlet_laplacian, OperatorMatrix};
use crate::rk::{self, RkOptions, RkStatus};

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub grid: Grid,
    /// Nodal samples on all nodes of `grid`.
    pub values: Vec<f64>,
    pub nonlinearity: Nonlinearity,
    /// Max abs nodal residual of -Delta v - f(x, v) over the checked
    /// interior nodes, as reported by [`validate_steady`] against the plain
    /// Dirichlet Laplacian at construction time.
    pub residual_norm: f64,
}

/// Residual report for a steady state against a given operator.
#[derive(Debug, Clone, Copy)]
pub struct SteadyReport {
    /// Max abs residual over interior nodes, the outermost one excluded.
    pub residual_max: f64,
    /// Residual at the excluded node adjacent to the truncation boundary.
    pub excluded_node_residual: f64,
    /// Magnitude of the steady state's boundary trace.
    pub boundary_value: f64,
    pub nodes_checked: usize,
}

/// Nodal residual check L v - f(x, v) on interior nodes.
///
/// The node adjacent to the outer boundary is excluded from the max and
/// reported separately: on truncated domains it carries the truncation
/// error of the artificial Dirichlet condition.
pub fn validate_steady(op: &OperatorMatrix, s: &SteadyState) -> Result<SteadyReport> {
    let lu = op.apply_field(&s.grid, &s.values)?;
    let xs = s.grid.interior_nodes();
    let dim = lu.len();
    if dim < 2 {
        return Err(Error::invalid("too few interior nodes to validate"));
    }
    let mut residual_max = 0.0f64;
    for k in 0..dim - 1 {
        let v = s.values[s.grid.interior_range().start + k];
        let r = lu[k] - s.nonlinearity.eval(xs[k], v);
        residual_max = residual_max.max(r.abs());
    }
    let last_v = s.values[s.grid.interior_range().start + dim - 1];
    let excluded = (lu[dim - 1] - s.nonlinearity.eval(xs[dim - 1], last_v)).abs();
    let mut boundary_value = s.values[s.grid.node_count - 1].abs();
    if s.grid.kind == GridKind::Interval {
        boundary_value = boundary_value.max(s.values[0].abs());
    }
    Ok(SteadyReport {
        residual_max,
        excluded_node_residual: excluded,
        boundary_value,
        nodes_checked: dim - 1,
    })
}

fn with_self_residual(grid: Grid, values: Vec<f64>, f: Nonlinearity) -> Result<SteadyState> {
    let mut s = SteadyState {
        grid,
        values,
        nonlinearity: f,
        residual_norm: f64::NAN,
    };
    let lap = assemble_dirichlet_laplacian(&s.grid)?;
    s.residual_norm = validate_steady(&lap, &s)?.residual_max;
    Ok(s)
}

impl SteadyState {
    /// The zero steady state; requires f(x, 0) = 0 to be exact.
    pub fn zero(grid: &Grid, f: Nonlinearity) -> Result<Self> {
        let values = vec![0.0; grid.node_count];
        with_self_residual(grid.clone(), values, f)
    }

    /// Steady state from fully sampled nodal values (table input).
    pub fn from_samples(grid: &Grid, values: Vec<f64>, f: Nonlinearity) -> Result<Self> {
        if values.len() != grid.node_count {
            return Err(Error::DimensionMismatch {
                expected: grid.node_count,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("steady state contains non-finite samples"));
        }
        with_self_residual(grid.clone(), values, f)
    }

    /// Interior samples, aligned with operator indexing.
    pub fn interior_values(&self) -> &[f64] {
        &self.values[self.grid.interior_range()]
    }
}

/// Explicit exponential steady state on a planar radial grid.
pub fn chen_li_exponential(grid: &Grid, lambda: f64) -> Result<SteadyState> {
    if grid.kind != GridKind::Radial || grid.dimension != 2 {
        return Err(Error::invalid(
            "the exponential family lives on a radial grid in dimension 2",
        ));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda = {lambda} must be positive")));
    }
    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| (32.0 * lambda * lambda).ln() - 2.0 * (4.0 + lambda * lambda * r * r).ln())
        .collect();
    with_self_residual(grid.clone(), values, Nonlinearity::exponential())
}

/// Positive radial profile of -Delta v = |v|^p by shooting, for
/// supercritical-or-critical exponents p >= (n+2)/(n-2), n > 2.
///
/// The ODE is started just off the origin from the even series
/// v(r) = v_center - v_center^p r^2 / (2n) + O(r^4), integrated with the
/// adaptive stepper (relative tolerance `tol`, steps capped at the grid
/// spacing) and resampled onto the nodes by cubic Hermite interpolation.
pub fn power_steady_shooting(
    grid: &Grid,
    p: f64,
    v_center: f64,
    tol: f64,
) -> Result<SteadyState> {
    if grid.kind != GridKind::Radial {
        return Err(Error::invalid("shooting needs a radial grid"));
    }
    let n = grid.dimension;
    if n <= 2 {
        return Err(Error::invalid("shooting needs ambient dimension n > 2"));
    }
    let critical = (n as f64 + 2.0) / (n as f64 - 2.0);
    if p < critical - 1e-12 {
        return Err(Error::invalid(format!(
            "p = {p} is below the critical exponent {critical} for n = {n}"
        )));
    }
    if !(v_center >= 0.0) {
        return Err(Error::invalid("v_center must be nonnegative"));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("tolerance {tol} out of range")));
    }
    let f = Nonlinearity::power_abs(p)?;
    if v_center == 0.0 {
        return with_self_residual(grid.clone(), vec![0.0; grid.node_count], f);
    }

    let nf = n as f64;
    // Start just off the origin, inside the first cell and well inside the
    // profile's own curvature scale v_center^{-(p-1)/2}.
    let scale = v_center.powf(-(p - 1.0) / 2.0).min(1.0);
    let r_start = (1e-4 * scale).min(0.25 * grid.spacing);
    let v2 = -v_center.powf(p) / (2.0 * nf);
    let y0 = [v_center + v2 * r_start * r_start, 2.0 * v2 * r_start];

    let opts = RkOptions {
        rel_tol: tol,
        abs_tol: tol * 1e-2,
        max_step: grid.spacing,
        ..RkOptions::default()
    };
    let run = rk::integrate(
        |r, y: &[f64; 2]| Ok([y[1], -(nf - 1.0) / r * y[1] - y[0].abs().powf(p)]),
        r_start,
        y0,
        grid.x_hi,
        &opts,
        |_r, y| y[0] <= 0.0,
    )?;
    match run.status {
        RkStatus::Stopped { t } => {
            return Err(Error::HypothesisViolated(format!(
                "shooting profile crossed zero at r = {t}, before the truncation radius"
            )));
        }
        RkStatus::Stalled { t } => return Err(Error::IntegratorStall { t }),
        _ => {}
    }

    let values: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&r| {
            if r <= r_start {
                v_center + v2 * r * r
            } else {
                rk::hermite_eval(&run.samples, r, 0)
            }
        })
        .collect();
    with_self_residual(grid.clone(), values, f)
}
