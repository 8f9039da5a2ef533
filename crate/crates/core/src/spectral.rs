//! Principal eigenpairs of linearized operators and the supercritical
//! instability dichotomy.
//!
//! The linearization of L u - f(x, u) at a steady state v is
//! L - f_u(x, v). Its principal eigenvalue is written lambda_1 = -sigma^2;
//! a positive sigma^2 is the growth rate entering every envelope, and the
//! associated eigenfunction phi_1 >= 0 is the weight of the Kaplan
//! functional. A sign-changing candidate is reported as a hypothesis
//! violation, not a crash: the projection argument needs phi_1 >= 0.
//!
//! For the pure power problem on R^n the existence of a negative eigenvalue
//! is classical: with v ~ c r^{-2/(p-1)} at infinity the borderline is the
//! Hardy comparison
//!
//! ```text
//!   ((n-2)/2)^2 < (2p/(p-1)) (n - 2 - 2/(p-1)),
//! ```
//!
//! whose equality case is exactly the Joseph-Lundgren exponent p_c(n)
//! returned by [`pc_threshold`]; the two sides of the dichotomy agree
//! algebraically, and the sweep tests check this numerically.

use crate::error::{Error, Result};
use crate::grid::GridKind;
use crate::operator::OperatorMatrix;
use crate::steady::SteadyState;

/// Principal eigenpair of a symmetric operator.
#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Principal (smallest) eigenvalue lambda_1 = -sigma^2.
    pub lambda1: f64,
    /// Growth rate squared; positive exactly when the state is linearly
    /// unstable.
    pub sigma_sq: f64,
    /// Nodal eigenfunction on interior nodes, sign-normalized and of unit
    /// L2 norm under the grid quadrature.
    pub phi1: Vec<f64>,
    /// Relative residual ||M psi - lambda psi|| / ||psi|| in the symmetric
    /// frame at convergence.
    pub residual: f64,
    pub iterations: usize,
}

/// Subtracts the nonlinear term's derivative at the steady state from the
/// operator diagonal: returns L - f_u(x, v) acting on interior nodes.
pub fn assemble_linearized(op: &OperatorMatrix, s: &SteadyState) -> Result<OperatorMatrix> {
    if op.dim() != s.grid.interior_count() {
        return Err(Error::DimensionMismatch {
            expected: s.grid.interior_count(),
            got: op.dim(),
        });
    }
    let mut out = op.clone();
    let xs = s.grid.interior_nodes();
    let vs = s.interior_values();
    let derivs: Vec<f64> = xs
        .iter()
        .zip(vs)
        .map(|(&x, &v)| s.nonlinearity.deriv(x, v))
        .collect();
    out.subtract_diagonal(&derivs)?;
    Ok(out)
}

/// Thomas solve of (M - s I) x = rhs for symmetric tridiagonal M.
/// Near-singular pivots are nudged; inverse iteration renormalizes and the
/// residual check is the arbiter of quality.
fn shifted_solve(diag: &[f64], off: &[f64], s: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let guard = |p: f64| -> f64 {
        if p.abs() < 1e-300 {
            1e-300
        } else {
            p
        }
    };
    let mut piv = guard(diag[0] - s);
    c[0] = if n > 1 { off[0] / piv } else { 0.0 };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = guard(diag[i] - s - off[i - 1] * c[i - 1]);
        if i < n - 1 {
            c[i] = off[i] / piv;
        }
        d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / piv;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    x
}

/// Number of eigenvalues of the symmetric tridiagonal strictly below `s`,
/// read off the signs of the LDL^T pivots of M - s I (Sturm sequence).
/// Grazing pivots are pushed to the negative side, so an exact hit counts
/// as crossed; bisection only needs the counts at the bracket ends to be
/// honest, which they are to working precision.
fn count_below(diag: &[f64], off: &[f64], s: f64) -> usize {
    let mut count = 0usize;
    let mut prev = 1.0f64;
    for i in 0..diag.len() {
        let mut piv = diag[i] - s;
        if i > 0 {
            piv -= off[i - 1] * off[i - 1] / prev;
        }
        if !(piv.abs() > 1e-300) {
            piv = -1e-300;
        }
        if piv < 0.0 {
            count += 1;
        }
        prev = piv;
    }
    count
}

/// Smallest eigenpair by Sturm bisection and inverse iteration.
///
/// Bisection on the Sturm count over the Gershgorin interval isolates
/// lambda_1 to working precision; no other eigenvalue can be mistaken for
/// it, which matters for the clustered low end of radial linearizations.
/// Inverse iteration from the positive constant vector at a shift a hair
/// below the isolated value then converges in one or two solves. An
/// externally supplied `shift_guess` only tightens the initial bracket;
/// the Sturm count decides which side of lambda_1 it falls on, so a bad
/// guess cannot change the answer. `tol` bounds the accepted residual
/// relative to the operator scale (the largest Gershgorin row bound).
pub fn principal_eigenpair(
    op: &OperatorMatrix,
    shift_guess: Option<f64>,
    tol: f64,
) -> Result<EigenPair> {
    let dim = op.dim();
    if dim == 0 {
        return Err(Error::invalid("empty operator"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let diag = op.diag();
    let off = op.off();

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut scale = 1.0f64;
    for i in 0..dim {
        let mut radius = 0.0;
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < dim {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
        scale = scale.max(diag[i].abs() + radius);
    }
    let pad = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
    let mut lo = lo - pad;
    let mut hi = hi + pad;
    if let Some(g) = shift_guess {
        if g.is_finite() && g > lo && g < hi {
            if count_below(diag, off, g) >= 1 {
                hi = g;
            } else {
                lo = g;
            }
        }
    }
    let mut iterations = 0usize;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        iterations += 1;
        if count_below(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda_iso = 0.5 * (lo + hi);

    let shift = lambda_iso - 64.0 * f64::EPSILON * scale;
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut rho = lambda_iso;
    let mut residual = f64::INFINITY;
    let allowed = tol * scale;
    const MAX_ITER: usize = 60;

    for iter in 1..=MAX_ITER {
        iterations += 1;
        let x = shifted_solve(diag, off, shift, &v);
        let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NonConvergence(format!(
                "inverse iteration produced a degenerate vector at iteration {iter}"
            )));
        }
        v = x.into_iter().map(|a| a / norm).collect();
        let mv = op.apply(&v)?;
        rho = v.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>();
        residual = mv
            .iter()
            .zip(&v)
            .map(|(m, a)| (m - rho * a) * (m - rho * a))
            .sum::<f64>()
            .sqrt();
        if residual <= allowed {
            break;
        }
    }
    if residual > allowed {
        return Err(Error::NonConvergence(format!(
            "eigensolver residual {residual} exceeds {allowed} \
             (tol {tol} at operator scale {scale})"
        )));
    }

    // Sign normalization: largest-magnitude entry positive.
    let (imax, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("nonempty");
    if v[imax] < 0.0 {
        for a in v.iter_mut() {
            *a = -*a;
        }
    }

    // Back to the nodal frame, then unit L2 norm under the grid quadrature.
    let mut phi: Vec<f64> = v
        .iter()
        .zip(op.mass())
        .map(|(a, m)| a / m.sqrt())
        .collect();
    let qnorm = phi
        .iter()
        .zip(op.quad_weights())
        .map(|(p, w)| w * p * p)
        .sum::<f64>()
        .sqrt();
    if !(qnorm > 0.0) {
        return Err(Error::NonConvergence(
            "eigenfunction has zero quadrature norm".into(),
        ));
    }
    for p in phi.iter_mut() {
        *p /= qnorm;
    }

    let min = phi.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-8 {
        return Err(Error::HypothesisViolated(format!(
            "principal eigenfunction changes sign (min entry {min:.3e}); \
             the projection hypothesis phi_1 >= 0 fails on this operator"
        )));
    }

    Ok(EigenPair {
        lambda1: rho,
        sigma_sq: -rho,
        phi1: phi,
        residual,
        iterations,
    })
}

/// Quadratic energy E[xi] = integral(|grad xi|^2 - e^v xi^2) of the
/// exponential linearization on a planar radial grid. A trial with
/// E[xi] < 0 certifies sigma^2 > 0 for the same operator.
pub fn energy_functional_exponential(s: &SteadyState, xi: &[f64]) -> Result<f64> {
    let grid = &s.grid;
    if grid.kind != GridKind::Radial || grid.dimension != 2 {
        return Err(Error::invalid(
            "the exponential energy functional is defined on planar radial grids",
        ));
    }
    if xi.len() != grid.node_count {
        return Err(Error::DimensionMismatch {
            expected: grid.node_count,
            got: xi.len(),
        });
    }
    let n = grid.node_count;
    let h = grid.spacing;
    let mut integrand = vec![0.0; n];
    for i in 0..n {
        let dxi = if i == 0 {
            (-3.0 * xi[0] + 4.0 * xi[1] - xi[2]) / (2.0 * h)
        } else if i == n - 1 {
            (3.0 * xi[n - 1] - 4.0 * xi[n - 2] + xi[n - 3]) / (2.0 * h)
        } else {
            (xi[i + 1] - xi[i - 1]) / (2.0 * h)
        };
        integrand[i] = dxi * dxi - s.values[i].exp() * xi[i] * xi[i];
    }
    grid.quadrature(&integrand)
}

/// Eigenvalue-existence inequality for the linearization of the pure power
/// problem on R^n at a supercritical steady state.
pub fn gnw_condition(n: usize, p: f64) -> Result<bool> {
    let critical = check_supercritical(n, p)?;
    let _ = critical;
    let nf = n as f64;
    let lhs = ((nf - 2.0) / 2.0).powi(2);
    let q = 2.0 / (p - 1.0);
    let rhs = p * q * (nf - 2.0 - q);
    Ok(lhs < rhs)
}

/// Joseph-Lundgren threshold: infinite for n <= 10, else
/// (n^2 - 8n + 4 + 8 sqrt(n-1)) / ((n-2)(n-10)).
pub fn pc_threshold(n: usize) -> Result<f64> {
    if n <= 2 {
        return Err(Error::invalid("pc_threshold needs n > 2"));
    }
    if n <= 10 {
        return Ok(f64::INFINITY);
    }
    let nf = n as f64;
    Ok((nf * nf - 8.0 * nf + 4.0 + 8.0 * (nf - 1.0).sqrt()) / ((nf - 2.0) * (nf - 10.0)))
}

fn check_supercritical(n: usize, p: f64) -> Result<f64> {
    if n <= 2 {
        return Err(Error::invalid("the dichotomy needs n > 2"));
    }
    let critical = (n as f64 + 2.0) / (n as f64 - 2.0);
    if !(p >= critical) {
        return Err(Error::invalid(format!(
            "p = {p} below the critical exponent {critical} for n = {n}"
        )));
    }
    Ok(critical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_interval_grid, build_radial_grid};
    use crate::nonlinearity::Nonlinearity;
    use crate::operator::{add_potential, assemble_dirichlet_laplacian, PotentialField};
    use crate::steady::{chen_li_exponential, SteadyState};

    const PI: f64 = std::f64::consts::PI;
    /// Smallest eigenvalue of the 201-node (0, pi) Laplacian,
    /// (2/h^2)(1 - cos h) with h = pi/200.
    const LAM1_201: f64 = 0.999_979_438_493_276_66;

    #[test]
    fn diagonal_matrix_principal_pair() {
        let op = OperatorMatrix::from_tridiag(vec![1.0, 2.0, 3.0], vec![0.0, 0.0]).unwrap();
        let e = principal_eigenpair(&op, None, 1e-12).unwrap();
        assert!((e.lambda1 - 1.0).abs() < 1e-12);
        assert!((e.sigma_sq + 1.0).abs() < 1e-12);
        assert!((e.phi1[0] - 1.0).abs() < 1e-10);
        assert!(e.phi1[1].abs() < 1e-10 && e.phi1[2].abs() < 1e-10);
    }

    #[test]
    fn interval_laplacian_matches_discrete_formula() {
        let g = build_interval_grid(0.0, PI, 201).unwrap();
        let op = assemble_dirichlet_laplacian(&g).unwrap();
        let e = principal_eigenpair(&op, None, 1e-12).unwrap();
        assert!(
            (e.lambda1 - LAM1_201).abs() < 1e-9,
            "lambda1 = {}",
            e.lambda1
        );
        assert!(e.residual <= 1e-8);
        // Eigenfunction is the first discrete sine mode.
        let sins: Vec<f64> = g.interior_nodes().iter().map(|x| x.sin()).collect();
        let nrm = g.l2_norm_interior(&sins);
        for (a, b) in e.phi1.iter().zip(&sins) {
            assert!((a - b / nrm).abs() < 1e-7);
        }
        // Rayleigh quotient of the first discrete sine mode is the
        // eigenvalue to round-off.
        let r = op.rayleigh_nodal(&sins).unwrap();
        assert!((r - LAM1_201).abs() < 1e-10);
    }

    #[test]
    fn shifted_operator_and_richardson_consistency() {
        let run = |nodes: usize| -> f64 {
            let g = build_interval_grid(0.0, PI, nodes).unwrap();
            let op = assemble_dirichlet_laplacian(&g).unwrap();
            let shifted = add_potential(&op, &PotentialField::constant(&g, -2.0).unwrap()).unwrap();
            principal_eigenpair(&shifted, None, 1e-12).unwrap().sigma_sq
        };
        let s_h = run(201);
        let s_h2 = run(401);
        assert!((s_h - 1.0).abs() < 1e-3);
        assert!((s_h2 - 1.0).abs() < 1e-3);
        // Second-order convergence to the continuum value sigma^2 = 1.
        let ratio = (s_h - 1.0) / (s_h2 - 1.0);
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
        let extrapolated = s_h2 + (s_h2 - s_h) / 3.0;
        assert!((extrapolated - 1.0).abs() <= 0.05 * (s_h2 - 1.0).abs());
    }

    #[test]
    fn mixed_sign_candidate_is_a_verdict() {
        // Positive off-diagonal couplings make the smallest eigenvector
        // alternate in sign.
        let op = OperatorMatrix::from_tridiag(vec![0.0, 0.0, 0.0], vec![1.0, 1.0]).unwrap();
        match principal_eigenpair(&op, None, 1e-12) {
            Err(Error::HypothesisViolated(msg)) => {
                assert!(msg.contains("sign"), "message: {msg}")
            }
            other => panic!("expected hypothesis violation, got {other:?}"),
        }
    }

    #[test]
    fn rayleigh_quotient_dominates_principal_eigenvalue() {
        let g = build_radial_grid(2, 20.0, 201).unwrap();
        let lap = assemble_dirichlet_laplacian(&g).unwrap();
        let s = chen_li_exponential(&g, 1.0).unwrap();
        let lin = assemble_linearized(&lap, &s).unwrap();
        let e = principal_eigenpair(&lin, None, 1e-12).unwrap();
        for k in 1..8 {
            let trial: Vec<f64> = g
                .interior_nodes()
                .iter()
                .enumerate()
                .map(|(i, &r)| (1.0 + r).powf(-(k as f64) / 3.0) * (1.0 + 0.1 * (i % 5) as f64))
                .collect();
            let r = lin.rayleigh_nodal(&trial).unwrap();
            assert!(
                e.lambda1 <= r + 1e-9 * (1.0 + r.abs()),
                "k = {k}: lambda1 = {} vs R = {r}",
                e.lambda1
            );
        }
    }

    #[test]
    fn energy_witness_forces_instability() {
        let g = build_radial_grid(2, 40.0, 801).unwrap();
        let s = chen_li_exponential(&g, 1.0).unwrap();
        let xi: Vec<f64> = g.nodes().iter().map(|&r| (4.0 + r * r).powi(-2)).collect();
        let e_val = energy_functional_exponential(&s, &xi).unwrap();
        assert!(
            (e_val + PI / 320.0).abs() < 0.05 * PI / 320.0,
            "E = {e_val} vs {}",
            -PI / 320.0
        );
        let lap = assemble_dirichlet_laplacian(&g).unwrap();
        let lin = assemble_linearized(&lap, &s).unwrap();
        let pair = principal_eigenpair(&lin, None, 1e-11).unwrap();
        assert!(pair.sigma_sq > 0.0);
        // The discrete Rayleigh quotient of the same trial bounds lambda_1.
        let trial: Vec<f64> = g
            .interior_nodes()
            .iter()
            .map(|&r| (4.0 + r * r).powi(-2))
            .collect();
        assert!(pair.lambda1 <= lin.rayleigh_nodal(&trial).unwrap());
    }

    #[test]
    fn energy_functional_preconditions() {
        let g = build_interval_grid(0.0, 1.0, 11).unwrap();
        let s = SteadyState::zero(&g, Nonlinearity::quadratic()).unwrap();
        assert!(energy_functional_exponential(&s, &vec![0.0; 11]).is_err());
    }

    #[test]
    fn dichotomy_values() {
        assert!(gnw_condition(3, 5.0).unwrap());
        assert!(!gnw_condition(20, 1e6).unwrap());
        assert!(gnw_condition(11, 5.0).unwrap());
        assert!(!gnw_condition(11, 6.95).unwrap());
        assert_eq!(pc_threshold(5).unwrap(), f64::INFINITY);
        assert_eq!(pc_threshold(10).unwrap(), f64::INFINITY);
        // Independently computed: (37 + 8 sqrt(10)) / 9.
        assert!((pc_threshold(11).unwrap() - 6.922_024_586_816_337).abs() < 1e-12);
        // n = 17 gives the rational value 189/105 = 1.8 exactly.
        assert!((pc_threshold(17).unwrap() - 1.8).abs() < 1e-14);
        assert!(gnw_condition(2, 5.0).is_err());
        assert!(gnw_condition(5, 1.2).is_err()); // below critical
        assert!(pc_threshold(2).is_err());
    }

    #[test]
    fn dichotomy_sweep_matches_pc() {
        for n in 11..=25 {
            let pc = pc_threshold(n).unwrap();
            let critical = (n as f64 + 2.0) / (n as f64 - 2.0);
            for k in 0..60 {
                let p = critical + (4.0 * pc - critical) * (k as f64 + 0.5) / 60.0;
                if (p - pc).abs() < 1e-9 {
                    continue;
                }
                assert_eq!(
                    gnw_condition(n, p).unwrap(),
                    p < pc,
                    "n = {n}, p = {p}, pc = {pc}"
                );
            }
        }
    }
}
