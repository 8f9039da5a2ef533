//! Numerical laboratory for the instability of steady states of damped
//! semilinear evolution equations
//!
//! ```text
//!   a(t) u_tt + b(t) u_t + L u = f(x, u)      (hyperbolic)
//!          b(t) u_t + L u = f(x, u)           (parabolic)
//! ```
//!
//! on truncated intervals and balls with Dirichlet conditions, where the
//! damping b may change sign and only integrability or boundedness of the
//! coefficients is assumed. The crate assembles the operators, builds
//! steady states and their principal linearized eigenpairs, integrates
//! perturbed runs, projects them onto the Kaplan functional
//! W(t) = <phi_1, u - v>, and certifies the projected growth against the
//! closed-form lower envelopes of the comparison lemmas.
//!
//! Modules follow the pipeline order: `grid` and `operator` discretize,
//! `nonlinearity`/`steady`/`spectral` prepare the stationary data, `profile`
//! and `envelope`/`oracle` handle the time-coefficient side, `evolve` runs
//! the PDEs, `kaplan` audits the runs, and `io` persists them.

pub mod envelope;
pub mod error;
pub mod evolve;
pub mod grid;
pub mod io;
pub mod kaplan;
pub mod nonlinearity;
pub mod operator;
pub mod oracle;
pub mod profile;
mod rk;
pub mod spectral;
pub mod steady;

pub use envelope::{
    blowup_time_superlinear, envelope_bounded_inertia, envelope_integrable_ratio,
    envelope_positive_damping, envelope_variable_inertia, hyperbolic_threshold,
    lower_curve_superlinear, EnvelopeBound, EnvelopeKind, ThresholdReport,
};
pub use error::{Error, Result};
pub use evolve::{
    build_perturbation, run_scenario, run_with_initial, BlowupThresholds, RunRecord, RunStats,
    RunStatus, Scenario, DEFAULT_CFL,
};
pub use grid::{build_interval_grid, build_radial_grid, Grid, GridKind};
pub use kaplan::{
    check_projected_inequality, compare_to_envelope, fit_rate, project_series, InequalityReport,
    KaplanSeries, SignMode, WindowCheck, MIN_WINDOW_SAMPLES,
};
pub use nonlinearity::{Convexity, LowerBound, Nonlinearity};
pub use operator::{
    add_potential, assemble_dirichlet_laplacian, BoundaryCondition, OperatorMatrix,
    PotentialField,
};
pub use oracle::{
    oracle_integrate, verify_envelope, verify_envelope_until, EnvelopeCheck, GrowthRhs,
    OdeWitness, WitnessStatus, BLOWUP_THRESHOLD, STALL_ESCALATION_FLOOR,
};
pub use profile::{CertifyReport, CoefficientProfile, Declarations, EquationKind};
pub use spectral::{
    assemble_linearized, energy_functional_exponential, gnw_condition, pc_threshold,
    principal_eigenpair, EigenPair,
};
pub use steady::{chen_li_exponential, power_steady_shooting, validate_steady, SteadyState};
