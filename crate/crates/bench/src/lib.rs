//! Shared fixtures for the kernel benchmarks: the canonical unstable wave
//! setup (L = -Delta - 2 on (0, pi), zero steady state of the quadratic
//! nonlinearity, sign-changing damping 0.5 cos(2t) (1+t)^-2) at an
//! arbitrary resolution, so every bench exercises the same operator family
//! the integration tests certify.

use instab_core::{
    add_potential, assemble_dirichlet_laplacian, assemble_linearized, principal_eigenpair,
    BlowupThresholds, CoefficientProfile, Declarations, EigenPair, EquationKind, Grid,
    Nonlinearity, OperatorMatrix, PotentialField, Scenario, SteadyState, DEFAULT_CFL,
};

/// Sign-changing damping profile with every norm declared.
pub fn canonical_profile() -> CoefficientProfile {
    CoefficientProfile::new(
        "a = 1; b = 0.5 cos(2t) (1+t)^-2",
        |_| 1.0,
        |t: f64| 0.5 * (2.0 * t).cos() / ((1.0 + t) * (1.0 + t)),
        Declarations {
            a0: 1.0,
            a1: Some(1.0),
            a_monotone: true,
            b_sup: Some(0.5),
            b_l1: Some(0.5),
            b_over_a_l1: Some(0.5),
            b_positive: false,
        },
    )
    .expect("canonical profile is well formed")
}

/// L = -Delta - 2 on (0, pi) with `nodes` grid nodes.
pub fn shifted_operator(nodes: usize) -> (Grid, OperatorMatrix) {
    let grid = instab_core::build_interval_grid(0.0, std::f64::consts::PI, nodes)
        .expect("grid parameters are valid");
    let lap = assemble_dirichlet_laplacian(&grid).expect("assembly succeeds");
    let pot = PotentialField::constant(&grid, -2.0).expect("constant potential");
    let op = add_potential(&lap, &pot).expect("dimensions agree");
    (grid, op)
}

/// Canonical hyperbolic scenario and its eigenpair, ready for
/// `run_scenario`.
pub fn wave_scenario(nodes: usize, t_max: f64) -> (Scenario, EigenPair) {
    let (grid, op) = shifted_operator(nodes);
    let steady = SteadyState::zero(&grid, Nonlinearity::quadratic()).expect("zero steady state");
    let linearized = assemble_linearized(&op, &steady).expect("linearization");
    let eig = principal_eigenpair(&linearized, None, 1e-10).expect("eigenpair converges");
    let prof = canonical_profile();
    let eps = 1e-3;
    let delta = 1.05
        * instab_core::hyperbolic_threshold(eig.sigma_sq, &prof, eps, 0.0)
            .expect("threshold is defined")
            .required_rate;
    let scenario = Scenario {
        label: "bench-wave".to_string(),
        operator: op,
        steady,
        profile: prof,
        kind: EquationKind::Hyperbolic,
        eps,
        delta,
        concave: false,
        t_max,
        cadence: t_max / 10.0,
        thresholds: BlowupThresholds::default(),
        cfl: DEFAULT_CFL,
        require_threshold: true,
    };
    (scenario, eig)
}
