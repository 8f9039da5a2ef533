//! Kernel benchmarks: eigensolve, time stepping, the scalar blow-up
//! oracle, and envelope evaluation. Sample sizes are kept small; these
//! benches exist to catch order-of-magnitude regressions in the hot
//! loops, not to resolve percent-level noise.

use std::time::Duration;

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use instab_bench::{canonical_profile, shifted_operator, wave_scenario};
use instab_core::{
    envelope_variable_inertia, oracle_integrate, principal_eigenpair, run_scenario, EquationKind,
    GrowthRhs,
};

/// Sturm bisection plus inverse iteration on the 2001-node shifted
/// Laplacian.
fn bench_eigensolver(c: &mut Criterion) {
    let (_, op) = shifted_operator(2001);
    c.bench_function("principal_eigenpair_2001", |b| {
        b.iter(|| principal_eigenpair(black_box(&op), None, 1e-10).unwrap())
    });
}

/// One time unit of the hyperbolic scenario at 201 nodes, CFL-limited RK4
/// stepping included.
fn bench_hyperbolic_run(c: &mut Criterion) {
    let (scenario, eig) = wave_scenario(201, 1.0);
    c.bench_function("hyperbolic_run_201_t1", |b| {
        b.iter(|| run_scenario(black_box(&scenario), black_box(&eig)).unwrap())
    });
}

/// Adaptive blow-up integration of the superlinear comparison ODE up to
/// the escalated singularity.
fn bench_oracle_blowup(c: &mut Criterion) {
    let prof = canonical_profile();
    c.bench_function("oracle_power_blowup", |b| {
        b.iter(|| {
            oracle_integrate(
                EquationKind::Hyperbolic,
                GrowthRhs::Power {
                    c: 1.0,
                    p: 2.0,
                    r_decay: 0.0,
                },
                black_box(&prof),
                1.0,
                1.0,
                50.0,
                1e-10,
            )
            .unwrap()
        })
    });
}

/// Variable-inertia envelope evaluation, which integrates the audited
/// a(t) handle internally.
fn bench_envelope_eval(c: &mut Criterion) {
    let prof = canonical_profile();
    let env = envelope_variable_inertia(1.0, &prof, 1e-3, 1e-3).unwrap();
    let times: Vec<f64> = (0..1000).map(|k| k as f64 * 0.01).collect();
    c.bench_function("variable_inertia_eval_1000", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for &t in &times {
                acc += env.eval(black_box(t));
            }
            acc
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default()
        .sample_size(10)
        .warm_up_time(Duration::from_millis(300))
        .measurement_time(Duration::from_secs(2));
    targets = bench_eigensolver, bench_hyperbolic_run, bench_oracle_blowup, bench_envelope_eval
}
criterion_main!(benches);
