//! Envelope soundness at the oracle level.
//!
//! Every growth lemma claims: any solution of its differential inequality
//! whose coefficients and initial data satisfy the lemma's hypotheses
//! dominates a closed-form envelope. The equality case is the extremal
//! solution, so integrating it brute-force and comparing sample by sample
//! exercises the lemma where it is tightest. Each suite below draws at
//! least a hundred pseudo-random coefficient profiles from the hypothesis
//! class of one lemma (constants, algebraic decay, sign-changing cosine
//! modulation), seeds are fixed, and the accepted relative slack is 1e-6.

use instab_core::{
    blowup_time_superlinear, envelope_bounded_inertia, envelope_integrable_ratio,
    envelope_positive_damping, envelope_variable_inertia, hyperbolic_threshold,
    lower_curve_superlinear, oracle_integrate, verify_envelope, verify_envelope_until,
    CoefficientProfile, Declarations, EquationKind, GrowthRhs, OdeWitness, WitnessStatus,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CASES: usize = 110;
const REL_SLACK: f64 = 1e-6;
const ORACLE_TOL: f64 = 1e-10;

/// Y' must stay strictly positive on hyperbolic equality runs started with
/// Y(0), Y'(0) > 0; Y itself then stays above Y(0).
fn assert_monotone_growth(w: &OdeWitness, y0: f64, tag: &str) {
    for (i, (&t, &yp)) in w.times.iter().zip(&w.yprime).enumerate() {
        assert!(yp > 0.0, "{tag}: Y'({t}) = {yp} at sample {i}");
    }
    for (i, &y) in w.y.iter().enumerate().skip(1) {
        assert!(y > y0, "{tag}: Y = {y} <= Y(0) = {y0} at sample {i}");
    }
}

fn assert_dominates(
    w: &OdeWitness,
    env: &instab_core::EnvelopeBound,
    tag: &str,
) {
    let check = verify_envelope(w, env, REL_SLACK);
    assert!(
        check.pass,
        "{tag}: envelope violated, min normalized margin {} over {} samples",
        check.min_margin, check.checked
    );
}

/// Sign-changing damping with algebraic decay: b_amp cos(om t) (1+t)^-al,
/// |b| <= |b_amp| everywhere.
fn modulated_b(b_amp: f64, om: f64, al: f64) -> impl Fn(f64) -> f64 + Send + Sync {
    move |t: f64| b_amp * (om * t).cos() * (1.0 + t).powf(-al)
}

#[test]
fn variable_inertia_family() {
    let seed = 0x5eed_2a01u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..CASES {
        let tag = format!("variable inertia case {case} (seed {seed:#x})");
        let a0 = rng.gen_range(0.4..2.0);
        // Nondecreasing inertia: algebraic growth plus a linear ramp,
        // degenerating to a constant when both exponents vanish.
        let r = if case % 4 == 0 { 0.0 } else { rng.gen_range(0.0..0.95) };
        let g1 = if case % 3 == 0 { 0.0 } else { rng.gen_range(0.0..1.5) };
        let b_amp = rng.gen_range(-2.0..2.0);
        let om = rng.gen_range(0.0..4.0);
        let al = if case % 2 == 0 { 0.0 } else { rng.gen_range(0.0..2.0) };
        let prof = CoefficientProfile::new(
            tag.clone(),
            move |t: f64| a0 * (1.0 + t).powf(r) + g1 * t,
            modulated_b(b_amp, om, al),
            Declarations {
                a0,
                a_monotone: true,
                b_sup: Some(b_amp.abs()),
                ..Declarations::default()
            },
        )
        .unwrap();
        let c = rng.gen_range(0.3..2.5);
        let y0 = rng.gen_range(0.4..2.0);
        let slope = hyperbolic_threshold(c, &prof, y0, 0.0).unwrap().slope;
        let mult = if case % 10 == 0 { 1.0 } else { rng.gen_range(1.0..3.0) };
        let yp0 = slope * y0 * mult;

        let env = envelope_variable_inertia(c, &prof, y0, yp0).unwrap();
        let w = oracle_integrate(
            EquationKind::Hyperbolic,
            GrowthRhs::Linear { c },
            &prof,
            y0,
            yp0,
            5.0,
            ORACLE_TOL,
        )
        .unwrap();
        assert_monotone_growth(&w, y0, &tag);
        assert_dominates(&w, &env, &tag);
    }
}

#[test]
fn bounded_inertia_family() {
    let seed = 0x5eed_2a02u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..CASES {
        let tag = format!("bounded inertia case {case} (seed {seed:#x})");
        let base = rng.gen_range(0.6..2.0);
        let s_amp = if case % 3 == 0 { 0.0 } else { rng.gen_range(0.0..0.45) * base };
        let d_amp = if case % 4 == 0 { 0.0 } else { rng.gen_range(0.0..0.8) };
        let om_a = rng.gen_range(0.0..3.0);
        let a0 = base - s_amp;
        let a1 = base + s_amp + d_amp;
        let b_amp = rng.gen_range(-2.0..2.0);
        let om = rng.gen_range(0.0..4.0);
        let al = if case % 2 == 0 { 0.0 } else { rng.gen_range(0.0..2.0) };
        let prof = CoefficientProfile::new(
            tag.clone(),
            move |t: f64| base + s_amp * (om_a * t).sin() + d_amp / (1.0 + t),
            modulated_b(b_amp, om, al),
            Declarations {
                a0,
                a1: Some(a1),
                b_sup: Some(b_amp.abs()),
                ..Declarations::default()
            },
        )
        .unwrap();
        let c = rng.gen_range(0.3..2.5);
        let y0 = rng.gen_range(0.4..2.0);
        let yp0 = rng.gen_range(0.05..2.0);

        let env = envelope_bounded_inertia(c, &prof, y0, yp0).unwrap();
        let w = oracle_integrate(
            EquationKind::Hyperbolic,
            GrowthRhs::Linear { c },
            &prof,
            y0,
            yp0,
            5.0,
            ORACLE_TOL,
        )
        .unwrap();
        assert_monotone_growth(&w, y0, &tag);
        assert_dominates(&w, &env, &tag);

        // Monotone dependence: a larger declared sup|b| can only slow the
        // certified rate lambda_+.
        let mut wider = prof.decl.clone();
        wider.b_sup = Some(b_amp.abs() * 2.0 + 0.5);
        let prof_wider = CoefficientProfile::new(
            "wider b declaration",
            move |t: f64| base + s_amp * (om_a * t).sin() + d_amp / (1.0 + t),
            modulated_b(b_amp, om, al),
            wider,
        )
        .unwrap();
        let env_wider = envelope_bounded_inertia(c, &prof_wider, y0, yp0).unwrap();
        assert!(
            env_wider.params()["lambda_plus"] <= env.params()["lambda_plus"] + 1e-15,
            "{tag}: lambda_+ grew under a larger sup|b|"
        );
    }
}

#[test]
fn integrable_ratio_family() {
    let seed = 0x5eed_2a03u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..CASES {
        let tag = format!("integrable ratio case {case} (seed {seed:#x})");
        let base = rng.gen_range(0.5..2.0);
        let s_amp = if case % 3 == 0 { 0.0 } else { rng.gen_range(0.0..0.45) * base };
        let om_a = rng.gen_range(0.0..3.0);
        let a0 = base - s_amp;
        let a1 = base + s_amp;
        let b_amp: f64 = rng.gen_range(-1.5..1.5);
        let om = rng.gen_range(0.0..4.0);
        let al = rng.gen_range(1.2..2.5);
        // |b/a| <= |b_amp| (1+t)^-al / a0 integrates to the closed bound.
        let l1 = b_amp.abs() / (a0 * (al - 1.0));
        let prof = CoefficientProfile::new(
            tag.clone(),
            move |t: f64| base + s_amp * (om_a * t).sin(),
            modulated_b(b_amp, om, al),
            Declarations {
                a0,
                a1: Some(a1),
                b_sup: Some(b_amp.abs()),
                b_over_a_l1: Some(l1),
                ..Declarations::default()
            },
        )
        .unwrap();
        let c = rng.gen_range(0.3..2.5);
        let y0 = rng.gen_range(0.4..2.0);
        let yp0 = if case % 7 == 0 { 0.0 } else { rng.gen_range(0.0..1.5) };

        let env = envelope_integrable_ratio(c, &prof, y0, yp0).unwrap();
        let w = oracle_integrate(
            EquationKind::Hyperbolic,
            GrowthRhs::Linear { c },
            &prof,
            y0,
            yp0,
            5.0,
            ORACLE_TOL,
        )
        .unwrap();
        assert_dominates(&w, &env, &tag);

        // A larger L1 budget can only damp the certified rate.
        let mut wider = prof.decl.clone();
        wider.b_over_a_l1 = Some(l1 + 1.0);
        let prof_wider = CoefficientProfile::new(
            "wider l1 declaration",
            move |t: f64| base + s_amp * (om_a * t).sin(),
            modulated_b(b_amp, om, al),
            wider,
        )
        .unwrap();
        let env_wider = envelope_integrable_ratio(c, &prof_wider, y0, yp0).unwrap();
        assert!(
            env_wider.params()["rate"] <= env.params()["rate"] + 1e-15,
            "{tag}: rate grew under a larger ||b/a||_1"
        );
    }
}

#[test]
fn positive_damping_family() {
    let seed = 0x5eed_2a04u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..CASES {
        let tag = format!("positive damping case {case} (seed {seed:#x})");
        let base = rng.gen_range(0.3..2.0);
        let amp = if case % 3 == 0 { 0.0 } else { rng.gen_range(0.0..0.9) * base };
        let om = rng.gen_range(0.0..4.0);
        let d = if case % 4 == 0 { 0.0 } else { rng.gen_range(0.0..1.0) };
        let al = rng.gen_range(0.5..2.0);
        let b_sup = base + amp + d;
        let prof = CoefficientProfile::new(
            tag.clone(),
            |_| 1.0,
            move |t: f64| base + amp * (om * t).sin() + d * (1.0 + t).powf(-al),
            Declarations {
                b_sup: Some(b_sup),
                b_positive: true,
                ..Declarations::default()
            },
        )
        .unwrap();
        let c = rng.gen_range(0.3..2.0);
        let y0 = rng.gen_range(0.4..2.0);

        let env = envelope_positive_damping(c, &prof, y0).unwrap();
        let w = oracle_integrate(
            EquationKind::Parabolic,
            GrowthRhs::Linear { c },
            &prof,
            y0,
            0.0,
            4.0,
            ORACLE_TOL,
        )
        .unwrap();
        // Positive damping keeps Y strictly above its initial value.
        for (i, (&t, &y)) in w.times.iter().zip(&w.y).enumerate().skip(1) {
            assert!(y > y0, "{tag}: Y({t}) = {y} <= Y(0) at sample {i}");
        }
        assert_dominates(&w, &env, &tag);

        // rate = c / sup b is monotone in the declaration.
        let mut wider = prof.decl.clone();
        wider.b_sup = Some(b_sup * 3.0);
        let prof_wider = CoefficientProfile::new(
            "wider b declaration",
            |_| 1.0,
            move |t: f64| base + amp * (om * t).sin() + d * (1.0 + t).powf(-al),
            wider,
        )
        .unwrap();
        let env_wider = envelope_positive_damping(c, &prof_wider, y0).unwrap();
        assert!(
            env_wider.params()["rate"] <= env.params()["rate"] + 1e-15,
            "{tag}: rate grew under a larger sup b"
        );
    }
}

#[test]
fn superlinear_blowup_family() {
    let seed = 0x5eed_2a05u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut convergence_checked = 0usize;
    for case in 0..CASES {
        let tag = format!("superlinear case {case} (seed {seed:#x})");
        let base = rng.gen_range(0.3..2.0);
        let constant_b = case % 5 == 0;
        let (amp, d) = if constant_b {
            (0.0, 0.0)
        } else {
            (rng.gen_range(0.0..0.9) * base, rng.gen_range(0.0..1.0))
        };
        let om = rng.gen_range(0.0..4.0);
        let al = rng.gen_range(0.5..2.0);
        let b_sup = base + amp + d;
        let prof = CoefficientProfile::new(
            tag.clone(),
            |_| 1.0,
            move |t: f64| base + amp * (om * t).sin() + d * (1.0 + t).powf(-al),
            Declarations {
                b_sup: Some(b_sup),
                b_positive: true,
                ..Declarations::default()
            },
        )
        .unwrap();
        let c = rng.gen_range(0.4..2.0);
        let p = rng.gen_range(1.6..3.2);
        let y0 = rng.gen_range(0.5..2.0);

        let t_inf = blowup_time_superlinear(c, p, &prof, y0).unwrap();
        let curve = lower_curve_superlinear(c, p, &prof, y0).unwrap();
        assert!((curve.valid_until - t_inf).abs() <= 1e-15 * t_inf);

        let w = oracle_integrate(
            EquationKind::Parabolic,
            GrowthRhs::Power { c, p, r_decay: 0.0 },
            &prof,
            y0,
            0.0,
            2.0 * t_inf,
            ORACLE_TOL,
        )
        .unwrap();
        let time = match w.status {
            WitnessStatus::Blowup { time, bracket } => {
                assert!(bracket.0 < bracket.1, "{tag}: degenerate bracket");
                time
            }
            WitnessStatus::Completed => {
                panic!("{tag}: no blow-up before 2 T_inf = {}", 2.0 * t_inf)
            }
        };
        assert!(
            time <= t_inf * (1.0 + 1e-3),
            "{tag}: blow-up at {time} after the certified bound {t_inf}"
        );
        if constant_b {
            // b identically sup b makes the certified curve the exact
            // solution, so the bound is attained.
            assert!(
                (time - t_inf).abs() <= 1e-3 * t_inf,
                "{tag}: constant-b blow-up {time} vs T_inf {t_inf}"
            );
        }
        // Stop short of T_inf: the equality case has zero margin there and
        // the sliver within ~1e-3 T_inf of the singularity amplifies the
        // integrator's blow-up time uncertainty past any fixed slack.
        let check = verify_envelope_until(&w, &curve, REL_SLACK, 0.999 * t_inf);
        assert!(
            check.pass,
            "{tag}: envelope violated, min normalized margin {} over {} samples",
            check.min_margin, check.checked
        );

        // Oracle convergence: halving the tolerance barely moves the
        // reported blow-up time.
        if convergence_checked < 8 {
            convergence_checked += 1;
            let w2 = oracle_integrate(
                EquationKind::Parabolic,
                GrowthRhs::Power { c, p, r_decay: 0.0 },
                &prof,
                y0,
                0.0,
                2.0 * t_inf,
                ORACLE_TOL * 0.5,
            )
            .unwrap();
            if let WitnessStatus::Blowup { time: t2, .. } = w2.status {
                assert!(
                    (t2 - time).abs() <= 1e-4 * time.abs().max(1e-30),
                    "{tag}: blow-up time moved from {time} to {t2} after halving the tolerance"
                );
            } else {
                panic!("{tag}: refined run lost the blow-up");
            }
        }
    }
}

#[test]
fn closed_form_blowup_times() {
    // b = 1, p = 2, c = 1, Y0 = 1: the equality case is 1/(1-t).
    let unit = CoefficientProfile::new(
        "unit damping",
        |_| 1.0,
        |_| 1.0,
        Declarations {
            b_sup: Some(1.0),
            b_positive: true,
            ..Declarations::default()
        },
    )
    .unwrap();
    assert_eq!(blowup_time_superlinear(1.0, 2.0, &unit, 1.0).unwrap(), 1.0);
    assert!(
        (blowup_time_superlinear(1.0, 3.0, &unit, 2.0).unwrap() - 0.125).abs() < 1e-15
    );

    let w = oracle_integrate(
        EquationKind::Parabolic,
        GrowthRhs::Power { c: 1.0, p: 2.0, r_decay: 0.0 },
        &unit,
        1.0,
        0.0,
        5.0,
        ORACLE_TOL,
    )
    .unwrap();
    match w.status {
        WitnessStatus::Blowup { time, .. } => {
            assert!((time - 1.0).abs() < 1e-3, "blow-up at {time}, expected 1.000");
        }
        other => panic!("expected blow-up, got {other:?}"),
    }
}
