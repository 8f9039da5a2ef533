//! End-to-end library runs: artifact sets, determinism, verification
//! replay, and the parabolicity verdict.

mod common;

use std::path::Path;

use instab_cli::config::parse_config;
use instab_cli::runner::{run, verify, CliError};
use instab_core::io::{self, RunMetadata, DICHOTOMY_HEADER, TIMESERIES_HEADER};

fn run_template(template: &str, dir: &Path) -> instab_cli::runner::RunSummary {
    let cfg = parse_config(&common::with_out(template, dir)).unwrap();
    run(&cfg, dir.parent().unwrap(), dir, 1.0).unwrap()
}

#[test]
fn canonical_wave_run_certifies_every_clause() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("wave");
    let summary = run_template(common::WAVE_TEMPLATE, &dir);

    assert_eq!(summary.status, "blowup");
    let t_star = summary.blowup_time.expect("wave scenario must blow up");
    assert!(t_star > 1.0 && t_star < 20.0, "odd blow-up time {t_star}");
    assert_eq!(summary.verdicts.len(), 5);
    let ids: Vec<&str> = summary
        .verdicts
        .iter()
        .map(|v| v.theorem_clause.as_str())
        .collect();
    assert_eq!(ids, ["T1a", "T1b", "T1c", "T1d", "T1blow"]);
    assert!(summary.all_pass, "verdicts: {:?}", summary.verdicts);

    for name in [
        "config.toml",
        "steady.csv",
        "eigenpair.csv",
        "timeseries.csv",
        "envelopes.csv",
        "metadata.json",
        "verdicts.json",
    ] {
        assert!(dir.join(name).exists(), "missing artifact {name}");
    }
    let ts = io::read_text(dir.join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().next().unwrap(), TIMESERIES_HEADER);
    let env = io::read_text(dir.join("envelopes.csv")).unwrap();
    assert_eq!(
        env.lines().next().unwrap(),
        "t,variable_inertia,bounded_inertia,integrable_ratio"
    );
    let meta = RunMetadata::from_json(&io::read_text(dir.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta.status, "blowup");
    assert_eq!(meta.scenario, "wave");
    assert_eq!(meta.nodes, 401);
    assert!((meta.sigma_sq - 1.0).abs() < 1e-3);
    assert_eq!(meta.fingerprint.len(), 16);
    assert!(meta.delta > 0.0, "delta_factor did not resolve: {}", meta.delta);

    // The T1a verdict carries the audit margins and an empirical rate near
    // sigma = 1.
    let t1a = &summary.verdicts[0];
    assert!(t1a.margins.contains_key("min_wprime"));
    assert!(t1a.margins.contains_key("l2_floor_margin"));
    assert!(t1a.margins.contains_key("kaplan_inequality"));
    let mu = t1a.rates["fitted_rate"];
    assert!(mu > 0.5 && mu < 1.5, "empirical rate {mu}");
    // Envelope clauses carry their parameters.
    assert!(!summary.verdicts[1].envelope_params.is_empty());
    assert!(summary.verdicts[2].envelope_params.contains_key("lambda_plus"));
}

#[test]
fn canonical_heat_run_certifies_every_clause() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("heat");
    let summary = run_template(common::HEAT_TEMPLATE, &dir);
    assert_eq!(summary.status, "blowup");
    assert!(summary.all_pass, "verdicts: {:?}", summary.verdicts);
    let ids: Vec<&str> = summary
        .verdicts
        .iter()
        .map(|v| v.theorem_clause.as_str())
        .collect();
    assert_eq!(ids, ["T2a", "T2b", "T2c"]);
    let t2a = &summary.verdicts[0];
    assert!(t2a.margins["w_floor_margin"] > 0.0);
    assert!(t2a.margins["sup_floor_margin"] >= -1e-9);
}

#[test]
fn identical_configs_produce_identical_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    // Same leaf directory name on both sides so the scenario labels agree.
    let dir_a = tmp.path().join("a").join("wave");
    let dir_b = tmp.path().join("b").join("wave");
    run_template(common::WAVE_TEMPLATE, &dir_a);
    run_template(common::WAVE_TEMPLATE, &dir_b);
    for name in [
        "steady.csv",
        "eigenpair.csv",
        "timeseries.csv",
        "envelopes.csv",
        "metadata.json",
        "verdicts.json",
    ] {
        let a = io::read_text(dir_a.join(name)).unwrap();
        let b = io::read_text(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} is not reproducible");
    }
}

#[test]
fn verify_replays_the_recorded_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("wave");
    run_template(common::WAVE_TEMPLATE, &dir);

    let report = verify(&dir, 1.0).unwrap();
    assert!(report.matched, "mismatches: {:?}", report.mismatches);
    assert!(report.recorded_pass);
    assert_eq!(report.verdicts.len(), 5);

    // Tampering with a recorded verdict is detected.
    let verdicts_path = dir.join("verdicts.json");
    let text = io::read_text(&verdicts_path).unwrap();
    let tampered = text.replacen("\"pass\": true", "\"pass\": false", 1);
    assert_ne!(text, tampered);
    io::write_text(&verdicts_path, &tampered).unwrap();
    let report = verify(&dir, 1.0).unwrap();
    assert!(!report.matched);
    assert!(report
        .mismatches
        .iter()
        .any(|m| m.contains("pass differs")), "mismatches: {:?}", report.mismatches);
}

#[test]
fn flipped_damping_fails_the_parabolicity_audit() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("flipped");
    let cfg = parse_config(&common::with_out(common::FLIPPED_TEMPLATE, &dir)).unwrap();
    let err = run(&cfg, tmp.path(), &dir, 1.0).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    match &err {
        CliError::Core(e) => {
            let msg = e.to_string();
            assert!(
                msg.contains("parabolicity violated"),
                "unexpected message: {msg}"
            );
        }
        other => panic!("expected a core hypothesis violation, got {other:?}"),
    }
    // The failed audit leaves no artifacts behind.
    assert!(!dir.join("verdicts.json").exists());
}

#[test]
fn dichotomy_table_matches_the_threshold() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("dichotomy.csv");
    let rows = instab_cli::runner::dichotomy(11, 13, 7, &path).unwrap();
    assert_eq!(rows, 21);
    let text = io::read_text(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), DICHOTOMY_HEADER);
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        let p: f64 = fields[1].parse().unwrap();
        let p_c: f64 = fields[3].parse().unwrap();
        let unstable = fields[2] == "true";
        assert_eq!(unstable, p < p_c, "row {line} contradicts the threshold");
        assert_eq!(fields[4], if unstable { "unstable" } else { "stable" });
    }
}
