//! Sweep driver: per-run isolation, summary shape, and worker-count
//! independence of the artifacts.

mod common;

use instab_cli::runner::batch;
use instab_core::io;

#[test]
fn damping_decay_sweep_certifies_instability_at_every_alpha() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("sweep");
    let text = common::with_out(common::SWEEP_TEMPLATE, &root);
    let outcome = batch(&text, tmp.path(), &root, 3, 1.0).unwrap();

    assert_eq!(outcome.entries.len(), 9);
    assert!(outcome.all_pass, "entries: {:?}", outcome.entries);
    for (k, entry) in outcome.entries.iter().enumerate() {
        assert_eq!(entry.index, k);
        assert_eq!(entry.clauses_total, 3);
        assert_eq!(entry.clauses_passed, 3);
        assert_eq!(entry.status, "blowup");
        let dir = root.join(format!("run_{k:03}"));
        for name in ["config.toml", "timeseries.csv", "verdicts.json"] {
            assert!(dir.join(name).exists(), "run {k} missing {name}");
        }
        // The per-run config records the substituted value.
        let cfg = io::read_text(dir.join("config.toml")).unwrap();
        let alpha = format!("alpha = {}", entry.value);
        assert!(cfg.contains(&alpha), "run {k} config lacks {alpha:?}");
    }

    let summary = io::read_text(&outcome.summary_path).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "index,value,status,blowup_time,clauses_passed,clauses_total,all_pass"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    for (k, row) in rows.iter().enumerate() {
        assert!(
            row.starts_with(&format!("{k},0.{},blowup,", k + 1)),
            "row {k}: {row}"
        );
        assert!(row.ends_with(",3,3,true"), "row {k}: {row}");
    }
}

#[test]
fn worker_count_does_not_change_the_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    // Trim the sweep to three points to keep the double run cheap.
    let template = common::SWEEP_TEMPLATE.replace(
        "values = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]",
        "values = [0.25, 0.5, 0.75]",
    );
    let serial_root = tmp.path().join("serial");
    let parallel_root = tmp.path().join("parallel");
    batch(&common::with_out(&template, &serial_root), tmp.path(), &serial_root, 1, 1.0).unwrap();
    batch(
        &common::with_out(&template, &parallel_root),
        tmp.path(),
        &parallel_root,
        4,
        1.0,
    )
    .unwrap();
    for k in 0..3 {
        for name in ["timeseries.csv", "verdicts.json", "metadata.json"] {
            let a = io::read_text(serial_root.join(format!("run_{k:03}")).join(name)).unwrap();
            let b = io::read_text(parallel_root.join(format!("run_{k:03}")).join(name)).unwrap();
            assert_eq!(a, b, "run {k} artifact {name} differs across worker counts");
        }
    }
    let a = io::read_text(serial_root.join("summary.csv")).unwrap();
    let b = io::read_text(parallel_root.join("summary.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn malformed_sweeps_abort_before_any_run() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("sweep");
    // A path into a nonexistent table.
    let bad_path = common::with_out(common::SWEEP_TEMPLATE, &root)
        .replace("path = \"coefficients.b.alpha\"", "path = \"damping.alpha\"");
    assert!(batch(&bad_path, tmp.path(), &root, 2, 1.0).is_err());
    // A value that breaks validation (alpha <= 0) poisons the whole sweep.
    let bad_value = common::with_out(common::SWEEP_TEMPLATE, &root).replace(
        "values = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]",
        "values = [0.1, -1.0]",
    );
    assert!(batch(&bad_value, tmp.path(), &root, 2, 1.0).is_err());
    assert!(!root.join("run_000").exists(), "a run started despite the abort");
    // An unknown sweep key is rejected.
    let bad_key = common::with_out(common::SWEEP_TEMPLATE, &root)
        .replace("path = \"coefficients.b.alpha\"", "path = \"coefficients.b.alpha\"\nshuffle = true");
    assert!(batch(&bad_key, tmp.path(), &root, 2, 1.0).is_err());
}
