use std::fs;
use std::path::Path;

use tempfile::TempDir;

use nof1_core::config::{RunConfig, RunManifest};
use nof1_core::report::{FAILURE_SIDECAR, QUANTILES_FILE, STEPS_FILE, STEPS_HEADER, SUMMARY_JSON, SUMMARY_TABLE};
use nof1_core::{run_all, ReportError, SamplerConfig};

fn small(out: &Path, scenario: &str, design: &str) -> RunConfig {
    RunConfig {
        scenario: scenario.into(),
        design: design.into(),
        patients: 3,
        seed: 11,
        out: out.to_path_buf(),
        sampler: SamplerConfig {
            warmup_draws: 200,
            kept_draws: 200,
            ..SamplerConfig::default()
        },
        ..RunConfig::default()
    }
}

fn manifest(cfg: &RunConfig) -> RunManifest {
    RunManifest::from_config(cfg, None).unwrap()
}

#[test]
fn writes_every_output_with_expected_row_counts() {
    let dir = TempDir::new().unwrap();
    let outcome = run_all(&manifest(&small(dir.path(), "II", "all"))).unwrap();
    assert_eq!(outcome.summaries.len(), 2);
    assert!(outcome.cells.iter().all(|c| c.trials.len() == 3));

    let steps = fs::read_to_string(dir.path().join(STEPS_FILE)).unwrap();
    let mut lines = steps.lines();
    assert_eq!(lines.next().unwrap(), STEPS_HEADER.join(","));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == STEPS_HEADER.len()));
    let count = |d: &str| rows.iter().filter(|r| r[2] == d).count();
    assert_eq!(count("AB"), 3 * 35);
    assert_eq!(count("BA"), 3 * 21);

    let quantiles = fs::read_to_string(dir.path().join(QUANTILES_FILE)).unwrap();
    assert_eq!(quantiles.lines().count(), 1 + 2 * 14);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(SUMMARY_JSON)).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 2);
    assert!(fs::read_to_string(dir.path().join(SUMMARY_TABLE)).unwrap().contains("| II |"));
    assert!(!dir.path().join(FAILURE_SIDECAR).exists());
}

#[test]
fn rerun_with_same_seed_is_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run_all(&manifest(&small(a.path(), "III,VII", "AB"))).unwrap();
    let mut cfg = small(b.path(), "III,VII", "AB");
    cfg.jobs = 2;
    run_all(&manifest(&cfg)).unwrap();
    for name in [STEPS_FILE, SUMMARY_JSON, SUMMARY_TABLE, QUANTILES_FILE] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn different_seed_changes_the_output() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run_all(&manifest(&small(a.path(), "II", "AB"))).unwrap();
    let mut cfg = small(b.path(), "II", "AB");
    cfg.seed = 12;
    run_all(&manifest(&cfg)).unwrap();
    assert_ne!(
        fs::read(a.path().join(STEPS_FILE)).unwrap(),
        fs::read(b.path().join(STEPS_FILE)).unwrap()
    );
}

#[test]
fn sampler_failures_leave_a_sidecar() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small(dir.path(), "I", "BA");
    cfg.sampler.min_acceptance = 0.99;
    cfg.sampler.max_acceptance = 1.0;
    let err = run_all(&manifest(&cfg)).unwrap_err();
    assert!(matches!(err, ReportError::PatientFailures { failed: 3, .. }), "{err}");
    let sidecar = fs::read_to_string(dir.path().join(FAILURE_SIDECAR)).unwrap();
    assert_eq!(sidecar.lines().count(), 1 + 3);
    assert!(dir.path().join(STEPS_FILE).exists());

    // a clean rerun into the same directory clears the stale sidecar
    run_all(&manifest(&small(dir.path(), "I", "BA"))).unwrap();
    assert!(!dir.path().join(FAILURE_SIDECAR).exists());
}

#[test]
fn invalid_manifest_is_rejected_before_simulating() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small(dir.path(), "II", "AB");
    cfg.patients = 0;
    let result = RunManifest::from_config(&cfg, None).and_then(|m| run_all(&m));
    assert!(matches!(result, Err(ReportError::Config(_))));
    assert!(RunManifest::from_config(&small(dir.path(), "VIII", "AB"), None).is_err());
    assert!(RunManifest::from_config(&small(dir.path(), "II", "AC"), None).is_err());
}
