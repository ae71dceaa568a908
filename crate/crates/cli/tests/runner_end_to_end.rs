//! End-to-end tests of the experiment runner library: artifacts, verdicts,
//! determinism, and the no-artifacts-on-bad-config guarantee.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nonlocal_lwr_cli::runner::{run_config_path, RunOptions, VerdictsFile};
use serde_json::{json, Value};

fn write_cfg(dir: &Path, body: &Value) -> PathBuf {
    let path = dir.join("cfg.json");
    fs::write(&path, serde_json::to_string_pretty(body).unwrap()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Every file under `dir`, keyed by relative path, as raw bytes.
fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn convex_kernel_keeps_variation_monotone_and_artifacts_land() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = json!({
        "experiment": "tv_monotonicity",
        "scenario": {"kind": "riemann", "left": 0.8, "right": 0.2},
        "kernel": {"family": "exponential"},
        "epsilons": [0.4, 0.2],
        "grid": {"cells_per_eps": 16},
        "t_end": 0.25,
        "snapshots": {"count": 3},
        "out_dir": out,
        "label": "smoke"
    });
    let path = write_cfg(tmp.path(), &cfg);
    let summary = run_config_path(&path, &RunOptions { quiet: true, ..Default::default() }).unwrap();
    assert!(summary.passed, "convex kernel run should pass: {}", summary.headline);
    assert_eq!(summary.label, "smoke");

    let dir = out.join("tv_monotonicity").join("smoke");
    assert_eq!(summary.dir, dir);
    for rel in [
        "manifest.json",
        "verdicts.json",
        "series/00_eps0.4.csv",
        "series/01_eps0.2.csv",
        "snapshots/00_eps0.4_s00.csv",
        "snapshots/00_eps0.4_s02.csv",
        "snapshots/01_eps0.2_final.csv",
    ] {
        assert!(dir.join(rel).is_file(), "missing artifact {rel}");
    }

    let verdicts: VerdictsFile =
        serde_json::from_str(&fs::read_to_string(dir.join("verdicts.json")).unwrap()).unwrap();
    assert!(verdicts.passed);
    assert_eq!(verdicts.scales.len(), 2);
    assert_eq!(verdicts.scales[0].epsilon, 0.4);

    let manifest = read_json(&dir.join("manifest.json"));
    assert_eq!(manifest["tool"]["name"], "nlwr");
    assert_eq!(manifest["label"], "smoke");
    // The embedded config re-runs without the original file: it must carry
    // the resolved label and the original experiment parameters.
    assert_eq!(manifest["config"]["label"], "smoke");
    assert_eq!(manifest["config"]["experiment"], "tv_monotonicity");
    let runs = manifest["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    assert!(runs[0]["mass_residual"].as_f64().unwrap().abs() < 1e-10);
    assert_eq!(runs[0]["snapshot_times"].as_array().unwrap().len(), 3);

    let series = fs::read_to_string(dir.join("series/00_eps0.4.csv")).unwrap();
    assert!(series.starts_with("t,tv_w,tv_u,neg_part\n"));
    let snap = fs::read_to_string(dir.join("snapshots/00_eps0.4_s00.csv")).unwrap();
    assert!(snap.starts_with("x_center,u,w\n"));
}

#[test]
fn engineered_break_fails_monotonicity_and_upholds_the_claim() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let base = json!({
        "scenario": {"kind": "counterexample", "n_blocks": 1, "eps1": 1.0},
        "kernel": {"family": "uniform"},
        "epsilons": [1.0],
        "grid": {"cells_per_eps": 32},
        "t_end": 0.05,
        "snapshots": {"count": 2},
        "out_dir": out
    });

    // As a counterexample experiment the observed rise upholds the claim.
    let mut cfg = base.clone();
    cfg["experiment"] = "counterexample".into();
    cfg["label"] = "break".into();
    let path = write_cfg(tmp.path(), &cfg);
    let summary = run_config_path(&path, &RunOptions { quiet: true, ..Default::default() }).unwrap();
    assert!(summary.passed, "the break should be observed: {}", summary.headline);

    let dir = out.join("counterexample").join("break");
    let verdicts: VerdictsFile =
        serde_json::from_str(&fs::read_to_string(dir.join("verdicts.json")).unwrap()).unwrap();
    assert!(verdicts.passed);
    match &verdicts.scales[0].detail {
        nonlocal_lwr_cli::runner::ScaleDetail::Monotonicity { report } => {
            assert!(!report.passed, "the embedded check must fail");
            assert!(report.worst_rise > 1e-3, "rise too small: {}", report.worst_rise);
        }
        other => panic!("unexpected detail {other:?}"),
    }
    // The nested-block datum needs dx <= ell/16 = eps/64; the runner must
    // have tightened the configured eps/32 on its own.
    let manifest = read_json(&dir.join("manifest.json"));
    let dx = manifest["runs"][0]["dx"].as_f64().unwrap();
    assert!(dx <= 1.0 / 64.0 + 1e-15, "dx not tightened: {dx}");

    // The same run judged as a plain monotonicity experiment must fail once
    // the tolerance is tight enough to see the early rise.
    let mut cfg = base;
    cfg["experiment"] = "tv_monotonicity".into();
    cfg["tolerance_fraction"] = 1e-4.into();
    cfg["label"] = "judged".into();
    let path = write_cfg(tmp.path(), &cfg);
    let summary = run_config_path(&path, &RunOptions { quiet: true, ..Default::default() }).unwrap();
    assert!(!summary.passed, "uniform-window break must fail the verdict");
}

#[test]
fn rate_study_fits_an_acceptable_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = json!({
        "experiment": "rate_study",
        "scenario": {"kind": "riemann", "left": 0.8, "right": 0.2},
        "epsilons": [0.4, 0.2, 0.1, 0.05],
        "grid": {"cells_per_eps": 8},
        "t_end": 0.5,
        "snapshots": {"count": 2},
        "out_dir": out,
        "label": "rate"
    });
    let path = write_cfg(tmp.path(), &cfg);
    let summary = run_config_path(&path, &RunOptions { quiet: true, ..Default::default() }).unwrap();
    assert!(summary.passed, "rate verdict failed: {}", summary.headline);

    let dir = out.join("rate_study").join("rate");
    let verdicts: VerdictsFile =
        serde_json::from_str(&fs::read_to_string(dir.join("verdicts.json")).unwrap()).unwrap();
    let rate = verdicts.rate.expect("rate studies carry a fit");
    assert!(rate.rate >= 0.45, "rate {}", rate.rate);
    assert!(rate.passed);

    let table = fs::read_to_string(dir.join("series/rate.csv")).unwrap();
    assert!(table.starts_with("epsilon,l1_error\n"));
    assert_eq!(table.lines().count(), 5, "4 scales plus header");
    // Errors shrink with the look-ahead length.
    let errs: Vec<f64> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(errs[0] > errs[3], "errors not decreasing: {errs:?}");
}

#[test]
fn entropy_check_measures_a_stable_constant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = json!({
        "experiment": "entropy_check",
        "scenario": {"kind": "riemann", "left": 0.8, "right": 0.2},
        "epsilons": [0.4, 0.2],
        "t_end": 0.5,
        "snapshots": {"count": 17},
        "out_dir": out,
        "label": "khat"
    });
    let path = write_cfg(tmp.path(), &cfg);
    let summary = run_config_path(&path, &RunOptions { quiet: true, ..Default::default() }).unwrap();
    assert!(summary.passed, "stability verdict failed: {}", summary.headline);

    let dir = out.join("entropy_check").join("khat");
    let verdicts: VerdictsFile =
        serde_json::from_str(&fs::read_to_string(dir.join("verdicts.json")).unwrap()).unwrap();
    let stability = verdicts.stability.expect("entropy checks carry a stability block");
    assert_eq!(stability.k_hats.len(), 2);
    assert!(stability.spread <= 2.0, "spread {}", stability.spread);
    for p in &stability.k_hats {
        assert!(p.k_hat.is_finite() && p.k_hat >= 0.0);
    }
}

#[test]
fn malformed_configs_error_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let opts = RunOptions { quiet: true, ..Default::default() };

    // Invalid JSON text.
    let path = tmp.path().join("broken.json");
    fs::write(&path, "{ not json").unwrap();
    assert!(run_config_path(&path, &opts).is_err());

    // Schema violation: unknown field.
    let cfg = json!({
        "experiment": "single_run",
        "scenario": {"kind": "riemann", "left": 1.0, "right": 0.0},
        "out_dir": out,
        "surprise": true
    });
    let path = write_cfg(tmp.path(), &cfg);
    assert!(run_config_path(&path, &opts).is_err());

    // Validation failure: empty scale list.
    let cfg = json!({
        "experiment": "single_run",
        "scenario": {"kind": "riemann", "left": 1.0, "right": 0.0},
        "epsilons": [],
        "out_dir": out
    });
    let path = write_cfg(tmp.path(), &cfg);
    let err = run_config_path(&path, &opts).unwrap_err();
    assert!(err.to_string().contains("at least one scale"), "got: {err}");

    // Missing file.
    assert!(run_config_path(&tmp.path().join("nope.json"), &opts).is_err());

    assert!(!out.exists(), "bad configs must not create artifacts");
}

#[test]
fn identical_configs_reproduce_artifacts_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = json!({
        "experiment": "single_run",
        "scenario": {"kind": "random_bv", "n_jumps": 8, "span": [-0.75, 0.75]},
        "kernel": {"family": "piecewise_linear", "radius": 2.0},
        "epsilons": [0.25],
        "grid": {"cells_per_eps": 16},
        "t_end": 0.2,
        "snapshots": {"count": 3},
        "out_dir": out,
        "seed": 7
    });
    let path = write_cfg(tmp.path(), &cfg);
    let opts = RunOptions { quiet: true, ..Default::default() };

    let first = run_config_path(&path, &opts).unwrap();
    assert!(first.label.starts_with("cfg-"), "digest labels expected, got {}", first.label);
    let bytes_first = dir_bytes(&first.dir);
    assert!(bytes_first.contains_key("manifest.json"));

    // Rerun with more workers: same label, same bytes, files overwritten.
    let second = run_config_path(&path, &RunOptions { jobs: 4, quiet: true, label: None }).unwrap();
    assert_eq!(first.label, second.label);
    let bytes_second = dir_bytes(&second.dir);
    assert_eq!(
        bytes_first.keys().collect::<Vec<_>>(),
        bytes_second.keys().collect::<Vec<_>>(),
        "artifact sets differ"
    );
    for (rel, bytes) in &bytes_first {
        assert_eq!(bytes, &bytes_second[rel], "artifact {rel} is not reproducible");
    }

    // A different seed changes the datum, hence the label and the data.
    let mut reseeded = cfg.clone();
    reseeded["seed"] = 8.into();
    let path = write_cfg(tmp.path(), &reseeded);
    let third = run_config_path(&path, &opts).unwrap();
    assert_ne!(first.label, third.label, "seed must feed the digest");
}

#[test]
fn explicit_domain_and_dx_are_honored() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = json!({
        "experiment": "single_run",
        "scenario": {"kind": "monotone_ramp", "a": -0.5, "b": 0.5},
        "kernel": {"family": "uniform"},
        "epsilons": [0.25],
        "grid": {"dx": 0.03125, "x_left": -4.0, "x_right": 2.0},
        "t_end": 0.1,
        "snapshots": {"count": 2},
        "out_dir": out,
        "label": "fixed-grid"
    });
    let path = write_cfg(tmp.path(), &cfg);
    let summary = run_config_path(&path, &RunOptions { quiet: true, ..Default::default() }).unwrap();
    assert!(summary.passed);

    let manifest = read_json(&summary.dir.join("manifest.json"));
    let run = &manifest["runs"][0];
    assert_eq!(run["dx"].as_f64().unwrap(), 0.03125);
    assert_eq!(run["x_left"].as_f64().unwrap(), -4.0);
    assert!(run["x_right"].as_f64().unwrap() >= 2.0);
    assert_eq!(run["boundary_left"].as_f64().unwrap(), 0.0);
    assert_eq!(run["boundary_right"].as_f64().unwrap(), 1.0);
}
