//! End-to-end tests of the `spike-dyn` binary: determinism of emitted
//! artifacts, manifest completeness, schemas, exit codes, and the seed
//! override.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spike-dyn"))
}

/// Small, fast settings shared by the CLI tests.
fn small_config(extra: &str) -> String {
    format!(
        r#"{{
  "model": {{ "d": 8, "m": 12, "n": 500, "rho": 20.0, "alignment": 0.3 }},
  "training": {{ "eta": 5e-3, "s": 1e-4, "max_steps": 1200, "record_every": 5 }},
  "seeds": [3]{extra}
}}"#
    )
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

fn dir_files(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect()
}

#[test]
fn fig1_reruns_are_byte_identical_and_manifest_is_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(""));

    for out in ["a", "b"] {
        let status = binary()
            .args(["fig1", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
    }

    let dir_a = tmp.path().join("a/fig1_phase_plane");
    let dir_b = tmp.path().join("b/fig1_phase_plane");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir_a.join("manifest.json")).unwrap()).unwrap();
    let artifacts: BTreeSet<String> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();

    // the files on disk are exactly the manifest listing plus the manifest
    let mut expected = artifacts.clone();
    expected.insert("manifest.json".into());
    assert_eq!(dir_files(&dir_a), expected);

    // identical config + seeds => byte-identical data artifacts
    for name in &artifacts {
        let a = fs::read(dir_a.join(name)).unwrap();
        let b = fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between reruns");
    }

    for name in [
        "trajectory_full.csv",
        "trajectory_reduced.csv",
        "field.csv",
        "nullclines.csv",
    ] {
        assert!(artifacts.contains(name), "missing {name}");
    }
    assert!(artifacts.contains("basis.json"));
}

#[test]
fn fig2_emits_evolution_and_timescales() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(""));
    let status = binary()
        .args(["fig2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .status()
        .unwrap();
    assert!(status.success());

    let dir = tmp.path().join("out/fig2_weight_evolution");
    let evolution = fs::read_to_string(dir.join("evolution.csv")).unwrap();
    assert!(evolution.starts_with(
        "step,t_tilde,loss,w1_proj,w2_proj,a_proj,conservation_residual,deviation_energy,u_analytic"
    ));
    let timescales: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("timescales.json")).unwrap()).unwrap();
    assert!(timescales["early_timescale"].as_f64().unwrap() > 0.0);
    assert!(timescales["later_phase_bound"].as_f64().unwrap() > 0.0);
    assert!(timescales["t1_measured"].as_f64().is_some());
}

#[test]
fn fig3_requires_exactly_one_sweep_list() {
    let tmp = tempfile::tempdir().unwrap();

    // no sweep list: config error, exit code 2
    let cfg = write_config(tmp.path(), &small_config(""));
    let status = binary()
        .args(["fig3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("x"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let cfg = write_config(
        tmp.path(),
        &small_config(",\n  \"rho_list\": [0.0, 5.0, 20.0]"),
    );
    let status = binary()
        .args(["fig3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .status()
        .unwrap();
    assert!(status.success());
    let sweep = fs::read_to_string(tmp.path().join("out/fig3_loss_sweep/loss_sweep.csv")).unwrap();
    assert!(
        sweep.starts_with("param,value,step,t_tilde,normalized_loss,early_timescale,later_bound")
    );
    assert!(sweep.contains("rho"));
}

#[test]
fn fig4_grid_matches_pointwise_theory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{ "gamma_list": [3.0], "risk_grid": 6 }"#);
    let status = binary()
        .args(["fig4", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .status()
        .unwrap();
    assert!(status.success());

    let text =
        fs::read_to_string(tmp.path().join("out/fig4_risk_colormap/risk_colormap.csv")).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let (gamma, rho, a) = (
            fields[0].parse::<f64>().unwrap(),
            fields[1].parse::<f64>().unwrap(),
            fields[2].parse::<f64>().unwrap(),
        );
        let normalized = fields[5].parse::<f64>().unwrap();
        let m = spike_dyn::genx_error::RiskModel::new(gamma, 1.0, rho, a).unwrap();
        let expected = spike_dyn::genx_error::normalized_risk(&m).unwrap();
        assert!(
            (normalized - expected).abs() < 1e-14,
            "grid value {normalized} vs pointwise {expected}"
        );
        // the A = 0 column is the constant isotropic value 1 - 1/gamma
        if a == 0.0 {
            assert!((normalized - (1.0 - 1.0 / 3.0)).abs() < 1e-14);
        }
        rows += 1;
    }
    assert_eq!(rows, 36);

    // gamma <= 1 is a config error
    let cfg = write_config(tmp.path(), r#"{ "gamma_list": [0.9] }"#);
    let status = binary()
        .args(["fig4", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("bad"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn fig5_seed_env_override_changes_trials() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"{
  "model": { "rho": 20.0, "alignment": 0.5 },
  "gamma_list": [2.0],
  "risk_dim": 60,
  "seeds": [0, 1, 2]
}"#;
    let cfg = write_config(tmp.path(), body);
    let run = |out: &str, env: Option<&str>| {
        let mut cmd = binary();
        cmd.args(["fig5", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(out));
        if let Some(seed) = env {
            cmd.env("SPIKE_DYN_SEED", seed);
        } else {
            cmd.env_remove("SPIKE_DYN_SEED");
        }
        assert!(cmd.status().unwrap().success());
        fs::read_to_string(
            tmp.path()
                .join(out)
                .join("fig5_risk_vs_gamma/risk_vs_gamma.csv"),
        )
        .unwrap()
    };
    let base = run("a", None);
    let same = run("b", None);
    let other = run("c", Some("777"));
    assert_eq!(base, same);
    assert_ne!(base, other, "seed override must change the trials");

    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("c/fig5_risk_vs_gamma/manifest.json")).unwrap(),
    )
    .unwrap();
    let seeds: Vec<u64> = manifest["seeds"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(seeds, vec![777, 778, 779]);
}

#[test]
fn parallel_and_serial_runs_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"{
  "model": { "rho": 20.0, "alignment": 0.5 },
  "gamma_list": [1.5, 3.0],
  "risk_dim": 60,
  "seeds": [0, 1, 2, 3]
}"#;
    let cfg = write_config(tmp.path(), body);
    let run = |out: &str, threads: &str| {
        let status = binary()
            .args(["fig5", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(out))
            .args(["--threads", threads])
            .status()
            .unwrap();
        assert!(status.success());
        fs::read_to_string(
            tmp.path()
                .join(out)
                .join("fig5_risk_vs_gamma/risk_vs_gamma.csv"),
        )
        .unwrap()
    };
    assert_eq!(run("serial", "1"), run("parallel", "4"));
}

#[test]
fn validate_writes_passing_report() {
    let tmp = tempfile::tempdir().unwrap();
    let status = binary()
        .args(["validate", "--strict", "--out"])
        .arg(tmp.path().join("v"))
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("v/validate/validation.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["all_passed"], serde_json::Value::Bool(true));
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 10);
    let mut names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    let total = names.len();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), total, "duplicate check names in the report");
}

#[test]
fn unknown_config_keys_and_bad_values_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), r#"{ "not_a_field": 1 }"#);
    let status = binary()
        .args(["fig1", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let cfg = write_config(tmp.path(), r#"{ "model": { "alignment": 2.0 } }"#);
    let status = binary()
        .args(["fig1", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // declared experiment must match the subcommand
    let cfg = write_config(tmp.path(), r#"{ "experiment": "fig2_weight_evolution" }"#);
    let status = binary()
        .args(["fig1", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn custom_emits_combined_artifact_set() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &small_config(""));
    let status = binary()
        .args(["custom", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .status()
        .unwrap();
    assert!(status.success());
    let files = dir_files(&tmp.path().join("out/custom"));
    for name in [
        "trajectory_full.csv",
        "trajectory_reduced.csv",
        "field.csv",
        "evolution.csv",
        "timescales.json",
        "basis.json",
        "manifest.json",
    ] {
        assert!(files.contains(name), "missing {name} in custom run");
    }
}

#[test]
fn nu_zero_run_warns_and_omits_nullclines() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "model": { "d": 8, "m": 12, "n": 500, "rho": 20.0, "alignment": 1.0 },
  "training": { "eta": 5e-3, "s": 1e-4, "max_steps": 800, "record_every": 5, "moments": "population" },
  "seeds": [3]
}"#,
    );
    let output = binary()
        .args(["fig1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let dir = tmp.path().join("out/fig1_phase_plane");
    assert!(!dir.join("nullclines.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let warnings = manifest["warnings"].as_array().unwrap();
    assert!(
        warnings
            .iter()
            .any(|w| w.as_str().unwrap().contains("nu = 0")),
        "expected a nu = 0 warning, got {warnings:?}"
    );
}
