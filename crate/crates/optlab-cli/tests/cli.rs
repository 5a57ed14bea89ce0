//! End-to-end checks of the `optlab` binary: exit codes, output files,
//! and byte-level determinism.

use std::fs;
use std::path::Path;
use std::process::Command;

fn optlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_optlab"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const SMALL_TABLE: &str = r#"{
  "problem": {"kind": "diagonal", "values": [1.0, 0.25, 0.0625]},
  "rotations": [{"kind": "skew_exp", "t": 0.0}, {"kind": "skew_exp", "t": 0.4}],
  "optimizers": [{"algo": "adam"}, {"algo": "adasgd"}],
  "lr_grid": [0.05, 0.2],
  "steps": 10,
  "n_probes": 51
}"#;

#[test]
fn table1_produces_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SMALL_TABLE);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let status = optlab()
            .args(["table1", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--seed", "3"])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let csv_a = fs::read(out_a.join("quadratic_table.csv")).unwrap();
    let csv_b = fs::read(out_b.join("quadratic_table.csv")).unwrap();
    assert!(!csv_a.is_empty());
    assert_eq!(csv_a, csv_b, "reruns must be byte-identical");

    let header = String::from_utf8(csv_a)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(
        header,
        "run_id,experiment,optimizer,phi,beta1,beta2,eps,v0,lr,rotation_kind,rotation_t,\
         seed,step,loss,grad_l1,grad_l2,grad_phi_dual,v_min,v_max,final"
    );
    assert!(out_a.join("quadratic_table_meta.json").exists());
    assert!(out_a.join("quadratic_table_summary.csv").exists());
}

#[test]
fn config_errors_exit_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", r#"{"stepz": 5}"#);
    let status = optlab()
        .args(["table1", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // steps = 0 parses but fails validation
    let invalid = write_config(dir.path(), "invalid.json", r#"{"steps": 0}"#);
    let status = optlab()
        .args(["sweep", "--config"])
        .arg(&invalid)
        .arg("--out")
        .arg(dir.path().join("out2"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));

    // missing output directory is a config error too
    let ok = write_config(dir.path(), "ok.json", "{}");
    let status = optlab()
        .args(["norms", "--config"])
        .arg(&ok)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn bounds_prints_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bounds.json",
        r#"{
          "experiment": "bound_check",
          "bound_inputs": {
            "smoothness": [8.0], "sigma": [0.0], "block_sizes": [1],
            "eta": 0.125, "beta2": 0.0, "steps": 16,
            "v0": 1.0, "epsilon": 0.0, "delta0": 1.0, "grad0_phi": 1.0
          }
        }"#,
    );
    let output = optlab().args(["bounds", "--config"]).arg(&cfg).output().unwrap();
    assert!(output.status.success());
    let parsed: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(parsed["signgd_optimized_bound"], 1.0);
    assert_eq!(parsed["signgd_optimal_eta"], 0.125);
}

#[test]
fn sweep_and_invariance_and_norms_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let sweep_cfg = write_config(
        dir.path(),
        "sweep.json",
        r#"{
          "problem": {"kind": "random_psd", "dim": 6},
          "seeds": [0, 1],
          "t_grid": [16, 64],
          "sweep_algo": "signgd"
        }"#,
    );
    let out = dir.path().join("sweep");
    let status = optlab()
        .args(["sweep", "--config"])
        .arg(&sweep_cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("convergence_sweep.csv").exists());
    assert!(out.join("convergence_sweep_summary.csv").exists());

    let inv_cfg = write_config(
        dir.path(),
        "inv.json",
        r#"{"invariance_checks": 2, "invariance_dim_max": 8, "steps": 15}"#,
    );
    let out = dir.path().join("inv");
    let status = optlab()
        .args(["invariance", "--config"])
        .arg(&inv_cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(out.join("invariance_suite.csv")).unwrap();
    assert!(text.lines().next().unwrap().contains("deviation"));

    let norms_cfg = write_config(
        dir.path(),
        "norms.json",
        r#"{
          "problem": {"kind": "diagonal", "values": [1.0, 2.0, 3.0]},
          "rotations": [{"kind": "identity"}],
          "n_probes": 101
        }"#,
    );
    let out = dir.path().join("norms");
    let status = optlab()
        .args(["norms", "--config"])
        .arg(&norms_cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(out.join("norm_estimate.csv")).unwrap();
    assert!(text.contains("norm11_exact"));
    assert!(text.contains("spectral_norm"));
}
