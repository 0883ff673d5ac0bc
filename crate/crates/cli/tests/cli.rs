use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use serde_json::Value;
use spinfactor_cli::{run_experiment, Command, ExperimentConfig, IsometrySpec};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn bin(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_spinfactor")).args(args).output().expect("binary runs")
}

/// Output with the wall-clock line removed.
fn payload(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with("\"wall_clock_seconds\"")).collect::<Vec<_>>().join("\n")
}

fn detail(report: &spinfactor_cli::Report, key: &str) -> f64 {
    report.details[key].as_f64().unwrap_or_else(|| panic!("missing {key}"))
}

#[test]
fn sliver_order_two_shift() {
    let mut cfg = ExperimentConfig::new(Command::FixpointSliver);
    cfg.dim = 2;
    cfg.t = 0.5;
    cfg.isometry = IsometrySpec::CyclicShift(2);
    let report = run_experiment(&cfg).unwrap();
    let u0 = detail(&report, "u0");
    assert!((u0 - (4.0 - 7f64.sqrt()) / 3.0).abs() <= 1e-10, "u0 = {u0}");
    assert!(detail(&report, "residual") <= 1e-10);
    assert!(report.all_pass());
    // The scanned h profile is the item table.
    assert!(report.items.len() > 60);
    assert!(report.items[0].get("h").is_some());
}

#[test]
fn axioms_dim_eight() {
    let mut cfg = ExperimentConfig::new(Command::Axioms);
    cfg.dim = 8;
    cfg.samples = 1000;
    cfg.seed = 42;
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.items.len(), 1000);
    assert_eq!(report.checks.len(), 6);
    assert!(report.all_pass(), "{:?}", report.checks);
}

#[test]
fn weakfp_identity_limit_is_on_the_boundary() {
    let mut cfg = ExperimentConfig::new(Command::Weakfp);
    cfg.dim = 6;
    cfg.t = 0.5;
    let report = run_experiment(&cfg).unwrap();
    assert!(detail(&report, "xi_norm") >= 1.0 - 1e-6);
    let xi: Vec<f64> = serde_json::from_value(report.details["xi"].clone()).unwrap();
    assert!((xi[0] - 1.0).abs() <= 1e-6 && xi[1..].iter().all(|v| v.abs() <= 1e-6));
    assert_eq!(report.details["classification"], Value::from("(i) boundary limit"));
    assert!(report.all_pass());
}

#[test]
fn binary_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.json");
    let runs: Vec<String> = (0..2)
        .map(|_| {
            let o = bin(&["--command", "density", "--dim", "5", "--samples", "200", "--seed", "9", "--out", out.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            std::fs::read_to_string(&out).unwrap()
        })
        .collect();
    assert_eq!(payload(&runs[0]), payload(&runs[1]));
    assert!(serde_json::from_str::<Value>(&runs[0]).is_ok());
}

#[test]
fn thread_count_does_not_change_the_payload() {
    let run = |threads: &str| {
        let o = Process::new(env!("CARGO_BIN_EXE_spinfactor"))
            .env("RAYON_NUM_THREADS", threads)
            .args(["--command", "axioms", "--dim", "6", "--samples", "300", "--seed", "3"])
            .output()
            .unwrap();
        payload(&String::from_utf8(o.stdout).unwrap())
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn invalid_isometry_files_are_rejected() {
    for name in ["unitary_mixing.txt", "diag_i_1_1.txt", "not_orthogonal_3x3.txt"] {
        let spec = format!("matrix-file({})", fixture(name).display());
        let o = bin(&["--command", "weakfp", "--dim", "3", "--isometry", &spec]);
        assert_eq!(o.status.code(), Some(2), "{name} accepted");
        assert!(String::from_utf8_lossy(&o.stderr).contains("invalid isometry"), "{name}");
    }
    let spec = format!("matrix-file({})", fixture("rotation_3x3.txt").display());
    let o = bin(&["--command", "weakfp", "--dim", "3", "--isometry", &spec]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn dynamics_csv_columns() {
    let o = bin(&[
        "--command", "dynamics", "--dim", "4", "--t", "0.5", "--samples", "2", "--max-iter", "300", "--format", "csv",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("start,k,d_sub,d_bdry,norm"));
    assert_eq!(lines.count(), 2 * 300);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let mut cfg = ExperimentConfig::new(Command::FixpointOrthogonal);
    cfg.dim = 8;
    cfg.isometry = IsometrySpec::CyclicShift(8);
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();

    // Eight terms leave a residual far above the threshold.
    let o = bin(&["--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let o = bin(&["--config", path.to_str().unwrap(), "--dim", "48", "--isometry", "cyclic-shift(48)"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["dim"], Value::from(48));
}

#[test]
fn bad_fields_exit_with_two() {
    assert_eq!(bin(&["--command", "weakfp", "--t", "1.2"]).status.code(), Some(2));
    assert_eq!(bin(&["--command", "axioms", "--dim", "1"]).status.code(), Some(2));
    assert_eq!(bin(&["--command", "weakfp", "--isometry", "plane-rotation(1,9,0.3)"]).status.code(), Some(2));
    assert_eq!(bin(&["--dim", "3"]).status.code(), Some(2));
}
