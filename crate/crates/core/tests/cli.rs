use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;

use oscillax::cli::{run_cli_with, Plugins, RunConfig};
use oscillax::model::{CustomNonlinearity, Nonlinearity};
use serde_json::Value;

fn oscillax(args: &[&str]) -> i32 {
    let status = Command::new(env!("CARGO_BIN_EXE_oscillax"))
        .args(args)
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn eigen_command_writes_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(oscillax(&["eigen", "--domain", "interval", "--cells", "256", "--out", out]), 0);
    let manifest = read_json(&dir.path().join("manifest.json"));
    let lambda = manifest["lambda1"].as_f64().unwrap();
    assert!((lambda - PI * PI).abs() / (PI * PI) < 5e-3);
    let csv = std::fs::read_to_string(dir.path().join("eigen.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("node,x,phi1"));
    assert_eq!(csv.lines().count(), 258);
    assert!(dir.path().join("mesh_nodes.csv").exists());
}

#[test]
fn solve_paper_example_writes_seven_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "solve", "--domain", "interval", "--a", "0", "--b", "1", "--cells", "256", "--op", "p_laplacian", "--p", "2",
        "--nl", "paper_example", "--n-start", "2", "--n-end", "8", "--out", out,
    ];
    assert_eq!(oscillax(&args), 0);
    let decay = std::fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    let rows: Vec<&str> = decay.lines().skip(1).collect();
    assert_eq!(rows.len(), 7);
    for n in 2..=8 {
        assert!(dir.path().join(format!("branch_{n}.csv")).exists());
    }

    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["branches"].as_array().unwrap().len(), 7);
    assert_eq!(manifest["mesh"]["nodes"], 257);
    assert!(manifest["hypotheses"].as_array().unwrap().len() >= 6);

    // the echoed config reproduces the run configuration both ways
    let parsed = RunConfig::from_args(args.iter().copied()).unwrap();
    let echoed: RunConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(echoed, parsed);
    let echoed_args: Vec<String> = serde_json::from_value(manifest["args"].clone()).unwrap();
    assert_eq!(RunConfig::from_args(echoed_args).unwrap(), parsed);
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let out = first.path().to_str().unwrap();
    assert_eq!(oscillax(&["solve", "--cells", "64", "--n-start", "3", "--n-end", "5", "--p", "3", "--out", out]), 0);
    let manifest = read_json(&first.path().join("manifest.json"));
    let mut args: Vec<String> = serde_json::from_value(manifest["args"].clone()).unwrap();

    let second = tempfile::tempdir().unwrap();
    let pos = args.iter().position(|a| a == "--out").unwrap();
    args[pos + 1] = second.path().to_str().unwrap().to_string();
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(oscillax(&refs), 0);
    for f in ["decay.csv", "branch_3.csv", "branch_4.csv", "branch_5.csv", "eigen.csv", "hypotheses.json"] {
        let a = std::fs::read(first.path().join(f)).unwrap();
        let b = std::fs::read(second.path().join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn check_command_reports_per_node_signs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(oscillax(&["check", "--nl", "paper_example", "--n-start", "1", "--n-end", "8", "--out", out]), 0);
    let reports = read_json(&dir.path().join("hypotheses.json"));
    let find = |c: &str| {
        reports
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["condition"] == c)
            .unwrap()
            .clone()
    };
    for c in ["beta_below_gamma", "sequences_vanish", "rate_diverges"] {
        assert_eq!(find(c)["verdict"], "pass", "{c}");
    }
    let sign = find("source_nonpositive_at_gamma");
    assert_eq!(sign["samples"].as_array().unwrap().len(), 8 * 255);
    assert!(sign["witness"]["node"].is_u64());
    assert!(!dir.path().join("decay.csv").exists());

    // a failing hypothesis only matters when declared fatal
    assert_eq!(
        oscillax(&["check", "--n-start", "1", "--n-end", "8", "--fatal-hypotheses", "--out", out]),
        1
    );
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(oscillax(&["solve", "--cells", "1", "--out", out]), 2);
    assert_eq!(oscillax(&["solve", "--n-start", "9", "--n-end", "3", "--out", out]), 2);
    assert_eq!(oscillax(&["solve", "--domain", "circle", "--out", out]), 2);
    assert_eq!(oscillax(&["solve", "--op", "custom", "--out", out]), 2);
    assert_eq!(oscillax(&["transmogrify"]), 2);
    assert_eq!(oscillax(&["--help"]), 0);
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn seedless_variable_is_ignored() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, value) in [(&a, None), (&b, Some("1"))] {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_oscillax"));
        cmd.args(["solve", "--cells", "32", "--n-start", "2", "--n-end", "3", "--out"]).arg(dir.path());
        if let Some(v) = value {
            cmd.env("OSCILLAX_SEEDLESS", v);
        }
        assert!(cmd.output().unwrap().status.success());
    }
    assert_eq!(
        std::fs::read(a.path().join("decay.csv")).unwrap(),
        std::fs::read(b.path().join("decay.csv")).unwrap()
    );
}

#[test]
fn infeasible_branches_exit_one_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let plugins = Plugins {
        phi: None,
        nonlinearity: Some(Box::new(|_| {
            Box::new(CustomNonlinearity::new("crossing", |_, _| 0.0, |n| 0.02 * n as f64, |_| 0.05))
                as Box<dyn Nonlinearity>
        })),
    };
    let status = run_cli_with(
        ["solve", "--cells", "16", "--nl", "custom", "--n-start", "1", "--n-end", "4", "--out", out],
        &plugins,
    );
    assert_eq!(status, 1);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["exit_status"], 1);
    let decay = std::fs::read_to_string(dir.path().join("decay.csv")).unwrap();
    assert!(decay.lines().nth(1).unwrap().ends_with(",ok"));
    assert!(decay.lines().nth(4).unwrap().contains("infeasible"));
    assert!(dir.path().join("branch_1.csv").exists());
    assert!(!dir.path().join("branch_4.csv").exists());
}
