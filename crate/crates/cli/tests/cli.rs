use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qbtransfer(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbtransfer"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn direct_run_writes_traces_and_reports() {
    let dir = TempDir::new().unwrap();
    let out = qbtransfer(
        dir.path(),
        &[
            "run",
            "--scenario",
            "direct",
            "--g",
            "0.05",
            "--methods",
            "analytic,piecewise",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "trace_analytic.csv",
        "trace_piecewise.csv",
        "report.json",
        "report_comparison.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let data = rows(&dir.path().join("trace_piecewise.csv"));
    let at_quarter = data
        .iter()
        .find(|r| (num(&r[0]) - PI / 2.0).abs() < 1e-10)
        .expect("switch-off instant is sampled");
    assert!((num(&at_quarter[2]) - 1.0).abs() < 1e-10);
    for r in &data {
        assert!((num(&r[2]) + num(&r[3])).abs() < 1e-10);
        assert_eq!(r[4], "");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["scenario"], "direct");
    assert_eq!(report["results"].as_array().unwrap().len(), 2);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = [
        "run",
        "--scenario",
        "two-step",
        "--g",
        "0.05",
        "--sigma-g",
        "7.5",
        "--methods",
        "analytic,piecewise,rk4",
        "--n-samples",
        "301",
    ];
    assert!(qbtransfer(a.path(), &args).status.success());
    assert!(qbtransfer(b.path(), &args).status.success());
    for name in [
        "trace_analytic.csv",
        "trace_piecewise.csv",
        "trace_rk4.csv",
        "report.json",
        "report_comparison.json",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "scenario = \"coherent\"\ng = 0.05\nn_samples = 101\nmethods = [\"analytic\"]\ntrace = \"out/c.csv\"\n",
    )
    .unwrap();
    let out = qbtransfer(
        dir.path(),
        &["run", "--config", "run.toml", "--n-samples", "51"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let data = rows(&dir.path().join("out/c_analytic.csv"));
    assert!(data.len() >= 51 && data.len() < 101);
    let peak_m = data.iter().map(|r| num(&r[4])).fold(f64::MIN, f64::max);
    assert!(peak_m <= 0.5 + 1e-12 && peak_m > 0.49);
    let last = data.last().unwrap();
    assert!((num(&last[2]) - 1.0).abs() < 1e-10);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["run", "--scenario", "direct", "--g", "0"],
        vec!["run", "--scenario", "two-step", "--g", "0.05"],
        vec![
            "run",
            "--scenario",
            "direct",
            "--g",
            "0.05",
            "--methods",
            "euler",
        ],
        vec!["run", "--config", "missing.toml"],
        vec!["sweep", "--g", "-0.1"],
    ];
    for args in cases {
        let out = qbtransfer(dir.path(), &args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    std::fs::write(
        dir.path().join("bad.toml"),
        "scenario = \"direct\"\ng = 0.05\ncolour = 3\n",
    )
    .unwrap();
    assert_eq!(
        qbtransfer(dir.path(), &["run", "--config", "bad.toml"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn help_and_version_exit_zero() {
    let dir = TempDir::new().unwrap();
    assert!(qbtransfer(dir.path(), &["--help"]).status.success());
    assert!(qbtransfer(dir.path(), &["--version"]).status.success());
}

#[test]
fn tolerance_breach_exits_two_after_writing() {
    let dir = TempDir::new().unwrap();
    let out = qbtransfer(
        dir.path(),
        &[
            "run",
            "--scenario",
            "coherent",
            "--g",
            "0.05",
            "--variant",
            "full-counter-rotating",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let cmp: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("report_comparison.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(cmp["passed"], false);
}

#[test]
fn strong_coupling_warns() {
    let dir = TempDir::new().unwrap();
    let out = qbtransfer(
        dir.path(),
        &[
            "run",
            "--scenario",
            "direct",
            "--g",
            "0.2",
            "--methods",
            "piecewise",
        ],
    );
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("rotating-wave"));
}

#[test]
fn sweep_to_stdout_and_file() {
    let dir = TempDir::new().unwrap();
    let out = qbtransfer(
        dir.path(),
        &["sweep", "--scenarios", "direct,coherent", "--g", "0.05"],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "g_over_omega_b,scenario,omega_b_t_max,method");
    assert_eq!(lines[1], "5.00000000000e-2,direct,3.14159265359e1,analytic");
    assert_eq!(lines.len(), 3);

    let out = qbtransfer(dir.path(), &["sweep", "--numeric", "--output", "fig.csv"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let data = rows(&dir.path().join("fig.csv"));
    assert_eq!(data.iter().filter(|r| r[3] == "analytic").count(), 30);
}

#[test]
fn verify_passes() {
    let dir = TempDir::new().unwrap();
    let out = qbtransfer(dir.path(), &["verify"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS ")), "{text}");
}
