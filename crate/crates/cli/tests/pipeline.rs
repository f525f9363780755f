use std::fs;
use std::path::Path;
use std::process::Command;

use lcflow::steady::BoostSpec;
use lcflow_cli::commands;
use lcflow_cli::formats::read_snapshot;
use lcflow_cli::{parse_config, RunConfig};

fn config(text: &str, out: &Path) -> RunConfig {
    let mut cfg = parse_config(text).unwrap();
    cfg.output.directory = out.to_path_buf();
    cfg
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn steady_report_contains_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("grid.L = 16\ninitial.c = 1.2\ninitial.a = 0.1, 0, -0.2", dir.path());
    commands::steady(cfg, None).unwrap();
    let r = json(&dir.path().join("report.json"));
    let fit = &r["fit"];
    assert!(fit["residual"].as_f64().unwrap() < 1e-8);
    assert!((fit["c"].as_f64().unwrap() - 1.2).abs() < 1e-10);
    let a: Vec<f64> = fit["a"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((a[0] - 0.1).abs() < 1e-10 && a[1].abs() < 1e-10 && (a[2] + 0.2).abs() < 1e-10);
}

#[test]
fn boosted_steady_snapshot_fits_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("grid.L = 16", dir.path());
    let b = BoostSpec::new(0.4, [1.0, 0.0, 0.0]).unwrap();
    commands::steady(cfg.clone(), Some(b)).unwrap();
    let f = commands::fit(&cfg, &dir.path().join("omega_0000.f64")).unwrap();
    assert!((f.a[0] - 0.4f64.sinh()).abs() < 1e-10, "{f:?}");
    assert!(f.residual < 1e-20);

    let other = config("grid.L = 12", dir.path());
    assert!(commands::fit(&other, &dir.path().join("omega_0000.f64")).is_err());
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = "\
grid.L = 12
initial.kind = mobius
initial.a = 0, 0.2, 0
flow.mode = normalized
flow.stop = t_final
flow.t_final = 0.3
flow.snapshot_every = 0.1
output.snapshot_stride = 2
verify.checks = codazzi, gradient_inequality, evolution
";
    let report = commands::run(config(text, dir.path())).unwrap();
    for f in ["diagnostics.csv", "report.json", "omega_0000.f64", "omega_0002.f64"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("omega_0001.f64").exists());
    assert_eq!(report.snapshots, vec!["omega_0000.f64", "omega_0002.f64"]);
    // The evolution check wants an unnormalized run, so it is reported, not run.
    assert!(report.errors.contains_key("evolution"));
    assert_eq!(report.reports.len(), 2);
    let s = read_snapshot(&dir.path().join("omega_0002.f64")).unwrap();
    assert!((s.t - 0.2).abs() < 1e-12);
    let summary = commands::report(dir.path()).unwrap();
    assert!(summary.contains("command: run") && summary.contains("fit:"), "{summary}");
}

#[test]
fn file_initial_data_reproduces_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("grid.L = 12\ninitial.a = 0.3, 0, 0", dir.path());
    commands::steady(cfg, None).unwrap();
    let snap = dir.path().join("omega_0000.f64");
    let text = format!("grid.L = 12\ninitial.kind = file\ninitial.file = {}", snap.display());
    let cfg = config(&text, dir.path());
    let grid = commands::grid_for(&cfg).unwrap();
    let w = commands::initial_omega(&cfg, &grid, 0).unwrap();
    let back = read_snapshot(&snap).unwrap();
    assert!(w.field().values().iter().zip(&back.values).all(|(a, b)| a.to_bits() == b.to_bits()));
}

fn lcflow(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lcflow")).args(args).output().unwrap()
}

#[test]
fn deterministic_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "grid.L = 10\ninitial.kind = random\ninitial.amplitude = 0.05\nflow.stop = t_final\nflow.t_final = 0.05\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = lcflow(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "9",
            "--deterministic",
            "run",
        ]);
        assert!(o.status.code().is_some(), "{o:?}");
    }
    let ra = fs::read(a.join("report.json")).unwrap();
    assert_eq!(ra, fs::read(b.join("report.json")).unwrap());
    assert_eq!(fs::read(a.join("diagnostics.csv")).unwrap(), fs::read(b.join("diagnostics.csv")).unwrap());
    let r: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(r["seed"], 9);
    assert!(r.get("wall_seconds").is_none());
}

#[test]
fn cli_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "grid.L = 2\n").unwrap();
    let o = lcflow(&["--config", cfg.to_str().unwrap(), "verify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid.L must be ≥ 4"));

    fs::write(&cfg, "grid.L = 8\nsurprise = 1\n").unwrap();
    let o = lcflow(&["--config", cfg.to_str().unwrap(), "verify"]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn cli_verify_exit_status_follows_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v.cfg");
    fs::write(&cfg, "grid.L = 16\ninitial.kind = mobius\ninitial.a = 0.2, 0, 0\n").unwrap();
    let o = lcflow(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "verify"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{stdout}");

    let o = lcflow(&["--out", dir.path().to_str().unwrap(), "steady", "--rapidity", "-0.3", "--axis", "0,1,0"]);
    assert!(o.status.success());
    let o = lcflow(&["steady", "--rapidity", "0.3", "--axis", "0,1"]);
    assert_eq!(o.status.code(), Some(2));
}
