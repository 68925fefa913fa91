use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use approx::assert_relative_eq;
use qcrit_cli::config::RunConfig;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn qcrit(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcrit"))
        .args(args)
        .env("QCRIT_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report is JSON")
}

fn error_record(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).expect("error is JSON")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn eigen_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("eigen_interval_p2.toml");
    let o = qcrit(&["eigen", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["schema"], "qcrit-report/1");
    assert_eq!(r["command"], "eigen");
    assert_eq!(r["provenance"]["seed"], 42);
    let l = r["results"]["lambda1"].as_f64().unwrap();
    assert_relative_eq!(l, std::f64::consts::PI.powi(2), max_relative = 1e-4);
    let csv = std::fs::read_to_string(dir.path().join("eigen_eigenfunction.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("id,x,value"));
    assert_eq!(lines.count(), 513);
    assert_eq!(r["artifacts"][0], "eigen_eigenfunction.csv");
}

#[test]
fn reports_are_byte_identical() {
    for (cmd, cfg) in [("solve", "solve_screened.toml"), ("morrey", "morrey_square.toml")] {
        let dir = tempfile::tempdir().unwrap();
        let path = configs().join(cfg);
        let a = qcrit(&[cmd, path.to_str().unwrap()], dir.path());
        let b = qcrit(&[cmd, path.to_str().unwrap()], dir.path());
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn config_echo_reparses() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["iterate_screened.toml", "criticality_line.toml", "green_square.toml", "morrey_square.toml"] {
        let path = configs().join(name);
        let original = RunConfig::load(&path).unwrap();
        let echoed: RunConfig = serde_json::from_value(serde_json::to_value(&original).unwrap()).unwrap();
        assert_eq!(echoed, original);
        if name.starts_with("iterate") {
            let o = qcrit(&["iterate", path.to_str().unwrap()], dir.path());
            let back: RunConfig = serde_json::from_value(report(&o)["config"].clone()).unwrap();
            assert_eq!(back, original);
        }
    }
}

#[test]
fn every_shipped_config_parses() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 10);
}

#[test]
fn invalid_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // q <= n / p in the p < n regime
    let morrey = write_config(
        dir.path(),
        "bad_q.toml",
        r#"schema = "qcrit-config/1"
[problem]
p = 1.5
domain = { kind = "rectangle", x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0, nx = 4, ny = 4 }
[morrey]
q = 1.0
"#,
    );
    let o = qcrit(&["morrey", &morrey], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let e = error_record(&o);
    assert_eq!(e["code"], "invalid_config");
    assert!(e["message"].as_str().unwrap().contains("q > n/p"));

    let unknown = write_config(
        dir.path(),
        "unknown.toml",
        r#"schema = "qcrit-config/1"
[problem]
p = 2.0
colour = "red"
domain = { kind = "interval", a = 0.0, b = 1.0, n = 8 }
"#,
    );
    assert_eq!(qcrit(&["eigen", &unknown], dir.path()).status.code(), Some(2));

    let schema = write_config(
        dir.path(),
        "schema.toml",
        r#"schema = "qcrit-config/9"
[problem]
p = 2.0
domain = { kind = "interval", a = 0.0, b = 1.0, n = 8 }
"#,
    );
    assert_eq!(qcrit(&["eigen", &schema], dir.path()).status.code(), Some(2));
    let missing = dir.path().join("nope.toml");
    let o = qcrit(&["eigen", missing.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["code"], "io");
}

#[test]
fn unresolved_runs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // lambda1 < 0 contradicts a Green function: the verdict is inconclusive
    let green = write_config(
        dir.path(),
        "green.toml",
        r#"schema = "qcrit-config/1"
[problem]
p = 2.0
domain = { kind = "interval", a = 0.0, b = 1.0, n = 512 }
potential = { type = "const", c = -20.0 }
[green]
pole = [0.5, 0.0]
"#,
    );
    let o = qcrit(&["green", &green], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(report(&o)["results"]["verdict"], "inconclusive");
    assert_eq!(error_record(&o)["code"], "inconclusive");

    let solve = write_config(
        dir.path(),
        "solve.toml",
        r#"schema = "qcrit-config/1"
[problem]
p = 4.0
domain = { kind = "interval", a = 0.0, b = 1.0, n = 64 }
[solver]
max_iter = 1
[load]
g = { type = "const", c = 1.0 }
"#,
    );
    let o = qcrit(&["solve", &solve], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let e = error_record(&o);
    assert_eq!(e["code"], "non_convergence");
    assert!(e["context"]["iterations"].is_u64());
}

#[test]
fn lindqvist_suite_on_a_million_samples() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcrit(
        &["verify", "--suite", "lindqvist", "--samples", "1000000", "--seed", "42"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    let suite = &r["results"]["suites"][0];
    assert_eq!(suite["name"], "lindqvist");
    for row in suite["details"]["per_p"].as_array().unwrap() {
        assert!(row["min_gap"].as_f64().unwrap() >= -1e-12);
    }
    assert!(r["provenance"]["calibration_sha256"].as_str().unwrap().len() == 64);
    assert!(dir.path().join("qcrit-calibration.json").exists());
}

#[test]
fn verify_rejects_unknown_suites_and_bad_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let o = qcrit(&["verify", "--suite", "telepathy"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["code"], "unknown_suite");

    let cal = dir.path().join("cal.json");
    std::fs::write(&cal, "{\"body\": 1}").unwrap();
    let o = qcrit(
        &["verify", "--suite", "ellipticity", "--calibration", cal.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_record(&o)["code"], "invalid_calibration");
}

#[test]
fn out_flag_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let cfg = configs().join("solve_screened.toml");
    let o = qcrit(
        &["solve", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--timing"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("wall time"));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(r["results"]["max"].as_f64().unwrap() > 0.11);
    // timing stays out of the report
    assert!(!r.to_string().contains("wall"));
}
