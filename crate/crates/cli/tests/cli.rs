use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinphonon"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("SPINPHONON_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn params_fig2_prints_reference_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["params", "fig2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    for line in [
        "g/2pi = 1 GHz",
        "g0/2pi = 1 MHz",
        "J/2pi = 10 GHz",
        "lambda/2pi = 0.1 MHz",
        "gamma/2pi = 15 MHz",
        "Gamma_m/2pi = 1 MHz",
    ] {
        assert!(s.lines().any(|l| l.starts_with(line)), "missing '{line}' in\n{s}");
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn verify_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--threads", "1", "verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("oracle_report.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let reports = report["reports"].as_array().unwrap();
    assert!(reports.len() >= 6);
    assert!(reports.iter().all(|r| r["passed"] == true));
}

#[test]
fn fig4_runs_its_gates_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["fig4", "--set", "t_end=2", "--set", "r=2", "--grid", "21"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let files: Vec<_> = stdout(&o).lines().map(String::from).collect();
    assert!(!files.is_empty());
    for f in &files {
        let text = std::fs::read_to_string(f).unwrap();
        assert!(text.contains("# oracle_digest: "), "{f}");
    }
}

#[test]
fn serial_and_parallel_output_agree() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["fig2", "--grid", "7"];
    let oa = run(a.path(), &[&["--threads", "1"], &args[..]].concat());
    let ob = run(b.path(), &args);
    assert!(oa.status.success() && ob.status.success());
    for name in ["fig2a.csv", "fig2b.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn pinned_override_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["fig3", "--set", "g0=0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.lines().any(|l| l.starts_with("error[config]: ")), "{err}");
}

#[test]
fn malformed_flags_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["fig3", "--set", "r"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[usage]: "));
}

#[test]
fn custom_config_errors_and_success() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let text = r#"
[model]
kind = "jc"
truncations = [4]
coupling = 0.1

[params]
units = { base = "g" }
g = 1.0
gamma = 0.02

[evolution]
t_end = 5.0
n_samples = 11
initial = [1, 0]

[output]
path = "jc.csv"
"#;
    std::fs::write(&cfg, text).unwrap();
    let o = run(dir.path(), &["custom", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("jc.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("t,")));

    std::fs::write(&cfg, text.replace("gamma = 0.02", "gamma = 0.02\ncolour = 1")).unwrap();
    let o = run(dir.path(), &["custom", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
}
