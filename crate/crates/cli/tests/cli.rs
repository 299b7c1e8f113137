use std::fs;
use std::process::Command;

fn dyngt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dyngt"))
}

#[test]
fn run_writes_csvs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"population": 200, "community_size": 20, "p_init": 0.03, "q1": 0.03, "q2": 0.001, "horizon": 8}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = dyngt()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--strategy", "no_testing,rnd_mean", "--out"])
        .arg(&out)
        .env("DYNGT_TRAJECTORIES", "3")
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["trajectories"], 3);
    let csv = fs::read_to_string(out.join("rnd_mean.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);
    assert!(out.join("no_testing.csv").exists());
}

#[test]
fn bad_config_reports_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"populaton": 10}"#).unwrap();
    let output = dyngt()
        .args(["run", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("unknown config key `populaton`"));
}

#[test]
fn bounds_and_design_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let priors = dir.path().join("p.txt");
    fs::write(&priors, "0.02 ".repeat(1000)).unwrap();
    let output = dyngt()
        .args(["bounds", "--priors"])
        .arg(&priors)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8(output.stdout).unwrap();
    assert!(text.contains("entropy_lb           141.440543"));

    let output = dyngt()
        .args(["design", "--strategy", "cca", "--tests", "30", "--priors"])
        .arg(&priors)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert_eq!(
        String::from_utf8(output.stdout).unwrap().lines().count(),
        30
    );
}

#[test]
fn verify_prints_one_line_per_suite() {
    let output = dyngt()
        .args([
            "verify",
            "--instances",
            "20",
            "--trajectories",
            "2",
            "--horizon",
            "10",
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stdout)
    );
    let text = String::from_utf8(output.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 9);
}
