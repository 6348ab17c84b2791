use std::path::Path;
use std::process::{Command, Output};

fn solenoid(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solenoid")).args(args).arg("--out").arg(out).output().unwrap()
}

fn with_config(cmd: &str, json: &str, dir: &Path) -> Output {
    let cfg = dir.join(format!("{cmd}.json"));
    std::fs::write(&cfg, json).unwrap();
    solenoid(&[cmd, "--config", cfg.to_str().unwrap()], &dir.join(cmd))
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn denjoy_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = solenoid(&["denjoy"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "report.json")).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["birkhoff"]["labels"].as_array().unwrap().len(), 10);
    assert!(read(dir.path(), "birkhoff.csv").starts_with("observable,spread,mean\n"));
}

#[test]
fn rational_rotation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config("denjoy", r#"{"rho": 0.4}"#, dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rational rotation number"));
}

#[test]
fn unknown_and_malformed_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(with_config("realize", r#"{"klass": [1, 0]}"#, dir.path()).status.code(), Some(2));
    assert_eq!(with_config("realize", "{", dir.path()).status.code(), Some(2));
    assert_eq!(with_config("realize", r#"{"class": [0, 0]}"#, dir.path()).status.code(), Some(2));
    let missing = solenoid(&["levelset", "--config", "/nonexistent/cfg.json"], dir.path());
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn failed_invariant_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config("leaf-limit", r#"{"distance_tolerance": 1e-9}"#, dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("leaf-limit"), "report.json")).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn realize_reports_the_class() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config("realize", r#"{"class": [0.3, 0.7]}"#, dir.path());
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&read(&dir.path().join("realize"), "report.json")).unwrap();
    let achieved: Vec<f64> =
        report["achieved_class"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().parse().unwrap()).collect();
    assert!((achieved[0] - 0.3).abs() <= 1e-3 && (achieved[1] - 0.7).abs() <= 1e-3);
    assert!(read(&dir.path().join("realize"), "current.csv").starts_with("index,label,pairing\n"));
}

#[test]
fn leaf_limit_table_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = solenoid(&["leaf-limit"], dir.path());
    assert!(out.status.success());
    let csv = read(dir.path(), "leaf_limit.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("R,leaf_length,cap_ratio,weak_distance"));
    let d: Vec<f64> = lines.map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert_eq!(d.len(), 3);
    assert!(d.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn levelset_writes_certificate_and_contours() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"certificate": {"grid_res": 128, "exclusion_res": 512}}"#;
    let out = with_config("levelset", cfg, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let d = dir.path().join("levelset");
    assert!(read(&d, "contours.csv").starts_with("value,weight,contour,vertex,x,y\n"));
    assert!(read(&d, "entries.csv").starts_with("index,label,direct,solenoid,lebesgue,observed,budget\n"));
    let report: serde_json::Value = serde_json::from_str(&read(&d, "certificate.json")).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn approximate_without_exact_part() {
    let dir = tempfile::tempdir().unwrap();
    let out = with_config("approximate", r#"{"beta": [], "approximate": {"ue_iterations": 10000}}"#, dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(read(&dir.path().join("approximate"), "entries.csv").starts_with("index,label,output,target,abs_diff\n"));
}

#[test]
fn threads_flag_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = solenoid(&["realize", "--threads", "1", "--verbose"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("wrote"));
}
