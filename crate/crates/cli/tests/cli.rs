use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.json"))
}

fn flatcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatcs")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn cs_prints_a_json_report_and_exits_zero() {
    let path = scenario("u1_cs");
    let o = flatcs(&["cs", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["command"], "cs");
    assert_eq!(report["pass"], true);
    let value = report["records"][0]["value"].as_f64().unwrap();
    assert!((value - 4.0 * std::f64::consts::PI.powi(3)).abs() < 1e-9);
    assert!(stderr(&o).starts_with("PASS cs"));
}

#[test]
fn json_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let path = scenario("constant_degree");
    let o = flatcs(&["degree", "--scenario", path.to_str().unwrap(), "--json", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("PASS degree"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["records"][0]["name"], "degree");
}

#[test]
fn failed_checks_exit_one() {
    let path = scenario("u1_cs");
    let o = flatcs(&["cs", "--scenario", path.to_str().unwrap(), "--grid", "3", "--tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("FAIL cs"));
}

#[test]
fn parse_errors_exit_two_with_a_located_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"group": {"factors": ["su2"]}, "dim": 3, "grid": 8, "fields": {"A": "i*dx +"}, "checks": []}"#,
    )
    .unwrap();
    let o = flatcs(&["verify", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("fields.A:1:7") && err.contains("expected one of"), "{err}");
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"group": {"factors": ["u1"]}, "dim": 3, "grid": 8, "fields": {}, "checks": [], "gird": 4}"#)
        .unwrap();
    let o = flatcs(&["cs", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("gird"));
}

#[test]
fn normalize_needs_no_scenario() {
    let o = flatcs(&["normalize"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let names: Vec<_> = report["records"].as_array().unwrap().iter().map(|r| r["name"].clone()).collect();
    assert_eq!(names, ["haar_volume", "theta_integral", "lambda_star", "theta_basis"]);
}

#[test]
fn other_commands_need_a_scenario() {
    let o = flatcs(&["cs"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--scenario"));
}

#[test]
fn thread_count_does_not_change_the_report() {
    let path = scenario("verify_twisted_su2");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_flatcs"))
            .args(["verify", "--scenario", path.to_str().unwrap()])
            .env("FLATCS_THREADS", threads)
            .output()
            .unwrap()
    };
    let (one, four) = (run("1"), run("4"));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn invalid_thread_count_is_an_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_flatcs")).arg("normalize").env("FLATCS_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flatten_writes_the_optimizer_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("trace.csv");
    let path = scenario("flatten_twisted");
    let o = flatcs(&["flatten", "--scenario", path.to_str().unwrap(), "--log", log.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(log).unwrap();
    assert!(csv.lines().count() > 2);
}
