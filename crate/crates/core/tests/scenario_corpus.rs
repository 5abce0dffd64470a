use std::fs;
use std::path::PathBuf;

use flatcs::scenario::{run, Command, RunOptions, Scenario};

fn corpus() -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    assert!(!files.is_empty());
    files
        .into_iter()
        .map(|p| (p.file_stem().unwrap().to_string_lossy().into_owned(), fs::read_to_string(p).unwrap()))
        .collect()
}

fn load(name: &str) -> Scenario {
    let (_, text) = corpus().into_iter().find(|(n, _)| n == name).unwrap();
    Scenario::parse(&text).unwrap()
}

#[test]
fn every_scenario_parses_and_round_trips() {
    for (name, text) in corpus() {
        let s = Scenario::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(s.id, name, "file name and id agree");
        let again = Scenario::parse(&s.to_text()).unwrap();
        assert_eq!(again.structure(), s.structure(), "{name}");
        assert_eq!(again.to_text(), s.to_text(), "{name}");
        assert!(s.warnings.is_empty(), "{name}: {:?}", s.warnings);
    }
}

#[test]
fn quick_scenarios_pass() {
    for (name, command) in [
        ("u1_cs", Command::Cs),
        ("u1_beltrami", Command::Cs),
        ("constant_degree", Command::Degree),
        ("bump_degree", Command::Degree),
        ("grad_su2", Command::Grad),
        ("verify_twisted_su2", Command::Verify),
    ] {
        let report = run(command, &load(name), &RunOptions::default()).unwrap();
        assert!(report.pass, "{name}: {}", report.to_json());
    }
}

#[test]
fn reports_are_reproducible() {
    let s = load("verify_twisted_su2");
    let a = run(Command::Verify, &s, &RunOptions::default()).unwrap().to_json();
    let b = run(Command::Verify, &s, &RunOptions::default()).unwrap().to_json();
    assert_eq!(a, b);
}

#[test]
fn grid_override_is_recorded() {
    let s = load("u1_cs");
    let opts = RunOptions { grid: Some(20), ..RunOptions::default() };
    let report = run(Command::Cs, &s, &opts).unwrap();
    assert_eq!(report.quadrature.grid, 20);
    assert!(report.pass);
}
