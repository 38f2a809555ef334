use std::io::Write;
use std::process::{Command, Output};

use minkowski_tasks::scenario::{catalog_names, catalog_source, parse_machine};

fn mtasks(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtasks")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scenario_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".scn").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

#[test]
fn lists_the_catalog() {
    let o = mtasks(&["catalog", "--list"]);
    assert_eq!(o.status.code(), Some(0));
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(names, catalog_names());
}

#[test]
fn whole_catalog_passes() {
    let o = mtasks(&["catalog"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("PASS:").count(), catalog_names().len());
}

#[test]
fn teleport_scenario_text() {
    let o = mtasks(&["catalog", "sec33_teleport"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("success = 1.000000"));
    assert!(out.contains("verdict: feasible (classical_routing)"));
}

#[test]
fn unknown_catalog_name_is_a_usage_error() {
    let o = mtasks(&["catalog", "fig1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown catalog scenario"));
}

#[test]
fn bad_flag_value_is_a_usage_error() {
    let f = scenario_file(catalog_source("fig2_signalling").unwrap());
    let o = mtasks(&["simulate", f.path().to_str().unwrap(), "--mode", "fast"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn parse_errors_are_positioned() {
    let f = scenario_file("[points]\nP1 = (0; 0)\n[foo]\n");
    let o = mtasks(&["check", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3, column 1"), "{}", stderr(&o));

    let empty = scenario_file("");
    let o = mtasks(&["check", empty.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing required section [points]"));
}

#[test]
fn missing_file_is_a_usage_error() {
    let o = mtasks(&["check", "/nonexistent/x.scn"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mismatch_exits_one_with_a_failure_table() {
    let text = catalog_source("fig2_signalling").unwrap().replace("routing expect=feasible", "routing expect=infeasible");
    let f = scenario_file(&text);
    let o = mtasks(&["check", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("failures:"));
    assert!(out.contains("routing expect=infeasible"));
}

#[test]
fn check_skips_simulations() {
    let f = scenario_file(catalog_source("fig2_signalling").unwrap());
    let o = mtasks(&["check", f.path().to_str().unwrap(), "--format", "machine"]);
    assert_eq!(o.status.code(), Some(0));
    let r = parse_machine(&stdout(&o)).unwrap();
    assert_eq!(r.results.len(), 1);
    assert!(r.results[0].verdict.is_some());
}

#[test]
fn simulate_is_seeded_and_machine_readable() {
    let f = scenario_file(catalog_source("fig3_bell").unwrap());
    let path = f.path().to_str().unwrap();
    let args = ["--format", "machine", "simulate", path, "--mode", "mc", "--trials", "500", "--seed", "3"];
    let a = mtasks(&args);
    let b = mtasks(&args);
    assert_eq!(a.stdout, b.stdout);
    let r = parse_machine(&stdout(&a)).unwrap();
    assert_eq!(r.seed, 3);
    assert!(r.results.iter().all(|e| e.simulation.is_some()));
    let c = mtasks(&["--format", "machine", "simulate", path, "--mode", "mc", "--trials", "500", "--seed", "4"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn simulate_without_requests_runs_every_strategy() {
    let text = catalog_source("fig2_signalling").unwrap();
    let cut = text.find("[analyze]").unwrap();
    let f = scenario_file(&text[..cut]);
    let o = mtasks(&["simulate", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("simulate strategy=relay"));
    assert!(out.contains("simulate strategy=guess"));
}

#[test]
fn resolution_flag_is_accepted() {
    let o = mtasks(&["--resolution", "16", "catalog", "sec33_teleport"]);
    assert_eq!(o.status.code(), Some(0));
}
