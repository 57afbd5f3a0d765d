use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splca::fixtures;

const BIN: &str = env!("CARGO_BIN_EXE_splca");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const FAST: [&str; 4] = ["--iterations", "200000", "--stagnation", "20000"];

#[test]
fn convert_aircraft_header() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "a.fm", fixtures::AIRCRAFT);
    let prefix = dir.path().join("a");
    assert!(run(&["convert", s(&fm), "-o", s(&prefix)]).status.success());
    let model = fs::read_to_string(dir.path().join("a.model")).unwrap();
    assert_eq!(model, format!("3\n14\n{}\n", vec!["2"; 14].join(" ")));
    let constraints = fs::read_to_string(dir.path().join("a.constraints")).unwrap();
    let n: usize = constraints.lines().next().unwrap().parse().unwrap();
    assert_eq!(constraints.lines().count(), n + 1);
}

#[test]
fn convert_minimal_model() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "m.fm", "Solo\n");
    let out = run(&["convert", "-t", "2", s(&fm)]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("2\n1\n2\n"));
}

#[test]
fn model_header_sets_strength() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "p.fm", fixtures::PHONE);
    assert!(run(&["convert", "-t", "2", s(&fm), "-o", s(&dir.path().join("p"))]).status.success());
    let (model, cons) = (dir.path().join("p.model"), dir.path().join("p.constraints"));
    let arr = dir.path().join("p.ca");
    let mut args = vec!["generate", "--model", s(&model), "--constraints", s(&cons), "-o", s(&arr)];
    args.extend(FAST);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t=2"));
    // verify picks the strength up from the same header
    let out = run(&["verify", s(&arr), "--model", s(&model), "--constraints", s(&cons)]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("coverage: 100.00%"));
}

#[test]
fn generate_full_and_reduced_verify() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "a.fm", fixtures::AIRCRAFT);
    for extra in [None, Some("--no-reduce")] {
        let arr = dir.path().join("a.ca");
        let mut args = vec!["generate", "--fm", s(&fm), "--seed", "1", "-o", s(&arr)];
        args.extend(FAST);
        args.extend(extra);
        assert!(run(&args).status.success());
        let out = run(&["verify", s(&arr), "--fm", s(&fm)]);
        assert!(out.status.success(), "{}", stdout(&out));
        assert!(stdout(&out).contains("valid t-sets: 1875"));
    }
}

#[test]
fn verify_reports_missing_with_cap() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "a.fm", fixtures::AIRCRAFT);
    let arr = write(dir.path(), "one.ca", "1\n0 2 4 6 9 11 12 14 17 19 20 22 24 27\n");
    let out = run(&["verify", s(&arr), "--fm", s(&fm), "-t", "2", "--missing-cap", "3"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("missing (showing 3 of"), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("  ")).count(), 3);
}

#[test]
fn invalid_row_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "a.fm", fixtures::AIRCRAFT);
    // Aircraft deselected
    let arr = write(dir.path(), "bad.ca", "1\n1 2 4 6 9 11 12 14 17 19 20 22 24 27\n");
    let out = run(&["verify", s(&arr), "--fm", s(&fm)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reduce_text_report() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "a.fm", fixtures::AIRCRAFT);
    let text = stdout(&run(&["reduce", "--fm", s(&fm)]));
    assert!(text.contains("reduceable: 4"));
    assert!(text.contains("Rust = Metal"));
    assert!(text.contains("full 2912, reduced 960"));
    assert!(text.contains("reduction: 67.0%"));
}

#[test]
fn unsatisfiable_model_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "u.fm", "R\n  A: mandatory\nconstraint: !A\n");
    let out = run(&["generate", "--fm", s(&fm)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no valid product"));
}

#[test]
fn syntax_errors_carry_position() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "e.fm", "R\n  A: mandatroy\n");
    let out = run(&["reduce", "--fm", s(&fm)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn bench_two_runs_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "phone.fm", fixtures::PHONE);
    let csv = dir.path().join("runs.csv");
    let hist = dir.path().join("hist.csv");
    let mut args = vec!["bench", s(&fm), "--runs", "2", "-t", "2", "-o", s(&csv), "--histograms", s(&hist)];
    args.extend(FAST);
    let out = run(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("model,variant,seed,elapsed_ms,rows,n,m,tsets_full,tsets_reduced\n"));
    assert!(fs::read_to_string(&hist).unwrap().contains("tset_reduction_percent"));
    assert!(run(&["stats", s(&csv)]).status.success());
}

#[test]
fn bench_rejects_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let fm = write(dir.path(), "phone.fm", fixtures::PHONE);
    assert_eq!(run(&["bench", s(&fm), "--runs", "1"]).status.code(), Some(2));
}

#[test]
fn stats_on_identical_variants_is_not_significant() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("model,variant,seed,elapsed_ms,rows,n,m,tsets_full,tsets_reduced\n");
    for seed in 0..10 {
        for v in ["reduced", "full"] {
            csv += &format!("x,{v},{seed},{},10,12,4,1760,448\n", 20 + seed);
        }
    }
    let path = write(dir.path(), "same.csv", &csv);
    let out = run(&["stats", s(&path)]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().find(|l| l.starts_with("x ")).unwrap();
    assert!(!row.contains('*'), "{row}");
    assert!(text.contains("no information") || text.contains("carries no information"), "{text}");
}
