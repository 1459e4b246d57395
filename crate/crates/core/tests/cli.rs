use std::collections::BTreeSet;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use hitfuzz::fuzzer::read_corpus;
use hitfuzz::oracle::{read_profile, TestOutcomeKind};
use hitfuzz::service::ScriptedClient;

fn hitfuzz(args: &[&str], data_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitfuzz"))
        .args(args)
        .env("HITFUZZ_DATA_DIR", data_dir)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], data_dir: &Path) -> String {
    let out = hitfuzz(args, data_dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_reports_the_full_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["generate"], dir.path());
    assert!(out.contains("scenario tests: 160524 (geofence combinations: 13)"), "{out}");
}

#[test]
fn sampled_corpus_with_timing_fuzz() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("r.jsonl");
    ok(&["generate", "--sample", "25", "--seed", "9", "--max-delay", "5", "--out", s(&c)], dir.path());
    let (header, tests) = read_corpus(BufReader::new(std::fs::File::open(&c).unwrap())).unwrap();
    let header = header.unwrap();
    assert_eq!(header.count, 25);
    assert_eq!(header.seed, Some(9));
    assert_eq!(tests.len(), 25);
    assert!(tests.iter().flat_map(|t| t.hits()).all(|(_, h)| (0.0..=5.0).contains(&h.delay_s)));
    assert_eq!(tests[3].test_id, "R9-000003");
}

#[test]
fn pipeline_on_the_subgrid_emits_an_l2_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["generate", "--scenario", "l1-subgrid", "--out", s(&p("c.jsonl"))], dir.path());
    ok(
        &["run-l1", "--corpus", s(&p("c.jsonl")), "--out", s(&p("p.csv")), "--logs", s(&p("logs")), "--parallel", "4"],
        dir.path(),
    );
    ok(&["blueprint", "--wind", "Medium Northerly", "--out", s(&p("bp.log"))], dir.path());
    ok(
        &["analyze", "--profile", s(&p("p.csv")), "--blueprint", s(&p("bp.log")), "--logs", s(&p("logs")), "--out", s(&p("a.csv"))],
        dir.path(),
    );
    assert_eq!(std::fs::read(p("p.csv")).unwrap(), std::fs::read(p("a.csv")).unwrap());
    let summary = ok(
        &[
            "downselect", "--profile", s(&p("a.csv")), "--corpus", s(&p("c.jsonl")), "--budget", "25:30", "--out", s(&p("l2.jsonl")),
        ],
        dir.path(),
    );
    assert!(summary.contains("selected"), "{summary}");
    let (_, l2) = read_corpus(BufReader::new(std::fs::File::open(p("l2.jsonl")).unwrap())).unwrap();
    assert!((25..=30).contains(&l2.len()), "{}", l2.len());
    let rows = read_profile(std::fs::File::open(p("a.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 720);
    assert!(rows.iter().any(|r| r.outcome() == TestOutcomeKind::ValidNominal));
    assert!(rows.iter().any(|r| r.outcome() == TestOutcomeKind::ValidAbnormal));
}

#[test]
fn downselect_exact_budget_on_nine_clusters() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["generate", "--scenario", "l1-subgrid", "--out", s(&p("c.jsonl"))], dir.path());
    ok(&["run-l1", "--corpus", s(&p("c.jsonl")), "--out", s(&p("p.csv"))], dir.path());
    ok(
        &[
            "downselect", "--profile", s(&p("p.csv")), "--k", "9", "--budget", "10:10", "--out", s(&p("ids.txt")), "--clustered",
            s(&p("cl.csv")),
        ],
        dir.path(),
    );
    let ids: Vec<String> = std::fs::read_to_string(p("ids.txt")).unwrap().lines().map(String::from).collect();
    assert_eq!(ids.len(), 10);
    let rows = read_profile(std::fs::File::open(p("cl.csv")).unwrap()).unwrap();
    let nonempty: BTreeSet<usize> = rows.iter().filter_map(|r| r.cluster).collect();
    let covered: BTreeSet<usize> = rows.iter().filter(|r| ids.contains(&r.record.test_id)).filter_map(|r| r.cluster).collect();
    assert_eq!(covered, nonempty);
    assert!(nonempty.len() <= 9);
}

#[test]
fn ledger_commands_use_the_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/ledger_geofence.toml");
    ok(&["ledger", "add", s(&fixture)], dir.path());
    assert!(dir.path().join("ledger/GEOFENCE-FLYAWAY.toml").exists());

    let gate = hitfuzz(&["ledger", "gate", "GEOFENCE-FLYAWAY"], dir.path());
    assert_eq!(gate.status.code(), Some(2));
    let text = String::from_utf8(gate.stdout).unwrap();
    assert!(text.trim_end().ends_with("Flight readiness for L3: NOT READY FOR FIELD-TESTING"));

    let report = ok(&["ledger", "report", "GEOFENCE-FLYAWAY"], dir.path());
    assert!(report.contains("HIGH") && report.contains("back-logged"));

    for m in ["1.1", "1.2", "2.1", "2.2", "3.1", "3.2"] {
        ok(&["ledger", "set-status", "GEOFENCE-FLYAWAY", m, "passed"], dir.path());
    }
    let gate = ok(&["ledger", "gate", "GEOFENCE-FLYAWAY"], dir.path());
    assert!(gate.trim_end().ends_with("Flight readiness for L3: READY FOR FIELD-TESTING"));
    let json = ok(&["ledger", "export", "GEOFENCE-FLYAWAY"], dir.path());
    assert!(json.contains("\"passed\""));
    assert!(ok(&["ledger", "list"], dir.path()).starts_with("GEOFENCE-FLYAWAY\t"));
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["run-l1", "--corpus", "/nonexistent/c.jsonl", "--out", "/nonexistent/p.csv"],
        vec!["blueprint", "--mission", "NOWHERE", "--out", "x.log"],
        vec!["ledger", "gate", "MISSING"],
        vec!["downselect", "--profile", "/nonexistent.csv", "--out", "x"],
    ] {
        let out = hitfuzz(&args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("hitfuzz: "), "{args:?}");
    }
}

#[test]
fn serve_l2_runs_a_corpus_for_a_scripted_console() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    ok(&["generate", "--scenario", "l1-subgrid", "--sample", "2", "--seed", "3", "--out", s(&p("c.jsonl"))], dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_hitfuzz"))
        .args(["serve-l2", "--corpus", s(&p("c.jsonl")), "--port", "0", "--lockstep", "--max-sessions", "1"])
        .args(["--out", s(&p("l2.csv")), "--transcript", s(&p("t.jsonl"))])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();
    let log = ScriptedClient::exact().run(addr.as_str()).unwrap();
    assert_eq!(log.kinds().iter().filter(|k| **k == "TestResult").count(), 2);
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("completed 2"));
    assert_eq!(read_profile(std::fs::File::open(p("l2.csv")).unwrap()).unwrap().len(), 2);
    assert!(std::fs::read_to_string(p("t.jsonl")).unwrap().lines().count() > 10);
}
