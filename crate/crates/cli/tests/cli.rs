use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use btw_core::fixtures::{scenarios, AXIOMS, ROAD_CLOSURES};

#[path = "support/dot_grammar.rs"]
mod dot_grammar;

struct Dir {
    dir: tempfile::TempDir,
}

impl Dir {
    fn new() -> Self {
        Dir { dir: tempfile::tempdir().unwrap() }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn btw(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btw"))
        .args(args.iter().map(|a| a.as_ref()))
        .env_remove("BTW_COLOR")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn axiom(code: &str) -> (&'static str, &'static str) {
    let (_, pass, fail) = AXIOMS.iter().find(|a| a.0 == code).unwrap();
    (pass, fail)
}

#[test]
fn validate_exit_codes() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    assert_eq!(code(&btw(&[&"validate", &road])), 0);

    let bad = d.file("bad.btw", axiom("V003").1);
    let o = btw(&[&"validate", &bad]);
    assert_eq!(code(&o), 1);
    let lines: Vec<_> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines.len(), 1, "{lines:?}");
    assert!(lines[0].contains("[V003]"));

    assert_eq!(code(&btw(&[&"validate", &d.path("missing.btw")])), 3);
}

#[test]
fn warnings_do_not_fail_validation() {
    let d = Dir::new();
    let spec = d.file("w.btw", axiom("V012").1);
    let o = btw(&[&"validate", &spec, &"--format", &"json"]);
    assert_eq!(code(&o), 0);
    let records: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(records[0]["code"], "V012");
    assert_eq!(records[0]["severity"], "warning");
}

#[test]
fn strict_allocation_flag() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    let o = btw(&[&"validate", &road, &"--strict-allocation"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("[V015]"));
}

#[test]
fn simulate_happy_path() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    let sc = d.file("happy.jsonl", scenarios::HAPPY);
    let trace = d.path("trace.jsonl");
    let o = btw(&[&"simulate", &road, &"--scenario", &sc, &"--trace", &trace]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("final state: Title issued"));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.lines().last().unwrap().contains("\"Death\""));
}

#[test]
fn simulate_json_summary() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    let sc = d.file("rej.jsonl", scenarios::REJECTION);
    let o = btw(&[&"simulate", &road, &"--scenario", &sc, &"--format", &"json"]);
    assert_eq!(code(&o), 0);
    let s: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(s["final_state"], "Application rejected");
    assert_eq!(s["outcome"], "death");
}

#[test]
fn simulate_unfinished_runs() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    let o = btw(&[&"simulate", &road]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("final state: birth"));
    let sc = d.file("happy.jsonl", scenarios::HAPPY);
    assert_eq!(code(&btw(&[&"simulate", &road, &"--scenario", &sc, &"--max-steps", &"5"])), 2);
}

#[test]
fn simulate_rejects_bad_inputs() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    let invalid = d.file("bad.btw", axiom("V002").1);
    assert_eq!(code(&btw(&[&"simulate", &invalid])), 1);
    let sc = d.file("bad.jsonl", "{\"t\":0,\"kind\":\"nonsense\"}\n");
    assert_eq!(code(&btw(&[&"simulate", &road, &"--scenario", &sc])), 3);
    assert_eq!(code(&btw(&[&"simulate", &road, &"--scenario", &d.path("none.jsonl")])), 3);
    let nowhere = d.path("no/such/dir/trace.jsonl");
    assert_eq!(code(&btw(&[&"simulate", &road, &"--trace", &nowhere])), 3);
}

#[test]
fn repeated_runs_write_identical_traces() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    let sc = d.file("rb.jsonl", scenarios::ROLLBACK);
    let (a, b) = (d.path("a.jsonl"), d.path("b.jsonl"));
    for t in [&a, &b] {
        assert_eq!(code(&btw(&[&"simulate", &road, &"--scenario", &sc, &"--seed", &"7", &"--trace", t])), 0);
    }
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn explain_codes() {
    let o = btw(&[&"explain", &"V001"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("V001: "));
    let o = btw(&[&"explain", &"v018", &"--format", &"json"]);
    let j: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(j["code"], "V018");
    assert_eq!(code(&btw(&[&"explain", &"V999"])), 3);
}

fn entity_nodes(dot: &str) -> usize {
    dot.lines().filter(|l| l.trim_start().starts_with('e') && l.contains("[label=") && !l.contains("->")).count()
}

fn declarations(spec: &str) -> usize {
    spec.lines()
        .map(str::trim_start)
        .filter(|l| ["process \"", "decision \"", "synchroniser \""].iter().any(|k| l.starts_with(k)))
        .count()
}

#[test]
fn export_graph_one_process() {
    let d = Dir::new();
    let spec = d.file("one.btw", "scope { }\nmodel { process \"Only\"; }\n");
    let o = btw(&[&"export-graph", &spec]);
    assert_eq!(code(&o), 0);
    let dot = stdout(&o);
    assert_eq!(entity_nodes(&dot), 1);
    assert_eq!(dot.matches("->").count(), 0);
    dot_grammar::check(&dot).unwrap();
}

#[test]
fn export_graph_road_closures() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    let out = d.path("road.dot");
    assert_eq!(code(&btw(&[&"export-graph", &road, &"--out", &out])), 0);
    let dot = fs::read_to_string(out).unwrap();
    assert_eq!(entity_nodes(&dot), declarations(ROAD_CLOSURES));
    dot_grammar::check(&dot).unwrap();
    assert!(dot.contains("subgraph cluster_service0"));
    assert!(dot.contains("style=dashed"));
}

#[test]
fn fmt_is_a_fixed_point() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    let once = stdout(&btw(&[&"fmt", &road]));
    let again = d.file("again.btw", &once);
    assert_eq!(stdout(&btw(&[&"fmt", &again])), once);
    assert_eq!(code(&btw(&[&"validate", &again])), 0);
}

#[test]
fn commands_leave_the_spec_alone() {
    let d = Dir::new();
    let road = d.file("road.btw", ROAD_CLOSURES);
    let sc = d.file("happy.jsonl", scenarios::HAPPY);
    for args in
        [vec!["validate"], vec!["fmt"], vec!["export-graph"], vec!["simulate", "--scenario", sc.to_str().unwrap()]]
    {
        let mut all: Vec<&dyn AsRef<std::ffi::OsStr>> = vec![&args[0], &road];
        all.extend(args[1..].iter().map(|a| a as &dyn AsRef<std::ffi::OsStr>));
        btw(&all);
        assert_eq!(fs::read_to_string(&road).unwrap(), ROAD_CLOSURES);
    }
}

#[test]
fn usage_errors_exit_3() {
    assert_eq!(code(&btw(&[&"frobnicate"])), 3);
    assert_eq!(code(&btw(&[&"simulate"])), 3);
    assert_eq!(code(&btw(&[&"simulate", &"x.btw", &"--seed", &"minus"])), 3);
    assert_eq!(code(&btw(&[&"--help"])), 0);
}

#[test]
fn color_is_opt_in() {
    let d = Dir::new();
    let bad = d.file("bad.btw", axiom("V003").1);
    let plain = btw(&[&"validate", &bad]);
    assert!(!stdout(&plain).contains('\x1b'));
    let colored =
        Command::new(env!("CARGO_BIN_EXE_btw")).arg("validate").arg(&bad).env("BTW_COLOR", "1").output().unwrap();
    assert!(String::from_utf8(colored.stdout).unwrap().contains("\x1b[1;31merror"));
}
