#![allow(dead_code)]

pub mod network;

use std::fmt::Write;

use btw_core::dsl::load;
use btw_core::fixtures::scenarios;
use btw_core::metamodel::ConceptRegistry;
use btw_core::model::WorkflowModel;
use btw_core::sim::{init_instance, Engine, RunSummary, Scenario, SimError, TraceEntry};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn loaded(text: &str) -> (ConceptRegistry, WorkflowModel) {
    load(text).unwrap_or_else(|d| panic!("{d:#?}\n{text}"))
}

pub fn run_text(
    model: &WorkflowModel,
    reg: &ConceptRegistry,
    scenario: &str,
    seed: u64,
    max_steps: u64,
) -> (Result<RunSummary, SimError>, Vec<TraceEntry>) {
    let sc = Scenario::from_jsonl(scenario, model).unwrap_or_else(|e| panic!("{e}\n{scenario}"));
    let mut e = init_instance(model, reg, sc, seed).unwrap_or_else(|e| panic!("{e:?}"));
    let r = e.run(max_steps);
    (r, e.trace().to_vec())
}

/// Same as [`run_text`] without validating the model first.
pub fn run_unchecked(
    model: &WorkflowModel,
    scenario: &str,
    seed: u64,
) -> (Result<RunSummary, SimError>, Vec<TraceEntry>) {
    let sc = Scenario::from_jsonl(scenario, model).unwrap_or_else(|e| panic!("{e}\n{scenario}"));
    let mut e = Engine::new_unchecked(model, sc, seed);
    let r = e.run(100_000);
    (r, e.trace().to_vec())
}

/// Inserts `line` just before the application arrives.
pub fn before_lodgement(base: &str, line: &str) -> String {
    let at = base.find("{\"t\":\"2024-03-01\"").expect("lodgement line");
    format!("{}{line}\n{}", &base[..at], &base[at..])
}

/// A road-closures scenario with random failures, overrides and aborts.
pub fn random_road_scenario(rng: &mut impl Rng) -> String {
    let base = *[scenarios::HAPPY, scenarios::REJECTION, scenarios::ROLLBACK].choose(rng).unwrap();
    let mut s = base.to_string();
    if rng.gen_bool(0.5) {
        let target =
            ["Store Application", "Application Entry", "Preparation", "Issue Title", "Close File"].choose(rng).unwrap();
        let count = rng.gen_range(1..=3);
        let line =
            format!(r#"{{"t":"2024-03-01","kind":"fail_start","target":"{target}","payload":{{"count":{count}}}}}"#);
        s = before_lodgement(&s, &line);
    }
    if rng.gen_bool(0.5) {
        let o = if rng.gen_bool(0.5) { "positive" } else { "negative" };
        let line =
            format!(r#"{{"t":0,"kind":"override","target":"Reject Application?","payload":{{"outcome":"{o}"}}}}"#);
        s = format!("{line}\n{s}");
    }
    if rng.gen_bool(0.3) {
        let day = rng.gen_range(6..=25);
        let _ = writeln!(s, r#"{{"t":"2024-03-{day:02}","kind":"nf_abort"}}"#);
    }
    s
}

/// A model whose root runs some timed processes alongside one exclusive
/// process, plus the names inside the exclusive subtree.
pub fn exclusive_model(rng: &mut impl Rng) -> (String, Vec<String>) {
    let k = rng.gen_range(2..=5);
    let mut s = String::from("scope {\n  service \"Svc\";\n  message \"Go\" { }\n}\n\nmodel {\n  process \"Root\" {\n");
    let mut names: Vec<String> = (0..k).map(|i| format!("P{i}")).collect();
    for n in &names {
        let _ = writeln!(s, "    process \"{n}\" duration {} hours;", rng.gen_range(0..4));
    }
    let mut inside = vec!["E".to_string()];
    if rng.gen_bool(0.5) {
        let _ = writeln!(
            s,
            "    exclusive process \"E\" {{\n      process \"E1\" duration {} hours;\n      process \"E2\" duration 1 hours;\n      initial \"E1\";\n      trigger \"E1\" -> \"E2\";\n    }}",
            rng.gen_range(0..3)
        );
        inside.extend(["E1".to_string(), "E2".to_string()]);
    } else {
        let _ = writeln!(s, "    exclusive process \"E\" duration {} hours;", rng.gen_range(0..4));
    }
    names.push("E".into());
    names.shuffle(rng);
    let initial: Vec<&String> = names.iter().filter(|_| rng.gen_bool(0.5)).collect();
    let initial = if initial.is_empty() { vec![&names[0]] } else { initial };
    for n in &initial {
        let _ = writeln!(s, "    initial \"{n}\";");
    }
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            if rng.gen_bool(0.3) {
                let _ = writeln!(s, "    trigger \"{}\" -> \"{}\";", names[i], names[j]);
            }
        }
    }
    s.push_str("  }\n}\n\nservice \"Svc\" {\n  on birth when msg_from(\"Go\") then trigger \"Root\";\n  birth -> death when process_end(\"Root\");\n}\n");
    (s, inside)
}

/// Scenario starting the root, with random start failures.
pub fn exclusive_scenario(rng: &mut impl Rng, inside: &[String]) -> String {
    let mut s = String::from("{\"t\":0,\"kind\":\"message\",\"target\":\"Go\"}\n");
    for name in ["P0", "P1"].into_iter().chain(inside.iter().map(String::as_str)) {
        if rng.gen_bool(0.2) {
            let _ = writeln!(
                s,
                r#"{{"t":0,"kind":"fail_start","target":"{name}","payload":{{"count":{}}}}}"#,
                rng.gen_range(1..3)
            );
        }
    }
    s
}
