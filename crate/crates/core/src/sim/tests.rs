use super::*;
use crate::dsl::load;
use crate::expr::Value;
use crate::fixtures::{scenarios, ROAD_CLOSURES};
use crate::metamodel::ConceptRegistry;
use crate::model::WorkflowModel;

fn road() -> (ConceptRegistry, WorkflowModel) {
    load(ROAD_CLOSURES).unwrap()
}

fn engine<'m>(m: &'m WorkflowModel, reg: &ConceptRegistry, sc: &str) -> Engine<'m> {
    let sc = Scenario::from_jsonl(sc, m).unwrap();
    init_instance(m, reg, sc, 0).unwrap()
}

fn states(e: &Engine) -> Vec<String> {
    e.state.service.history.iter().map(|t| t.to.to_string()).collect()
}

fn status(e: &Engine) -> Value {
    e.state.snapshot.records("Applications")[0]["status"].clone()
}

fn position(e: &Engine, kind: TraceKind, subject: &str) -> usize {
    e.trace().iter().position(|t| t.is(kind, subject)).unwrap_or_else(|| panic!("no {kind:?} {subject}"))
}

fn with_line(base: &str, line: &str) -> String {
    format!("{base}{line}\n")
}

/// Inserts `line` just before the application arrives.
fn before_lodgement(base: &str, line: &str) -> String {
    let at = base.find("{\"t\":\"2024-03-01\"").unwrap();
    format!("{}{line}\n{}", &base[..at], &base[at..])
}

#[test]
fn happy_path_issues_title() {
    let (reg, m) = road();
    let mut e = engine(&m, &reg, scenarios::HAPPY);
    let r = e.run(10_000).unwrap();
    assert_eq!(r.final_state, "Title issued");
    assert_eq!(states(&e), ["Lodged", "Initial review passed", "Title issued", "death"]);
    assert_eq!(status(&e), Value::Text("approved".into()));
    assert_eq!(e.state.snapshot.records("Titles").len(), 1);
    assert_eq!(e.trace().last().unwrap().kind, TraceKind::Death);
    assert!(e.trace().windows(2).all(|w| w[0].seq < w[1].seq && w[0].clock <= w[1].clock));
}

#[test]
fn rejection_uses_the_override() {
    let (reg, m) = road();
    let mut e = engine(&m, &reg, scenarios::REJECTION);
    assert_eq!(e.run(10_000).unwrap().final_state, "Application rejected");
    let d = &e.trace()[position(&e, TraceKind::DecisionOutcome, "Reject Application?")];
    assert_eq!(d.detail.as_deref(), Some("override"));
    let d = &e.trace()[position(&e, TraceKind::DecisionOutcome, "Initial review passed?")];
    assert_eq!(d.outcome, Some(crate::dsl::ast::Outcome::Negative));
}

#[test]
fn rollback_compensates_in_reverse() {
    let (reg, m) = road();
    let mut e = engine(&m, &reg, scenarios::ROLLBACK);
    assert_eq!(e.run(10_000).unwrap().final_state, "Application rejected");
    let seek = position(&e, TraceKind::CompensationStarted, "Seek Views");
    let prep = position(&e, TraceKind::CompensationStarted, "Preparation");
    assert!(seek < prep);
    assert!(e.trace().iter().all(|t| !t.is(TraceKind::CompensationStarted, "Site Inspection")));
    assert_eq!(status(&e), Value::Text("lodged".into()));
    assert!(e.state.snapshot.records("Views").is_empty());
    let withdrawals = e.trace().iter().filter(|t| t.is(TraceKind::MessageSent, "Notice of Closure Withdrawal"));
    assert_eq!(withdrawals.count(), 1);
}

#[test]
fn same_seed_same_trace() {
    let (reg, m) = road();
    let mut a = engine(&m, &reg, scenarios::HAPPY);
    let mut b = engine(&m, &reg, scenarios::HAPPY);
    a.run(10_000).unwrap();
    b.run(10_000).unwrap();
    assert_eq!(a.trace(), b.trace());
    assert_eq!(to_jsonl(a.trace()), to_jsonl(b.trace()));
}

#[test]
fn checkpoint_resumes_identically() {
    let (reg, m) = road();
    let mut whole = engine(&m, &reg, scenarios::ROLLBACK);
    whole.run(10_000).unwrap();

    let mut first = engine(&m, &reg, scenarios::ROLLBACK);
    for _ in 0..25 {
        first.step().unwrap();
    }
    let text = first.checkpoint();
    let mut second = Engine::restore(&m, &text).unwrap();
    second.run(10_000).unwrap();
    let mut joined = first.trace().to_vec();
    joined.extend_from_slice(second.trace());
    assert_eq!(joined, whole.trace());
    assert_eq!(second.state, whole.state);
}

#[test]
fn checkpoint_rejects_other_models_and_versions() {
    let (reg, m) = road();
    let e = engine(&m, &reg, scenarios::HAPPY);
    let mut json: serde_json::Value = serde_json::from_str(&e.checkpoint()).unwrap();
    json["version"] = 99.into();
    assert!(matches!(Engine::restore(&m, &json.to_string()), Err(SimError::Checkpoint(_))));
    let (_, other) = load(crate::fixtures::AXIOMS[0].1).unwrap();
    assert!(matches!(Engine::restore(&other, &e.checkpoint()), Err(SimError::Checkpoint(_))));
}

#[test]
fn filing_failures_reach_the_contingency() {
    let (reg, m) = road();
    let sc = before_lodgement(
        scenarios::HAPPY,
        r#"{"t":"2024-03-01","kind":"fail_start","target":"Store Application","payload":{"count":2}}"#,
    );
    let mut e = engine(&m, &reg, &sc);
    assert_eq!(e.run(10_000).unwrap().final_state, "Title issued");
    let redo = position(&e, TraceKind::RedoAttempt, "Store Application");
    let cont = position(&e, TraceKind::ContingencyFired, "Manual Filing");
    assert!(redo < cont);
    assert!(e.trace().iter().any(|t| t.is(TraceKind::EntityCompleted, "Manual Filing")));
    assert!(e.trace().iter().all(|t| !t.is(TraceKind::EntityStarted, "Store Application")));
}

#[test]
fn failed_execution_is_undone_and_redone() {
    let (reg, m) = road();
    let sc =
        with_line(scenarios::HAPPY, r#"{"t":"2024-03-16T12:00:00","kind":"f_abort","target":"Effect Offer Approval"}"#);
    let mut e = engine(&m, &reg, &sc);
    assert_eq!(e.run(10_000).unwrap().final_state, "Title issued");
    let undo = position(&e, TraceKind::UndoApplied, "Effect Offer Approval");
    let redo = position(&e, TraceKind::RedoAttempt, "Effect Offer Approval");
    assert!(undo < redo);
    let starts = e.trace().iter().filter(|t| t.is(TraceKind::EntityStarted, "Effect Offer Approval")).count();
    assert_eq!(starts, 2);
    assert_eq!(status(&e), Value::Text("approved".into()));
}

fn gazetted_on(date: &str) -> String {
    scenarios::HAPPY.replace("2024-03-12", date)
}

#[test]
fn late_gazettal_blocks_site_inspection() {
    let (reg, m) = road();
    let mut e = engine(&m, &reg, &gazetted_on("2024-06-01"));
    assert_eq!(e.run(10_000).unwrap().final_state, "Application rejected");
    let v = &e.trace()[position(&e, TraceKind::TemporalViolation, "Site Inspection")];
    assert_eq!(v.detail.as_deref(), Some("pre"));
}

#[test]
fn early_gazettal_breaks_seek_views() {
    let (reg, m) = road();
    let mut e = engine(&m, &reg, &gazetted_on("2024-02-01"));
    assert_eq!(e.run(10_000).unwrap().final_state, "Application rejected");
    let v = &e.trace()[position(&e, TraceKind::TemporalViolation, "Seek Views")];
    assert_eq!(v.detail.as_deref(), Some("post"));
}

#[test]
fn budget_and_termination() {
    let (reg, m) = road();
    let mut e = engine(&m, &reg, scenarios::HAPPY);
    assert_eq!(e.run(3), Err(SimError::BudgetExhausted { steps: 3 }));
    e.run(10_000).unwrap();
    assert!(e.is_dead());
    assert_eq!(e.step(), Err(SimError::Terminated));
}

#[test]
fn nothing_to_do_is_stuck() {
    let (reg, m) = road();
    let mut e = engine(&m, &reg, "");
    assert_eq!(e.run(100), Err(SimError::StuckState { state: "birth".into() }));
}

#[test]
fn invalid_models_do_not_start() {
    let (_, _, fail) = crate::fixtures::AXIOMS[1];
    let (reg, m) = load(fail).unwrap();
    let r = init_instance(&m, &reg, Scenario::default(), 0);
    assert!(matches!(r, Err(SimError::ModelInvalid(d)) if d.iter().all(|d| d.code == "V002")));
}

#[test]
fn scenario_checks() {
    let (_, m) = road();
    let bad = [
        "{\"t\":5,\"kind\":\"clock\"}\n{\"t\":4,\"kind\":\"clock\"}",
        r#"{"t":0,"kind":"f_abort","target":"Nobody"}"#,
        r#"{"t":0,"kind":"message","target":"Nothing"}"#,
        r#"{"t":0,"kind":"override","target":"Preparation","payload":{"outcome":"positive"}}"#,
        r#"{"t":0,"kind":"explode"}"#,
        r#"{"t":"yesterday","kind":"clock"}"#,
    ];
    for text in bad {
        assert!(Scenario::from_jsonl(text, &m).is_err(), "{text}");
    }
    let e = Scenario::from_jsonl(bad[0], &m).unwrap_err();
    assert_eq!(e.line, 2);
    for text in [scenarios::HAPPY, scenarios::REJECTION, scenarios::ROLLBACK] {
        let sc = Scenario::from_jsonl(text, &m).unwrap();
        assert_eq!(Scenario::from_jsonl(&sc.to_jsonl(), &m).unwrap(), sc);
    }
}

#[test]
fn trace_jsonl_round_trips() {
    let (reg, m) = road();
    let mut e = engine(&m, &reg, scenarios::ROLLBACK);
    e.run(10_000).unwrap();
    let text = to_jsonl(e.trace());
    assert_eq!(from_jsonl(&text).unwrap().as_slice(), e.trace());
}
