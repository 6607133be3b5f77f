use btw_core::diagnostic::Span;
use btw_core::dsl::parse_expr;
use btw_core::expr::{
    apply_effect, eval_predicate, exec_action, invert_effect, Action, ActionKind, Bindings, Catalog, EvalEnv,
    FieldInit, FieldType, Record, Schema, StoreSnapshot, TemporalIndex, Value, WriterKind,
};
use proptest::prelude::*;

type Row = (i64, bool);

fn catalog() -> Catalog {
    let mut c = Catalog::default();
    let fields = vec![("k".into(), FieldType::Int), ("v".into(), FieldType::Int), ("f".into(), FieldType::Bool)];
    c.stores.insert("S".into(), Schema { fields });
    c
}

fn snapshot(rows: &[Row]) -> StoreSnapshot {
    let mut s = StoreSnapshot::default();
    let recs: Vec<Record> = rows
        .iter()
        .enumerate()
        .map(|(i, &(v, f))| {
            Record::from([
                ("k".to_string(), Value::Int(i as i64)),
                ("v".to_string(), Value::Int(v)),
                ("f".to_string(), Value::Bool(f)),
            ])
        })
        .collect();
    if !recs.is_empty() {
        s.stores.insert("S".into(), recs);
    }
    s
}

/// Inner predicate over one record, as text and as a Rust closure.
fn inner(shape: u8, var: &str, c: i64) -> (String, Box<dyn Fn(Row) -> bool>) {
    match shape % 4 {
        0 => (format!("{var}.v > {c}"), Box::new(move |(v, _)| v > c)),
        1 => (format!("{var}.v <= {c} and {var}.f"), Box::new(move |(v, f)| v <= c && f)),
        2 => (format!("not {var}.f or {var}.v == {c}"), Box::new(move |(v, f)| !f || v == c)),
        _ => (format!("{var}.f"), Box::new(|(_, f)| f)),
    }
}

fn eval_text(text: &str, snap: &StoreSnapshot, bindings: &Bindings) -> bool {
    let expr = parse_expr(text).unwrap_or_else(|d| panic!("{text}: {d:?}"));
    let (t, c) = (TemporalIndex::default(), catalog());
    let env = EvalEnv { snapshot: snap, temporal: &t, bindings, catalog: &c, now: 0 };
    eval_predicate(&expr, &env).unwrap_or_else(|e| panic!("{text}: {e}"))
}

fn expr(text: &str) -> btw_core::expr::Expr {
    parse_expr(text).unwrap_or_else(|d| panic!("{text}: {d:?}"))
}

fn random_action(kind: u8, c: i64, n: i64) -> Action {
    let filter = expr(&format!("r.v >= {c}"));
    let kind = match kind % 4 {
        0 => ActionKind::Add {
            store: "S".into(),
            fields: vec![
                FieldInit { name: "k".into(), value: expr(&n.to_string()) },
                FieldInit { name: "v".into(), value: expr(&c.to_string()) },
                FieldInit { name: "f".into(), value: expr("true") },
            ],
        },
        1 => ActionKind::Update {
            var: "r".into(),
            store: "S".into(),
            filter,
            fields: vec![FieldInit { name: "v".into(), value: expr("r.v + 1") }],
        },
        2 => ActionKind::Remove { var: "r".into(), store: "S".into(), filter },
        _ => ActionKind::Set { var: "x".into(), value: expr(&format!("{c} + {n}")) },
    };
    Action { kind, span: Span::default() }
}

proptest! {
    #[test]
    fn single_quantifiers_match_brute_force(
        rows in prop::collection::vec((-3i64..4, any::<bool>()), 0..=5),
        shape in 0u8..4,
        c in -3i64..4,
        forall in any::<bool>(),
    ) {
        let snap = snapshot(&rows);
        let (body, oracle) = inner(shape, "r", c);
        let q = if forall { "forall" } else { "exists" };
        let text = format!("{q}(r in \"S\" : {body})");
        let expected = if forall { rows.iter().all(|&r| oracle(r)) } else { rows.iter().any(|&r| oracle(r)) };
        prop_assert_eq!(eval_text(&text, &snap, &Bindings::default()), expected, "{}", text);
    }

    #[test]
    fn nested_quantifiers_match_brute_force(
        rows in prop::collection::vec((-3i64..4, any::<bool>()), 0..=5),
        outer_forall in any::<bool>(),
        inner_forall in any::<bool>(),
        shape in 0u8..4,
        c in -3i64..4,
    ) {
        let snap = snapshot(&rows);
        let (body, oracle) = inner(shape, "a", c);
        let qi = if inner_forall { "forall" } else { "exists" };
        let qo = if outer_forall { "forall" } else { "exists" };
        let text = format!("{qo}(a in \"S\" : {qi}(b in \"S\" : a.v >= b.v) or {body})");
        let holds = |a: Row| {
            let cmp = |b: &Row| a.0 >= b.0;
            let q = if inner_forall { rows.iter().all(cmp) } else { rows.iter().any(cmp) };
            q || oracle(a)
        };
        let expected = if outer_forall { rows.iter().all(|&a| holds(a)) } else { rows.iter().any(|&a| holds(a)) };
        prop_assert_eq!(eval_text(&text, &snap, &Bindings::default()), expected, "{}", text);
    }

    /// Applying a run of actions, replaying its effects on a copy, and
    /// undoing them in reverse all agree.
    #[test]
    fn actions_replay_and_undo(
        rows in prop::collection::vec((-3i64..4, any::<bool>()), 0..=5),
        steps in prop::collection::vec((0u8..4, -3i64..4, 0i64..100), 1..8),
    ) {
        let original = {
            let mut s = snapshot(&rows);
            s.vars.insert(7, [("x".to_string(), Value::Int(0))].into());
            s
        };
        let (t, cat) = (TemporalIndex::default(), catalog());
        let mut live = original.clone();
        let mut log = Vec::new();
        for (kind, c, n) in steps {
            let action = random_action(kind, c, n);
            let mut bindings = Bindings::default();
            if let Some(Value::Int(x)) = live.vars.get(&7).and_then(|v| v.get("x")) {
                bindings.vars.insert("x".into(), (7, Value::Int(*x)));
            }
            let env = EvalEnv { snapshot: &live, temporal: &t, bindings: &bindings, catalog: &cat, now: 0 };
            let effects = exec_action(&action, WriterKind::Process, &env).map_err(|e| TestCaseError::fail(e.to_string()))?;
            prop_assert!(exec_action(&action, WriterKind::Decision, &env).is_err());
            for e in &effects {
                apply_effect(&mut live, e);
            }
            log.extend(effects);
        }
        let mut replay = original.clone();
        for e in &log {
            apply_effect(&mut replay, e);
        }
        prop_assert_eq!(&replay, &live);
        for e in log.iter().rev() {
            apply_effect(&mut live, &invert_effect(e));
        }
        prop_assert_eq!(live, original);
    }
}
