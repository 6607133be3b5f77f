use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::eval::{eval, eval_predicate, Bindings, EvalEnv, EvalError};
use super::value::{Catalog, FieldType, Record, Schema, StoreSnapshot, Value};
use super::{Action, ActionKind, Destination, FieldInit};

/// Kind of entity running a transaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WriterKind {
    Process,
    Decision,
    Synchroniser,
    Service,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ActionError {
    #[error("record for \"{store}\" violates its schema: {reason}")]
    SchemaViolation { store: String, reason: String },
    #[error("decisions may not write data")]
    DecisionWriteAttempt,
    #[error("unknown store \"{0}\"")]
    UnknownStore(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A single positional change to a store.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StoreDelta {
    Insert { index: usize, record: Record },
    Remove { index: usize, record: Record },
    Update { index: usize, old: Record, new: Record },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effect {
    MessageOut { message: String, dest: Destination, records: Vec<Record> },
    VarSet { scope: u64, name: String, old: Option<Value>, new: Option<Value> },
    StoreChanged { store: String, delta: StoreDelta },
}

impl Effect {
    pub fn is_write(&self) -> bool {
        !matches!(self, Effect::MessageOut { .. })
    }
}

/// Computes the effects of one action against the current snapshot. Effects
/// are listed in the order they must be applied.
pub fn exec_action(action: &Action, writer: WriterKind, env: &EvalEnv<'_>) -> Result<Vec<Effect>, ActionError> {
    if writer == WriterKind::Decision && action.writes() {
        return Err(ActionError::DecisionWriteAttempt);
    }
    let mut effects = Vec::new();
    match &action.kind {
        ActionKind::Add { store, fields } => {
            let schema = store_schema(env, store)?;
            let record = build_record(schema, fields, env, store)?;
            effects.push(Effect::StoreChanged {
                store: store.clone(),
                delta: StoreDelta::Insert { index: env.snapshot.records(store).len(), record },
            });
        }
        ActionKind::Update { var, store, filter, fields } => {
            let schema = store_schema(env, store)?;
            for (index, old) in env.snapshot.records(store).iter().enumerate() {
                let bindings = with_local(env.bindings, var, old);
                let local = EvalEnv { bindings: &bindings, ..*env };
                if !eval_predicate(filter, &local)? {
                    continue;
                }
                let mut new = old.clone();
                for f in fields {
                    let ty = schema.field(&f.name).ok_or_else(|| ActionError::SchemaViolation {
                        store: store.clone(),
                        reason: format!("unknown field `{}`", f.name),
                    })?;
                    new.insert(f.name.clone(), coerce(env.catalog, ty, eval(&f.value, &local)?));
                }
                schema
                    .conforms(&new)
                    .map_err(|reason| ActionError::SchemaViolation { store: store.clone(), reason })?;
                if &new != old {
                    effects.push(Effect::StoreChanged {
                        store: store.clone(),
                        delta: StoreDelta::Update { index, old: old.clone(), new },
                    });
                }
            }
        }
        ActionKind::Remove { var, store, filter } => {
            store_schema(env, store)?;
            let mut doomed = Vec::new();
            for (index, rec) in env.snapshot.records(store).iter().enumerate() {
                let bindings = with_local(env.bindings, var, rec);
                if eval_predicate(filter, &EvalEnv { bindings: &bindings, ..*env })? {
                    doomed.push((index, rec.clone()));
                }
            }
            // Highest index first so earlier indices stay valid.
            for (index, record) in doomed.into_iter().rev() {
                effects
                    .push(Effect::StoreChanged { store: store.clone(), delta: StoreDelta::Remove { index, record } });
            }
        }
        ActionKind::Set { var, value } => {
            let (scope, old) =
                env.bindings.vars.get(var).cloned().ok_or_else(|| ActionError::UnknownVariable(var.clone()))?;
            let new = eval(value, env)?;
            effects.push(Effect::VarSet { scope, name: var.clone(), old: Some(old), new: Some(new) });
        }
        ActionKind::Send { message, dest, each, fields } => {
            let schema = env.catalog.messages.get(message);
            let build = |local: &EvalEnv<'_>| -> Result<Record, ActionError> {
                match schema {
                    Some(s) => build_record(s, fields, local, message),
                    None => {
                        let mut rec = Record::new();
                        for f in fields {
                            rec.insert(f.name.clone(), eval(&f.value, local)?);
                        }
                        Ok(rec)
                    }
                }
            };
            match each {
                None => {
                    let rec = build(env)?;
                    effects.push(Effect::MessageOut {
                        message: message.clone(),
                        dest: dest.clone(),
                        records: vec![rec],
                    });
                }
                Some(each) => {
                    store_schema(env, &each.store)?;
                    for rec in env.snapshot.records(&each.store) {
                        let bindings = with_local(env.bindings, &each.var, rec);
                        let local = EvalEnv { bindings: &bindings, ..*env };
                        if let Some(filter) = &each.filter {
                            if !eval_predicate(filter, &local)? {
                                continue;
                            }
                        }
                        let out = build(&local)?;
                        effects.push(Effect::MessageOut {
                            message: message.clone(),
                            dest: dest.clone(),
                            records: vec![out],
                        });
                    }
                }
            }
        }
        ActionKind::Transfer { message, store } => {
            let schema = store_schema(env, store)?;
            let records =
                env.bindings.messages.get(message).ok_or_else(|| EvalError::MissingMessage(message.clone()))?;
            let base = env.snapshot.records(store).len();
            for (i, rec) in records.iter().enumerate() {
                let mut projected = Record::new();
                for (name, ty) in &schema.fields {
                    let v = rec.get(name).cloned().ok_or_else(|| ActionError::SchemaViolation {
                        store: store.clone(),
                        reason: format!("message \"{message}\" lacks field `{name}`"),
                    })?;
                    projected.insert(name.clone(), coerce(env.catalog, ty, v));
                }
                schema
                    .conforms(&projected)
                    .map_err(|reason| ActionError::SchemaViolation { store: store.clone(), reason })?;
                effects.push(Effect::StoreChanged {
                    store: store.clone(),
                    delta: StoreDelta::Insert { index: base + i, record: projected },
                });
            }
        }
    }
    Ok(effects)
}

fn store_schema<'a>(env: &EvalEnv<'a>, store: &str) -> Result<&'a Schema, ActionError> {
    env.catalog.stores.get(store).ok_or_else(|| ActionError::UnknownStore(store.to_string()))
}

fn with_local(bindings: &Bindings, var: &str, rec: &Record) -> Bindings {
    let mut b = bindings.clone();
    b.vars.insert(var.to_string(), (u64::MAX, Value::Record(rec.clone())));
    b
}

fn build_record(schema: &Schema, fields: &[FieldInit], env: &EvalEnv<'_>, owner: &str) -> Result<Record, ActionError> {
    let mut rec = Record::new();
    for f in fields {
        let ty = schema.field(&f.name).ok_or_else(|| ActionError::SchemaViolation {
            store: owner.to_string(),
            reason: format!("unknown field `{}`", f.name),
        })?;
        rec.insert(f.name.clone(), coerce(env.catalog, ty, eval(&f.value, env)?));
    }
    schema.conforms(&rec).map_err(|reason| ActionError::SchemaViolation { store: owner.to_string(), reason })?;
    Ok(rec)
}

/// Turns keys and whole records into references where a ref field expects one.
fn coerce(catalog: &Catalog, ty: &FieldType, v: Value) -> Value {
    match (ty, v) {
        (FieldType::Ref(store), v @ (Value::Text(_) | Value::Int(_))) => {
            Value::Ref { store: store.clone(), key: Box::new(v) }
        }
        (FieldType::Ref(store), Value::Record(r)) => {
            let key = catalog.stores.get(store).and_then(|s| s.key()).and_then(|k| r.get(k)).cloned();
            match key {
                Some(k) => Value::Ref { store: store.clone(), key: Box::new(k) },
                None => Value::Record(r),
            }
        }
        (_, v) => v,
    }
}

pub fn apply_effect(snapshot: &mut StoreSnapshot, effect: &Effect) {
    match effect {
        Effect::MessageOut { .. } => {}
        Effect::VarSet { scope, name, new, .. } => {
            let vars = snapshot.vars.entry(*scope).or_default();
            match new {
                Some(v) => {
                    vars.insert(name.clone(), v.clone());
                }
                None => {
                    vars.remove(name);
                }
            }
            // Empty containers are pruned so an undone effect leaves no trace.
            if vars.is_empty() {
                snapshot.vars.remove(scope);
            }
        }
        Effect::StoreChanged { store, delta } => {
            let recs = snapshot.stores.entry(store.clone()).or_default();
            match delta {
                StoreDelta::Insert { index, record } => recs.insert((*index).min(recs.len()), record.clone()),
                StoreDelta::Remove { index, .. } => {
                    if *index < recs.len() {
                        recs.remove(*index);
                    }
                }
                StoreDelta::Update { index, new, .. } => {
                    if let Some(slot) = recs.get_mut(*index) {
                        *slot = new.clone();
                    }
                }
            }
            if recs.is_empty() {
                snapshot.stores.remove(store);
            }
        }
    }
}

/// The effect that undoes `effect`. Messages already sent cannot be undone
/// and invert to themselves; callers skip them.
pub fn invert_effect(effect: &Effect) -> Effect {
    match effect {
        Effect::MessageOut { .. } => effect.clone(),
        Effect::VarSet { scope, name, old, new } => {
            Effect::VarSet { scope: *scope, name: name.clone(), old: new.clone(), new: old.clone() }
        }
        Effect::StoreChanged { store, delta } => Effect::StoreChanged {
            store: store.clone(),
            delta: match delta {
                StoreDelta::Insert { index, record } => StoreDelta::Remove { index: *index, record: record.clone() },
                StoreDelta::Remove { index, record } => StoreDelta::Insert { index: *index, record: record.clone() },
                StoreDelta::Update { index, old, new } => {
                    StoreDelta::Update { index: *index, old: new.clone(), new: old.clone() }
                }
            },
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostic::Span;
    use crate::expr::{BinOp, Expr, ExprKind, TemporalIndex};

    fn catalog() -> Catalog {
        let mut c = Catalog::default();
        c.stores.insert(
            "Apps".into(),
            Schema { fields: vec![("id".into(), FieldType::Int), ("ok".into(), FieldType::Bool)] },
        );
        c
    }

    fn e(kind: ExprKind) -> Expr {
        Expr::new(kind, Span::default())
    }

    #[test]
    fn add_update_remove_roundtrip() {
        let cat = catalog();
        let t = TemporalIndex::default();
        let b = Bindings::default();
        let mut snap = StoreSnapshot::default();
        let original = snap.clone();
        let mut applied = Vec::new();
        for id in 0..3 {
            let add = Action {
                kind: ActionKind::Add {
                    store: "Apps".into(),
                    fields: vec![
                        FieldInit { name: "id".into(), value: e(ExprKind::Int(id)) },
                        FieldInit { name: "ok".into(), value: Expr::bool(false) },
                    ],
                },
                span: Span::default(),
            };
            let env = EvalEnv { snapshot: &snap, temporal: &t, bindings: &b, catalog: &cat, now: 0 };
            let effs = exec_action(&add, WriterKind::Process, &env).unwrap();
            for eff in effs {
                apply_effect(&mut snap, &eff);
                applied.push(eff);
            }
        }
        let field_id = e(ExprKind::Field(Box::new(e(ExprKind::Var("a".into()))), "id".into()));
        let filter = e(ExprKind::Binary(BinOp::Ge, Box::new(field_id), Box::new(e(ExprKind::Int(1)))));
        let rm = Action {
            kind: ActionKind::Remove { var: "a".into(), store: "Apps".into(), filter },
            span: Span::default(),
        };
        let env = EvalEnv { snapshot: &snap, temporal: &t, bindings: &b, catalog: &cat, now: 0 };
        let effs = exec_action(&rm, WriterKind::Process, &env).unwrap();
        assert_eq!(effs.len(), 2);
        for eff in effs {
            apply_effect(&mut snap, &eff);
            applied.push(eff);
        }
        assert_eq!(snap.records("Apps").len(), 1);
        for eff in applied.iter().rev() {
            apply_effect(&mut snap, &invert_effect(eff));
        }
        assert_eq!(snap.records("Apps"), original.records("Apps"));
    }

    #[test]
    fn decisions_cannot_write() {
        let cat = catalog();
        let t = TemporalIndex::default();
        let b = Bindings::default();
        let snap = StoreSnapshot::default();
        let env = EvalEnv { snapshot: &snap, temporal: &t, bindings: &b, catalog: &cat, now: 0 };
        let add = Action { kind: ActionKind::Add { store: "Apps".into(), fields: vec![] }, span: Span::default() };
        assert_eq!(exec_action(&add, WriterKind::Decision, &env), Err(ActionError::DecisionWriteAttempt));
    }
}
