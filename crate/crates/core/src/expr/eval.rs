use std::collections::BTreeMap;

use thiserror::Error;

use super::value::{Catalog, Record, StoreSnapshot, Value};
use super::{BinOp, Expr, ExprKind, Quantifier, TemporalFn, TemporalIndex, UnOp, SECONDS_PER_DAY};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("missing temporal fact: {0}")]
    MissingTemporalFact(String),
    #[error("no instance of message \"{0}\" is available")]
    MissingMessage(String),
    #[error("reference to missing record {key} in \"{store}\"")]
    DanglingReference { store: String, key: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("expression is not purely temporal")]
    NotTemporal,
}

impl EvalError {
    /// Errors caused by facts that have not happened yet, as opposed to
    /// engine bugs.
    pub fn is_missing_fact(&self) -> bool {
        matches!(self, EvalError::MissingTemporalFact(_) | EvalError::MissingMessage(_))
    }
}

/// Names visible to the evaluating entity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bindings {
    /// Variable name → (declaring scope, current value).
    pub vars: BTreeMap<String, (u64, Value)>,
    /// Latest received instance of each message type.
    pub messages: BTreeMap<String, Vec<Record>>,
    /// Entity whose start is being decided; its start facts read as "now".
    pub pending_start: Option<String>,
}

pub struct EvalEnv<'a> {
    pub snapshot: &'a StoreSnapshot,
    pub temporal: &'a TemporalIndex,
    pub bindings: &'a Bindings,
    pub catalog: &'a Catalog,
    pub now: i64,
}

impl<'a> EvalEnv<'a> {
    fn record_by_key(&self, store: &str, key: &Value) -> Result<&'a Record, EvalError> {
        let key_field = self.catalog.stores.get(store).and_then(|s| s.key());
        let snapshot: &'a StoreSnapshot = self.snapshot;
        key_field
            .and_then(|kf| snapshot.records(store).iter().find(|r| r.get(kf) == Some(key)))
            .ok_or_else(|| EvalError::DanglingReference { store: store.to_string(), key: key.to_string() })
    }
}

pub fn eval_predicate(expr: &Expr, env: &EvalEnv<'_>) -> Result<bool, EvalError> {
    match eval(expr, env)? {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::Type(format!("predicate evaluated to {}", other.kind_name()))),
    }
}

/// Evaluates an expression that may mention only temporal functions,
/// literals and the clock.
pub fn check_temporal(expr: &Expr, temporal: &TemporalIndex, now: i64) -> Result<bool, EvalError> {
    if !expr.is_temporal_only() {
        return Err(EvalError::NotTemporal);
    }
    let snapshot = StoreSnapshot::default();
    let bindings = Bindings::default();
    let catalog = Catalog::default();
    eval_predicate(expr, &EvalEnv { snapshot: &snapshot, temporal, bindings: &bindings, catalog: &catalog, now })
}

pub fn eval(expr: &Expr, env: &EvalEnv<'_>) -> Result<Value, EvalError> {
    let mut locals = Vec::new();
    eval_in(expr, env, &mut locals)
}

fn eval_in(expr: &Expr, env: &EvalEnv<'_>, locals: &mut Vec<(String, Value)>) -> Result<Value, EvalError> {
    Ok(match &expr.kind {
        ExprKind::Bool(b) => Value::Bool(*b),
        ExprKind::Int(i) => Value::Int(*i),
        ExprKind::Text(s) => Value::Text(s.clone()),
        ExprKind::Date(d) => Value::Date(*d),
        ExprKind::Duration(n, unit) => Value::Duration(n * unit.seconds()),
        ExprKind::Now => Value::Timestamp(env.now),
        ExprKind::Today => Value::date_of(env.now),
        ExprKind::Var(name) => {
            if let Some((_, v)) = locals.iter().rev().find(|(n, _)| n == name) {
                v.clone()
            } else if let Some((_, v)) = env.bindings.vars.get(name) {
                v.clone()
            } else {
                return Err(EvalError::UnboundVariable(name.clone()));
            }
        }
        ExprKind::Msg(name) => {
            let rec = env
                .bindings
                .messages
                .get(name)
                .and_then(|recs| recs.first())
                .ok_or_else(|| EvalError::MissingMessage(name.clone()))?;
            Value::Record(rec.clone())
        }
        ExprKind::Field(base, field) => {
            let base = eval_in(base, env, locals)?;
            let rec = match &base {
                Value::Record(r) => r,
                Value::Ref { store, key } => env.record_by_key(store, key)?,
                other => return Err(EvalError::Type(format!("cannot project `{field}` from {}", other.kind_name()))),
            };
            rec.get(field).cloned().ok_or_else(|| EvalError::Type(format!("record has no field `{field}`")))?
        }
        ExprKind::Unary(op, inner) => {
            let v = eval_in(inner, env, locals)?;
            match (op, v) {
                (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                (UnOp::Neg, Value::Int(i)) => Value::Int(-i),
                (UnOp::Neg, Value::Duration(d)) => Value::Duration(-d),
                (op, v) => return Err(EvalError::Type(format!("cannot apply {op:?} to {}", v.kind_name()))),
            }
        }
        ExprKind::Binary(BinOp::And, a, b) => {
            if !as_bool(eval_in(a, env, locals)?)? {
                Value::Bool(false)
            } else {
                Value::Bool(as_bool(eval_in(b, env, locals)?)?)
            }
        }
        ExprKind::Binary(BinOp::Or, a, b) => {
            if as_bool(eval_in(a, env, locals)?)? {
                Value::Bool(true)
            } else {
                Value::Bool(as_bool(eval_in(b, env, locals)?)?)
            }
        }
        ExprKind::Binary(op, a, b) => {
            let l = eval_in(a, env, locals)?;
            let r = eval_in(b, env, locals)?;
            if op.is_comparison() {
                Value::Bool(compare(*op, &l, &r)?)
            } else {
                arith(*op, l, r)?
            }
        }
        ExprKind::Quant { quantifier, var, store, body } => {
            let records = env.snapshot.records(store);
            let mut result = *quantifier == Quantifier::Forall;
            for rec in records {
                locals.push((var.clone(), Value::Record(rec.clone())));
                let holds = eval_in(body, env, locals).and_then(as_bool);
                locals.pop();
                let holds = holds?;
                match quantifier {
                    Quantifier::Exists if holds => {
                        result = true;
                        break;
                    }
                    Quantifier::Forall if !holds => {
                        result = false;
                        break;
                    }
                    _ => {}
                }
            }
            Value::Bool(result)
        }
        ExprKind::Temporal(func, subject) => temporal_value(*func, subject, env)?,
    })
}

fn temporal_value(func: TemporalFn, subject: &str, env: &EvalEnv<'_>) -> Result<Value, EvalError> {
    let t = env.temporal;
    let pending = env.bindings.pending_start.as_deref() == Some(subject);
    let ts = match func {
        TemporalFn::StartDate | TemporalFn::StartTime if pending => Some(env.now),
        TemporalFn::StartDate | TemporalFn::StartTime => t.start(subject),
        TemporalFn::EndDate | TemporalFn::EndTime => t.end(subject),
        TemporalFn::SendDate | TemporalFn::SendTime => t.sent(subject),
        TemporalFn::RecDate | TemporalFn::RecTime => t.received(subject),
        TemporalFn::StateEntered => t.state_entered(subject),
    }
    .ok_or_else(|| EvalError::MissingTemporalFact(format!("{}(\"{subject}\")", func.name())))?;
    Ok(match func.result_type() {
        super::Type::Date => Value::date_of(ts),
        super::Type::Time => Value::time_of(ts),
        _ => Value::Timestamp(ts),
    })
}

fn as_bool(v: Value) -> Result<bool, EvalError> {
    v.as_bool().ok_or_else(|| EvalError::Type(format!("expected bool, got {}", v.kind_name())))
}

fn compare(op: BinOp, l: &Value, r: &Value) -> Result<bool, EvalError> {
    if std::mem::discriminant(l) != std::mem::discriminant(r) {
        return Err(EvalError::Type(format!("cannot compare {} with {}", l.kind_name(), r.kind_name())));
    }
    let ord = l.cmp(r);
    Ok(match op {
        BinOp::Eq => ord.is_eq(),
        BinOp::Ne => ord.is_ne(),
        BinOp::Lt => ord.is_lt(),
        BinOp::Le => ord.is_le(),
        BinOp::Gt => ord.is_gt(),
        BinOp::Ge => ord.is_ge(),
        _ => unreachable!("not a comparison"),
    })
}

fn arith(op: BinOp, l: Value, r: Value) -> Result<Value, EvalError> {
    let sign = if op == BinOp::Sub { -1 } else { 1 };
    Ok(match (l, r) {
        (Value::Int(a), Value::Int(b)) => Value::Int(a + sign * b),
        (Value::Duration(a), Value::Duration(b)) => Value::Duration(a + sign * b),
        (Value::Date(d), Value::Duration(s)) => Value::Date(d + (sign * s).div_euclid(SECONDS_PER_DAY)),
        (Value::Duration(s), Value::Date(d)) if op == BinOp::Add => Value::Date(d + s.div_euclid(SECONDS_PER_DAY)),
        (Value::Timestamp(t), Value::Duration(s)) => Value::Timestamp(t + sign * s),
        (Value::Time(t), Value::Duration(s)) => Value::Time((t + sign * s).rem_euclid(SECONDS_PER_DAY)),
        (Value::Date(a), Value::Date(b)) if op == BinOp::Sub => Value::Duration((a - b) * SECONDS_PER_DAY),
        (Value::Timestamp(a), Value::Timestamp(b)) if op == BinOp::Sub => Value::Duration(a - b),
        (l, r) => {
            return Err(EvalError::Type(format!(
                "cannot apply {} to {} and {}",
                op.symbol(),
                l.kind_name(),
                r.kind_name()
            )))
        }
    })
}
