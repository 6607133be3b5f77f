use std::collections::BTreeMap;

use thiserror::Error;

use super::value::{Catalog, Type};
use super::{BinOp, Expr, ExprKind, UnOp};
use crate::diagnostic::Span;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message}")]
pub struct TypeError {
    pub message: String,
    pub span: Span,
    /// The error names something that does not exist.
    pub unresolved: bool,
}

/// Static names available to an expression.
#[derive(Clone, Debug, Default)]
pub struct TypeEnv<'a> {
    pub catalog: Option<&'a Catalog>,
    pub vars: BTreeMap<String, Type>,
}

impl<'a> TypeEnv<'a> {
    pub fn new(catalog: &'a Catalog) -> Self {
        TypeEnv { catalog: Some(catalog), vars: BTreeMap::new() }
    }

    fn store_field(&self, store: &str, field: &str, span: &Span) -> Result<Type, TypeError> {
        let schema = self
            .catalog
            .and_then(|c| c.stores.get(store))
            .ok_or_else(|| unresolved(span, format!("unknown store \"{store}\"")))?;
        schema
            .field(field)
            .map(|t| t.to_type())
            .ok_or_else(|| err(span, format!("store \"{store}\" has no field `{field}`")))
    }
}

fn err(span: &Span, message: String) -> TypeError {
    TypeError { message, span: *span, unresolved: false }
}

fn unresolved(span: &Span, message: String) -> TypeError {
    TypeError { message, span: *span, unresolved: true }
}

pub fn typecheck(expr: &Expr, env: &TypeEnv<'_>) -> Result<Type, TypeError> {
    let span = &expr.span;
    Ok(match &expr.kind {
        ExprKind::Bool(_) => Type::Bool,
        ExprKind::Int(_) => Type::Int,
        ExprKind::Text(_) => Type::Text,
        ExprKind::Date(_) => Type::Date,
        ExprKind::Duration(..) => Type::Duration,
        ExprKind::Now => Type::Timestamp,
        ExprKind::Today => Type::Date,
        ExprKind::Temporal(f, _) => f.result_type(),
        ExprKind::Var(name) => {
            env.vars.get(name).cloned().ok_or_else(|| unresolved(span, format!("unknown variable `{name}`")))?
        }
        ExprKind::Msg(name) => {
            if let Some(c) = env.catalog {
                if !c.messages.contains_key(name) {
                    return Err(unresolved(span, format!("unknown message \"{name}\"")));
                }
            }
            Type::MessageRecord(name.clone())
        }
        ExprKind::Field(base, field) => match typecheck(base, env)? {
            Type::Ref(store) | Type::StoreRecord(store) => env.store_field(&store, field, span)?,
            Type::MessageRecord(m) => {
                let schema = env
                    .catalog
                    .and_then(|c| c.messages.get(&m))
                    .ok_or_else(|| unresolved(span, format!("unknown message \"{m}\"")))?;
                schema
                    .field(field)
                    .map(|t| t.to_type())
                    .ok_or_else(|| err(span, format!("message \"{m}\" has no field `{field}`")))?
            }
            other => return Err(err(span, format!("cannot project `{field}` from {other}"))),
        },
        ExprKind::Unary(op, inner) => {
            let t = typecheck(inner, env)?;
            match (op, &t) {
                (UnOp::Not, Type::Bool) => Type::Bool,
                (UnOp::Neg, Type::Int | Type::Duration) => t,
                _ => return Err(err(span, format!("operator {op:?} does not apply to {t}"))),
            }
        }
        ExprKind::Binary(op, a, b) => {
            let l = typecheck(a, env)?;
            let r = typecheck(b, env)?;
            binary_type(*op, &l, &r)
                .ok_or_else(|| err(span, format!("operator `{}` does not apply to {l} and {r}", op.symbol())))?
        }
        ExprKind::Quant { var, store, body, .. } => {
            if env.catalog.is_some_and(|c| !c.stores.contains_key(store)) {
                return Err(unresolved(span, format!("unknown store \"{store}\"")));
            }
            let mut inner = env.clone();
            inner.vars.insert(var.clone(), Type::StoreRecord(store.clone()));
            let t = typecheck(body, &inner)?;
            if t != Type::Bool {
                return Err(err(&body.span, format!("quantifier body must be bool, found {t}")));
            }
            Type::Bool
        }
    })
}

fn binary_type(op: BinOp, l: &Type, r: &Type) -> Option<Type> {
    use Type::*;
    match op {
        BinOp::And | BinOp::Or => (l == &Bool && r == &Bool).then_some(Bool),
        BinOp::Eq | BinOp::Ne => comparable(l, r).then_some(Bool),
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
            (comparable(l, r) && matches!(l, Int | Text | Date | Time | Timestamp | Duration)).then_some(Bool)
        }
        BinOp::Add | BinOp::Sub => match (l, r) {
            (Int, Int) => Some(Int),
            (Duration, Duration) => Some(Duration),
            (Date, Duration) => Some(Date),
            (Duration, Date) if op == BinOp::Add => Some(Date),
            (Timestamp, Duration) => Some(Timestamp),
            (Time, Duration) => Some(Time),
            (Date, Date) | (Timestamp, Timestamp) if op == BinOp::Sub => Some(Duration),
            _ => None,
        },
    }
}

fn comparable(l: &Type, r: &Type) -> bool {
    match (l, r) {
        (Type::Ref(a), Type::Ref(b)) => a == b,
        (Type::StoreRecord(_) | Type::MessageRecord(_), _) | (_, Type::StoreRecord(_) | Type::MessageRecord(_)) => {
            false
        }
        _ => l == r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::FieldType;
    use crate::expr::{Quantifier, Schema, TemporalFn};

    fn e(kind: ExprKind) -> Expr {
        Expr::new(kind, Span::default())
    }

    #[test]
    fn temporal_date_arithmetic() {
        let env = TypeEnv::default();
        let x = e(ExprKind::Binary(
            BinOp::Le,
            Box::new(e(ExprKind::Temporal(TemporalFn::EndDate, "a".into()))),
            Box::new(e(ExprKind::Binary(
                BinOp::Add,
                Box::new(e(ExprKind::Temporal(TemporalFn::RecDate, "m".into()))),
                Box::new(e(ExprKind::Duration(1, crate::expr::DurationUnit::Days))),
            ))),
        ));
        assert_eq!(typecheck(&x, &env).unwrap(), Type::Bool);
        let bad = e(ExprKind::Binary(BinOp::Lt, Box::new(e(ExprKind::Int(1))), Box::new(e(ExprKind::Bool(true)))));
        assert!(typecheck(&bad, &env).is_err());
    }

    #[test]
    fn quantifier_binds_store_records() {
        let mut c = Catalog::default();
        c.stores.insert("S".into(), Schema { fields: vec![("n".into(), FieldType::Int)] });
        let env = TypeEnv::new(&c);
        let body = e(ExprKind::Binary(
            BinOp::Gt,
            Box::new(e(ExprKind::Field(Box::new(e(ExprKind::Var("r".into()))), "n".into()))),
            Box::new(e(ExprKind::Int(0))),
        ));
        let q = e(ExprKind::Quant {
            quantifier: Quantifier::Exists,
            var: "r".into(),
            store: "S".into(),
            body: Box::new(body),
        });
        assert_eq!(typecheck(&q, &env).unwrap(), Type::Bool);
    }
}
