//! Predicate and action language used for pre/post conditions, decision
//! rules, ECA conditions and process transactions.

mod action;
mod eval;
mod temporal;
mod typecheck;
mod value;

pub use action::{apply_effect, exec_action, invert_effect, ActionError, Effect, StoreDelta, WriterKind};
pub use eval::{check_temporal, eval, eval_predicate, Bindings, EvalEnv, EvalError};
pub use temporal::{ExecFacts, MessageFacts, TemporalIndex};
pub use typecheck::{typecheck, TypeEnv, TypeError};
pub use value::{format_date, parse_date, Catalog, FieldType, Record, Schema, StoreSnapshot, Type, Value};

use serde::{Deserialize, Serialize};

use crate::diagnostic::Span;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DurationUnit {
    Seconds,
    Minutes,
    Hours,
    Days,
    /// Thirty days.
    Months,
    /// 365 days.
    Years,
}

impl DurationUnit {
    pub fn seconds(self) -> i64 {
        match self {
            DurationUnit::Seconds => 1,
            DurationUnit::Minutes => 60,
            DurationUnit::Hours => 3_600,
            DurationUnit::Days => SECONDS_PER_DAY,
            DurationUnit::Months => 30 * SECONDS_PER_DAY,
            DurationUnit::Years => 365 * SECONDS_PER_DAY,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            DurationUnit::Seconds => "seconds",
            DurationUnit::Minutes => "minutes",
            DurationUnit::Hours => "hours",
            DurationUnit::Days => "days",
            DurationUnit::Months => "months",
            DurationUnit::Years => "years",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "second" | "seconds" => DurationUnit::Seconds,
            "minute" | "minutes" => DurationUnit::Minutes,
            "hour" | "hours" => DurationUnit::Hours,
            "day" | "days" => DurationUnit::Days,
            "month" | "months" => DurationUnit::Months,
            "year" | "years" => DurationUnit::Years,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantifier {
    Exists,
    Forall,
}

/// Execution statistics exposed to expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TemporalFn {
    StartDate,
    EndDate,
    StartTime,
    EndTime,
    SendDate,
    RecDate,
    SendTime,
    RecTime,
    StateEntered,
}

impl TemporalFn {
    pub const ALL: [TemporalFn; 9] = [
        TemporalFn::StartDate,
        TemporalFn::EndDate,
        TemporalFn::StartTime,
        TemporalFn::EndTime,
        TemporalFn::SendDate,
        TemporalFn::RecDate,
        TemporalFn::SendTime,
        TemporalFn::RecTime,
        TemporalFn::StateEntered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemporalFn::StartDate => "start_date",
            TemporalFn::EndDate => "end_date",
            TemporalFn::StartTime => "start_time",
            TemporalFn::EndTime => "end_time",
            TemporalFn::SendDate => "send_date",
            TemporalFn::RecDate => "rec_date",
            TemporalFn::SendTime => "send_time",
            TemporalFn::RecTime => "rec_time",
            TemporalFn::StateEntered => "state_entered",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        TemporalFn::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn result_type(self) -> Type {
        match self {
            TemporalFn::StartDate | TemporalFn::EndDate | TemporalFn::SendDate | TemporalFn::RecDate => Type::Date,
            TemporalFn::StartTime | TemporalFn::EndTime | TemporalFn::SendTime | TemporalFn::RecTime => Type::Time,
            TemporalFn::StateEntered => Type::Timestamp,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExprKind {
    Bool(bool),
    Int(i64),
    Text(String),
    /// Days since 1970-01-01.
    Date(i64),
    Duration(i64, DurationUnit),
    Var(String),
    /// The most recent instance of a message visible to the evaluating entity.
    Msg(String),
    Field(Box<Expr>, String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Quant {
        quantifier: Quantifier,
        var: String,
        store: String,
        body: Box<Expr>,
    },
    Temporal(TemporalFn, String),
    Now,
    Today,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn bool(b: bool) -> Self {
        Expr::new(ExprKind::Bool(b), Span::default())
    }

    /// True when the expression mentions only temporal functions, literals
    /// and the clock.
    pub fn is_temporal_only(&self) -> bool {
        match &self.kind {
            ExprKind::Bool(_)
            | ExprKind::Int(_)
            | ExprKind::Text(_)
            | ExprKind::Date(_)
            | ExprKind::Duration(..)
            | ExprKind::Temporal(..)
            | ExprKind::Now
            | ExprKind::Today => true,
            ExprKind::Unary(_, e) => e.is_temporal_only(),
            ExprKind::Binary(_, a, b) => a.is_temporal_only() && b.is_temporal_only(),
            ExprKind::Var(_) | ExprKind::Msg(_) | ExprKind::Field(..) | ExprKind::Quant { .. } => false,
        }
    }

    /// Calls `f` on every sub-expression, this one included.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Field(e, _) | ExprKind::Unary(_, e) => e.walk(f),
            ExprKind::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::Quant { body, .. } => body.walk(f),
            _ => {}
        }
    }
}

/// Where an outbound message goes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Destination {
    /// A processing entity or a service, resolved by name during lowering.
    Named(String),
    /// The service local to the process model.
    LocalService,
    /// Addressed individually to records of a store (bulk sends).
    Environment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldInit {
    pub name: String,
    pub value: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Each {
    pub var: String,
    pub store: String,
    pub filter: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionKind {
    Add {
        store: String,
        fields: Vec<FieldInit>,
    },
    Update {
        var: String,
        store: String,
        filter: Expr,
        fields: Vec<FieldInit>,
    },
    Remove {
        var: String,
        store: String,
        filter: Expr,
    },
    Set {
        var: String,
        value: Expr,
    },
    Send {
        message: String,
        dest: Destination,
        each: Option<Each>,
        fields: Vec<FieldInit>,
    },
    /// Copy every record of the latest instance of a message into a store.
    Transfer {
        message: String,
        store: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub kind: ActionKind,
    pub span: Span,
}

impl Action {
    pub fn writes(&self) -> bool {
        !matches!(self.kind, ActionKind::Send { .. })
    }

    pub fn exprs(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        match &self.kind {
            ActionKind::Add { fields, .. } => out.extend(fields.iter().map(|f| &f.value)),
            ActionKind::Update { filter, fields, .. } => {
                out.push(filter);
                out.extend(fields.iter().map(|f| &f.value));
            }
            ActionKind::Remove { filter, .. } => out.push(filter),
            ActionKind::Set { value, .. } => out.push(value),
            ActionKind::Send { each, fields, .. } => {
                if let Some(f) = each.as_ref().and_then(|e| e.filter.as_ref()) {
                    out.push(f);
                }
                out.extend(fields.iter().map(|f| &f.value));
            }
            ActionKind::Transfer { .. } => {}
        }
        out
    }
}
