//! Syntax tree for `.btw` specification files.

use serde::{Deserialize, Serialize};

use crate::diagnostic::Span;
use crate::expr::{Action, Destination, DurationUnit, Expr, FieldInit, FieldType};
use crate::metamodel::{ObjectNature, Protocol};

/// A quoted name together with where it was written.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Name {
    pub text: String,
    pub span: Span,
}

impl Name {
    pub fn new(text: impl Into<String>) -> Self {
        Name { text: text.into(), span: Span::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecAst {
    pub scope: ScopeBlock,
    pub models: Vec<ProcessModelAst>,
    pub services: Vec<ServiceModelAst>,
    pub recovery: Option<RecoveryTableAst>,
    pub span: Span,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeBlock {
    pub decls: Vec<ScopeDecl>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeDecl {
    pub kind: ScopeDeclKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: FieldType,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScopeDeclKind {
    Organisation {
        name: Name,
    },
    Unit {
        name: Name,
        parent: Name,
    },
    Role {
        name: Name,
    },
    Actor {
        name: Name,
        unit: Name,
        roles: Vec<Name>,
    },
    Object {
        name: Name,
        nature: ObjectNature,
    },
    Service {
        name: Name,
        external: bool,
    },
    Message {
        name: Name,
        external: bool,
        fields: Vec<FieldDecl>,
    },
    Store {
        name: Name,
        holds: Vec<Name>,
        fields: Vec<FieldDecl>,
        fragment: Option<Name>,
    },
    Buffer {
        name: Name,
        protocol: Protocol,
        accepts: Vec<Name>,
    },
    /// Places a process or decision in an organisational unit.
    Locate {
        entity: Name,
        unit: Name,
    },
    Undertake {
        role: Name,
        entity: Name,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Positive,
    Negative,
}

impl Outcome {
    pub fn keyword(self) -> &'static str {
        match self {
            Outcome::Positive => "positive",
            Outcome::Negative => "negative",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "positive" => Some(Outcome::Positive),
            "negative" => Some(Outcome::Negative),
            _ => None,
        }
    }

    pub fn complement(self) -> Self {
        match self {
            Outcome::Positive => Outcome::Negative,
            Outcome::Negative => Outcome::Positive,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessModelAst {
    /// Top-level entities; a well-formed model has exactly one, a process.
    pub entities: Vec<EntityDecl>,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityKindAst {
    Process,
    Decision,
    Sync,
}

impl EntityKindAst {
    pub fn keyword(self) -> &'static str {
        match self {
            EntityKindAst::Process => "process",
            EntityKindAst::Decision => "decision",
            EntityKindAst::Sync => "sync",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityDecl {
    pub kind: EntityKindAst,
    pub name: Name,
    pub exclusive: bool,
    pub role: Option<Name>,
    /// Fixed execution time as written.
    pub duration: Option<(i64, DurationUnit)>,
    /// `None` for a bare declaration such as `sync "J";`.
    pub body: Option<Vec<BodyItem>>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyItem {
    pub kind: BodyItemKind,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SyncOrder {
    SendFirst,
    ReceiveFirst,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BodyItemKind {
    /// Asynchronous receive: suspends until the message arrives.
    Receive {
        message: Name,
        from: Destination,
        from_span: Span,
    },
    Take {
        message: Name,
        buffer: Name,
    },
    Put {
        message: Name,
        buffer: Name,
        fields: Vec<FieldInit>,
    },
    /// Synchronous exchange with a reply.
    Sync {
        order: SyncOrder,
        message: Name,
        counterpart: Destination,
        counterpart_span: Span,
        reply: Name,
    },
    Action(Action),
    Pre(Expr),
    PreTimeout(i64, DurationUnit),
    Post(Expr),
    Var {
        name: String,
        ty: FieldType,
    },
    Uses(Name),
    Hci {
        name: Name,
        schema: Option<Name>,
    },
    Entity(EntityDecl),
    Initial(Name),
    Trigger {
        from: Name,
        outcome: Option<Outcome>,
        to: Name,
    },
    Commit {
        grain: Name,
        members: Vec<Name>,
    },
    /// Decision rule for one outcome.
    Rule {
        outcome: Outcome,
        expr: Expr,
    },
    /// Marks an outcome of this decision as terminal for the enclosing
    /// complex decision. `abort` ends that decision at once.
    Terminates {
        outcome: Outcome,
        result: Outcome,
        abort: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceModelAst {
    pub name: Name,
    pub states: Vec<StateDecl>,
    pub rules: Vec<TransitionAst>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDecl {
    pub name: Name,
    pub within: Option<(i64, DurationUnit)>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateRef {
    Birth,
    Death,
    Named(Name),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionAst {
    pub source: StateRef,
    /// `None` for an action-only rule (`on SRC when ...`).
    pub target: Option<StateRef>,
    pub rule: EcaRuleAst,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbortKind {
    Failure,
    NonFailure,
}

impl AbortKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AbortKind::Failure => "failure",
            AbortKind::NonFailure => "nonfailure",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventSpec {
    MsgFrom(Name),
    MsgTo(Name),
    DbState(Expr),
    DecisionEnd(Name, Outcome),
    ProcessStart(Name),
    ProcessEnd(Name),
    ProcessStartFailed(Name, u32),
    Abort(AbortKind),
    Timer(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EcaAction {
    Forward { message: Name, to: Name },
    Trigger(Name),
    Send { message: Name, to: Name },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcaRuleAst {
    pub when: EventSpec,
    pub cond: Option<Expr>,
    /// Empty means `none`.
    pub then: Vec<EcaAction>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryTableAst {
    pub entries: Vec<RecoveryEntryAst>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryEntryAst {
    pub entity: Name,
    pub ladder: Vec<RungAst>,
    pub rollback: Option<RollbackAst>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RungAst {
    /// `None` is the unbounded rung `*`.
    pub threshold: Option<u32>,
    /// `None` retries the entity itself.
    pub target: Option<Name>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RollbackAst {
    Undo,
    Null,
    Compensate(Name),
}
