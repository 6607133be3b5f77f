//! Lowered, name-resolved workflow model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diagnostic::Span;
use crate::dsl::ast::{AbortKind, Outcome, SyncOrder};
use crate::expr::{Action, Catalog, Expr, FieldInit, FieldType};
use crate::metamodel::{ConceptId, ObjectNature, Protocol};

/// Index of an entity occurrence in [`WorkflowModel::entities`].
pub type EntityId = usize;
/// Index of a decomposition body in [`WorkflowModel::decompositions`].
pub type DecompId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Process,
    Decision,
    Synchroniser,
}

impl EntityKind {
    pub fn label(self) -> &'static str {
        match self {
            EntityKind::Process => "process",
            EntityKind::Decision => "decision",
            EntityKind::Synchroniser => "synchroniser",
        }
    }
}

/// The other side of a messaging step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Counterpart {
    Entity(EntityId),
    LocalService,
    /// A service other than the one owning the model.
    Remote(String),
    /// Names something that is neither a service nor an entity.
    Other(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Receive { message: String, from: Counterpart, span: Span },
    Take { message: String, buffer: String, span: Span },
    Put { message: String, buffer: String, fields: Vec<FieldInit>, span: Span },
    Sync { order: SyncOrder, message: String, counterpart: Counterpart, reply: String, span: Span },
    Action(Action),
}

impl Step {
    pub fn span(&self) -> Span {
        match self {
            Step::Receive { span, .. } | Step::Take { span, .. } | Step::Put { span, .. } | Step::Sync { span, .. } => {
                *span
            }
            Step::Action(a) => a.span,
        }
    }
}

/// Rule for one decision outcome. Missing rules are filled in during
/// lowering: the complement of the other rule, or `true` when both are absent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRules {
    pub positive: Expr,
    pub negative: Expr,
    pub declared: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Terminator {
    pub outcome: Outcome,
    pub result: Outcome,
    pub abort: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub concept: ConceptId,
    pub name: String,
    pub kind: EntityKind,
    pub model: usize,
    /// Enclosing composite; `None` for model roots.
    pub sup: Option<EntityId>,
    /// Body the entity occurrence belongs to; `None` for model roots.
    pub parent_decomp: Option<DecompId>,
    /// Own decomposition, shared with the defining occurrence for recursion.
    pub decomposition: Option<DecompId>,
    pub exclusive: bool,
    pub role: Option<String>,
    /// Execution time in seconds.
    pub duration: i64,
    pub steps: Vec<Step>,
    pub pre: Vec<Expr>,
    /// Seconds to wait for a false pre-condition before aborting.
    pub pre_timeout: i64,
    pub post: Vec<Expr>,
    pub vars: Vec<(String, FieldType)>,
    pub uses: Vec<String>,
    pub hci: Vec<(String, Option<String>)>,
    pub rules: Option<DecisionRules>,
    pub terminators: Vec<Terminator>,
    /// True for a bodiless occurrence that reuses another occurrence's definition.
    pub is_reference: bool,
    pub span: Span,
}

impl Entity {
    pub fn is_composite(&self) -> bool {
        self.decomposition.is_some()
    }

    /// Storage entities read by the entity's own steps.
    pub fn consumes(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.steps {
            match s {
                Step::Take { buffer, .. } => out.push(buffer.clone()),
                Step::Action(a) => {
                    use crate::expr::ActionKind as A;
                    match &a.kind {
                        A::Update { store, .. } | A::Remove { store, .. } => out.push(store.clone()),
                        A::Send { each: Some(e), .. } => out.push(e.store.clone()),
                        _ => {}
                    }
                    for e in a.exprs() {
                        collect_stores(e, &mut out);
                    }
                }
                Step::Put { fields, .. } => {
                    for f in fields {
                        collect_stores(&f.value, &mut out);
                    }
                }
                _ => {}
            }
        }
        for e in self.pre.iter().chain(&self.post) {
            collect_stores(e, &mut out);
        }
        if let Some(r) = &self.rules {
            collect_stores(&r.positive, &mut out);
            collect_stores(&r.negative, &mut out);
        }
        out.sort();
        out.dedup();
        out
    }

    /// Storage entities written by the entity's own steps.
    pub fn produces(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.steps {
            match s {
                Step::Put { buffer, .. } => out.push(buffer.clone()),
                Step::Action(a) => {
                    use crate::expr::ActionKind as A;
                    match &a.kind {
                        A::Add { store, .. }
                        | A::Update { store, .. }
                        | A::Remove { store, .. }
                        | A::Transfer { store, .. } => out.push(store.clone()),
                        _ => {}
                    }
                }
                _ => {}
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn writes_data(&self) -> bool {
        self.steps.iter().any(|s| matches!(s, Step::Put { .. }) || matches!(s, Step::Action(a) if a.writes()))
    }
}

fn collect_stores(e: &Expr, out: &mut Vec<String>) {
    e.walk(&mut |x| {
        if let crate::expr::ExprKind::Quant { store, .. } = &x.kind {
            out.push(store.clone());
        }
    });
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    pub from: EntityId,
    pub outcome: Option<Outcome>,
    pub to: EntityId,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitGroup {
    pub name: String,
    pub members: Vec<EntityId>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub id: DecompId,
    /// The defining occurrence.
    pub owner: EntityId,
    pub children: Vec<EntityId>,
    pub initial: Vec<EntityId>,
    pub triggers: Vec<Trigger>,
    pub commits: Vec<CommitGroup>,
    pub span: Span,
}

impl Decomposition {
    /// Number of trigger edges entering `e` within this body.
    pub fn in_degree(&self, e: EntityId) -> usize {
        self.triggers.iter().filter(|t| t.to == e).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessModel {
    pub index: usize,
    pub roots: Vec<EntityId>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ServiceState {
    Birth,
    Death,
    Named(String),
}

impl std::fmt::Display for ServiceState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServiceState::Birth => f.write_str("birth"),
            ServiceState::Death => f.write_str("death"),
            ServiceState::Named(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    MsgFrom(String),
    MsgTo(String),
    DbState(Expr),
    DecisionEnd(String, Outcome),
    ProcessStart(String),
    ProcessEnd(String),
    ProcessStartFailed(String, u32),
    Abort(AbortKind),
    Timer(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EcaAction {
    Forward { message: String, to: String },
    Trigger(String),
    Send { message: String, to: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcaRule {
    /// `R1`, `R2`, ... in declaration order.
    pub id: String,
    pub source: ServiceState,
    pub target: Option<ServiceState>,
    pub event: Event,
    pub cond: Option<Expr>,
    pub actions: Vec<EcaAction>,
    pub span: Span,
    /// Spans of the names referenced by the rule, for diagnostics.
    pub name_spans: Vec<(String, Span)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateInfo {
    pub name: String,
    pub within: Option<i64>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceModel {
    pub name: String,
    pub states: Vec<StateInfo>,
    pub rules: Vec<EcaRule>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rung {
    /// `None` is the unbounded rung.
    pub threshold: Option<u32>,
    /// `None` retries the failing entity.
    pub target: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rollback {
    Undo,
    Null,
    Compensate(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoverySpec {
    pub entity: String,
    pub ladder: Vec<Rung>,
    pub rollback: Rollback,
    pub span: Span,
}

impl RecoverySpec {
    pub fn default_for(entity: &str) -> Self {
        RecoverySpec { entity: entity.to_string(), ladder: Vec::new(), rollback: Rollback::Undo, span: Span::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferInfo {
    pub protocol: Protocol,
    pub accepts: Vec<String>,
    /// Sender and receiver of a buffer created by lowering for direct
    /// entity-to-entity messaging.
    pub endpoints: Option<(EntityId, EntityId)>,
}

impl BufferInfo {
    pub fn is_hidden(&self) -> bool {
        self.endpoints.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreInfo {
    pub holds: Vec<String>,
    pub fragment: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceInfo {
    pub external: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowModel {
    pub entities: Vec<Entity>,
    pub decompositions: Vec<Decomposition>,
    pub models: Vec<ProcessModel>,
    pub services: Vec<ServiceModel>,
    pub service_decls: BTreeMap<String, ServiceInfo>,
    pub recovery: BTreeMap<String, RecoverySpec>,
    pub catalog: Catalog,
    pub stores: BTreeMap<String, StoreInfo>,
    pub buffers: BTreeMap<String, BufferInfo>,
    pub object_natures: BTreeMap<String, ObjectNature>,
    /// subOf edges rejected because they would close a cycle.
    pub suborg_cycles: Vec<(String, String, Span)>,
}

impl WorkflowModel {
    pub fn entity(&self, id: EntityId) -> &Entity {
        &self.entities[id]
    }

    /// Every occurrence with this name, in declaration order.
    pub fn occurrences(&self, name: &str) -> impl Iterator<Item = &Entity> {
        let name = name.to_string();
        self.entities.iter().filter(move |e| e.name == name)
    }

    /// First occurrence with this name.
    pub fn find(&self, name: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.name == name)
    }

    pub fn roots(&self) -> impl Iterator<Item = &Entity> {
        self.entities.iter().filter(|e| e.sup.is_none())
    }

    pub fn recovery_for(&self, name: &str) -> RecoverySpec {
        self.recovery.get(name).cloned().unwrap_or_else(|| RecoverySpec::default_for(name))
    }

    /// The service whose model this is: the first declared service model.
    pub fn local_service(&self) -> Option<&ServiceModel> {
        self.services.first()
    }

    pub fn children(&self, e: EntityId) -> &[EntityId] {
        match self.entities[e].decomposition {
            Some(d) => &self.decompositions[d].children,
            None => &[],
        }
    }

    /// Stable digest of the model's canonical JSON form.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("model serialises");
        hex::encode(Sha256::digest(json))
    }
}
