use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::buffer::{Buffer, Draws};
use super::journal::Journal;
use super::scenario::Scenario;
use crate::dsl::ast::{AbortKind, Outcome};
use crate::expr::{Effect, Record, StoreSnapshot, TemporalIndex};
use crate::model::{DecompId, EntityId, ServiceState};

pub type ExecId = u64;
pub type ActId = u64;

/// Why a started (or about to start) execution is not making progress.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wait {
    /// Pre-condition false; gives up at `deadline`.
    Pre {
        deadline: i64,
    },
    /// Synchronous call outstanding.
    Reply {
        message: String,
        service: String,
    },
    Take {
        buffer: String,
        message: String,
    },
    /// Waiting for a message forwarded by the local service.
    Inbox {
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecStatus {
    /// Steps done or in progress; completes at `finish` once set.
    Running,
    Waiting(Wait),
    Composite(ActId),
    Completed,
    Aborted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exec {
    pub id: ExecId,
    pub entity: EntityId,
    /// Entity whose place this execution takes: differs from `entity` when a
    /// contingency runs instead of the failing entity.
    pub slot: EntityId,
    pub act: Option<ActId>,
    pub status: ExecStatus,
    pub started: i64,
    /// Next step to run.
    pub pc: usize,
    pub finish: Option<i64>,
    pub effects: Vec<Effect>,
    pub outcome: Option<Outcome>,
}

impl Exec {
    pub fn is_live(&self) -> bool {
        !matches!(self.status, ExecStatus::Completed | ExecStatus::Aborted)
    }

    /// Actively executing, as opposed to suspended or waiting to start.
    pub fn is_busy(&self) -> bool {
        self.status == ExecStatus::Running
    }
}

/// A request to start an entity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pending {
    pub entity: EntityId,
    pub slot: EntityId,
    pub act: Option<ActId>,
    pub order: u64,
}

/// A running instance of a decomposition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Activation {
    pub id: ActId,
    pub decomp: DecompId,
    pub owner: ExecId,
    /// Tokens delivered to synchroniser inputs, by trigger index.
    pub tokens: BTreeMap<usize, u32>,
    /// Results cast by sub-decisions of a complex decision.
    pub votes: Vec<Outcome>,
    /// Commit-group members completed so far, by group name.
    pub group_done: BTreeMap<String, Vec<EntityId>>,
    pub closed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arrival {
    pub exec: ExecId,
    pub service: String,
    pub message: String,
    pub records: Vec<Record>,
    pub at: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub from: ServiceState,
    pub to: ServiceState,
    pub rule: String,
    pub at: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceInstance {
    pub state: ServiceState,
    pub entered: i64,
    pub history: Vec<Transition>,
}

/// Something a service rule can react to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EcaEvent {
    MsgFrom(String),
    MsgTo(String),
    DbChanged,
    DecisionEnd(String, Outcome),
    ProcessStart(String),
    ProcessEnd(String),
    StartFailed(String, u32),
    Abort(AbortKind),
    Tick,
}

/// Complete simulator state. Self-contained apart from the model, so it can
/// be cloned, checkpointed and resumed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineState {
    pub clock: i64,
    pub draws: Draws,
    pub service: ServiceInstance,
    pub terminated: bool,
    pub execs: BTreeMap<ExecId, Exec>,
    pub activations: BTreeMap<ActId, Activation>,
    pub pending: Vec<Pending>,
    pub arrivals: Vec<Arrival>,
    pub buffers: BTreeMap<String, Buffer>,
    /// Messages forwarded by the local service, by type.
    pub inbox: BTreeMap<String, VecDeque<Vec<Record>>>,
    /// Latest instance of each message type seen by the workflow.
    pub messages: BTreeMap<String, Vec<Record>>,
    pub snapshot: StoreSnapshot,
    pub temporal: TemporalIndex,
    pub journal: Journal,
    pub events: VecDeque<EcaEvent>,
    /// Injected start failures still to happen, by entity name.
    pub fail_pending: BTreeMap<String, u32>,
    /// Failed starts so far, by entity name.
    pub fail_counts: BTreeMap<String, u32>,
    /// Evaluations so far, by decision name.
    pub decision_counts: BTreeMap<String, u32>,
    pub replies: BTreeMap<String, VecDeque<super::scenario::Reply>>,
    pub scenario: Scenario,
    pub next_injection: usize,
    /// Set while an exclusive process waits for others to finish.
    pub quiescing: bool,
    pub steps: u64,
    pub seq: u64,
    pub next_id: u64,
}
