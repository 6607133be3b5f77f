use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dsl::ast::Outcome;
use crate::expr::Record;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TraceKind {
    EntityStarted,
    EntityCompleted,
    DecisionOutcome,
    MessageSent,
    MessageReceived,
    BufferPut,
    BufferTake,
    StateTransition,
    Commit,
    AbortRaised,
    RedoAttempt,
    ContingencyFired,
    UndoApplied,
    CompensationStarted,
    TemporalViolation,
    Quiesce,
    Death,
    /// A rule matched but an earlier rule for the same event fired.
    RuleShadowed,
    /// A rule without a target state fired.
    RuleFired,
    /// A top-level process was started by a service rule.
    Triggered,
}

/// One line of a trace file. Field order is part of the file format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub seq: u64,
    pub clock: i64,
    pub kind: TraceKind,
    pub subject: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Outcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

impl TraceEntry {
    pub fn is(&self, kind: TraceKind, subject: &str) -> bool {
        self.kind == kind && self.subject.first().map(String::as_str) == Some(subject)
    }

    pub fn to_json_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("trace entries serialise");
        s.push('\n');
        s
    }
}

/// Short content hash of a message payload.
pub fn payload_digest(records: &[Record]) -> String {
    use sha2::{Digest, Sha256};
    let json = serde_json::to_vec(records).expect("records serialise");
    hex::encode(&Sha256::digest(json)[..8])
}

pub fn write_jsonl<W: Write>(mut out: W, trace: &[TraceEntry]) -> io::Result<()> {
    for e in trace {
        out.write_all(e.to_json_line().as_bytes())?;
    }
    out.flush()
}

pub fn to_jsonl(trace: &[TraceEntry]) -> String {
    trace.iter().map(TraceEntry::to_json_line).collect()
}

pub fn from_jsonl(text: &str) -> Result<Vec<TraceEntry>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
