use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Start/end facts for one processing entity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecFacts {
    /// Start of the most recent execution, completed or not.
    pub last_start: Option<i64>,
    /// (start, end) of the most recent completed execution.
    pub last_completed: Option<(i64, i64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageFacts {
    pub last_send: Option<i64>,
    pub last_receive: Option<i64>,
}

/// Execution statistics that temporal functions read.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalIndex {
    pub executions: BTreeMap<String, ExecFacts>,
    pub messages: BTreeMap<String, MessageFacts>,
    pub states: BTreeMap<String, i64>,
}

impl TemporalIndex {
    pub fn record_start(&mut self, entity: &str, at: i64) {
        self.executions.entry(entity.to_string()).or_default().last_start = Some(at);
    }

    pub fn record_completion(&mut self, entity: &str, start: i64, end: i64) {
        debug_assert!(end >= start);
        self.executions.entry(entity.to_string()).or_default().last_completed = Some((start, end));
    }

    pub fn record_send(&mut self, message: &str, at: i64) {
        self.messages.entry(message.to_string()).or_default().last_send = Some(at);
    }

    pub fn record_receive(&mut self, message: &str, at: i64) {
        self.messages.entry(message.to_string()).or_default().last_receive = Some(at);
    }

    pub fn record_state(&mut self, state: &str, at: i64) {
        self.states.insert(state.to_string(), at);
    }

    pub fn start(&self, entity: &str) -> Option<i64> {
        self.executions.get(entity).and_then(|f| f.last_start)
    }

    pub fn end(&self, entity: &str) -> Option<i64> {
        self.executions.get(entity).and_then(|f| f.last_completed).map(|(_, e)| e)
    }

    pub fn sent(&self, message: &str) -> Option<i64> {
        self.messages.get(message).and_then(|f| f.last_send)
    }

    pub fn received(&self, message: &str) -> Option<i64> {
        self.messages.get(message).and_then(|f| f.last_receive)
    }

    pub fn state_entered(&self, state: &str) -> Option<i64> {
        self.states.get(state).copied()
    }
}
