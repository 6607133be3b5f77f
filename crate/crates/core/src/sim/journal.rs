use serde::{Deserialize, Serialize};

use crate::expr::{apply_effect, invert_effect, Effect, StoreSnapshot};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    /// Execution id within the engine.
    pub exec: u64,
    pub entity: String,
    /// Clock at which the execution started.
    pub started: i64,
    pub effects: Vec<Effect>,
    pub committed: bool,
    /// Commit group holding the entry open, if any.
    pub scope: Option<String>,
}

impl JournalEntry {
    pub fn writes(&self) -> bool {
        self.effects.iter().any(Effect::is_write)
    }
}

/// Completed executions in completion order, with their store effects.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Journal {
    pub entries: Vec<JournalEntry>,
}

/// Reverts `effects` on `snapshot`, last effect first. Sent messages are
/// not revertible and are skipped.
pub fn undo_effects(snapshot: &mut StoreSnapshot, effects: &[Effect]) {
    for e in effects.iter().rev().filter(|e| e.is_write()) {
        apply_effect(snapshot, &invert_effect(e));
    }
}

impl Journal {
    pub fn push(&mut self, entry: JournalEntry) {
        self.entries.push(entry);
    }

    pub fn uncommitted(&self) -> impl Iterator<Item = &JournalEntry> {
        self.entries.iter().filter(|e| !e.committed)
    }

    pub fn commit_exec(&mut self, exec: u64) {
        for e in self.entries.iter_mut().filter(|e| e.exec == exec) {
            e.committed = true;
        }
    }

    /// Commits every open entry of the named group. Returns how many.
    pub fn commit_scope(&mut self, scope: &str) -> usize {
        let mut n = 0;
        for e in self.entries.iter_mut().filter(|e| !e.committed && e.scope.as_deref() == Some(scope)) {
            e.committed = true;
            n += 1;
        }
        n
    }

    /// Removes one entry and reverts its effects. Committed entries are left
    /// alone and `None` is returned.
    pub fn undo(&mut self, exec: u64, snapshot: &mut StoreSnapshot) -> Option<JournalEntry> {
        let idx = self.entries.iter().rposition(|e| e.exec == exec && !e.committed)?;
        let entry = self.entries.remove(idx);
        undo_effects(snapshot, &entry.effects);
        Some(entry)
    }

    /// Reverts every uncommitted entry, latest first, restoring the snapshot
    /// as of the last commit boundary.
    pub fn undo_uncommitted(&mut self, snapshot: &mut StoreSnapshot) -> Vec<JournalEntry> {
        let mut undone = Vec::new();
        while let Some(idx) = self.entries.iter().rposition(|e| !e.committed) {
            let entry = self.entries.remove(idx);
            undo_effects(snapshot, &entry.effects);
            undone.push(entry);
        }
        undone
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{StoreDelta, Value};

    fn insert(n: i64, index: usize) -> Effect {
        Effect::StoreChanged {
            store: "S".into(),
            delta: StoreDelta::Insert { index, record: [("n".to_string(), Value::Int(n))].into() },
        }
    }

    fn entry(exec: u64, effects: Vec<Effect>, committed: bool) -> JournalEntry {
        JournalEntry { exec, entity: format!("E{exec}"), started: 0, effects, committed, scope: None }
    }

    #[test]
    fn undo_stops_at_commit_boundary() {
        let mut snap = StoreSnapshot::default();
        let mut j = Journal::default();
        for (i, committed) in [true, false, false].into_iter().enumerate() {
            let e = insert(i as i64, i);
            apply_effect(&mut snap, &e);
            j.push(entry(i as u64, vec![e], committed));
        }
        let undone = j.undo_uncommitted(&mut snap);
        assert_eq!(undone.iter().map(|e| e.exec).collect::<Vec<_>>(), [2, 1]);
        assert_eq!(snap.records("S").len(), 1);
        assert_eq!(j.entries.len(), 1);
    }

    #[test]
    fn scope_commit_is_grouped() {
        let mut j = Journal::default();
        j.push(JournalEntry { scope: Some("g".into()), ..entry(1, vec![], false) });
        j.push(entry(2, vec![], false));
        assert_eq!(j.commit_scope("g"), 1);
        assert_eq!(j.uncommitted().count(), 1);
    }
}
