//! Rollforward (redo ladders, contingencies) and rollback (undo,
//! compensation) recovery.

use std::collections::BTreeSet;

use super::engine::Engine;
use super::journal::undo_effects;
use super::state::*;
use super::trace::TraceKind;
use crate::dsl::ast::AbortKind;
use crate::expr::Effect;
use crate::model::{EntityId, Rollback};

impl Engine<'_> {
    /// Entity named `name`, preferring a sibling of `near`.
    fn resolve_near(&self, near: EntityId, name: &str) -> Option<EntityId> {
        let parent = self.model.entities[near].parent_decomp;
        parent
            .and_then(|d| self.model.decompositions[d].children.iter().copied().find(|&c| self.name(c) == name))
            .or_else(|| self.model.find(name).map(|e| e.id))
    }

    /// What to start after the `count`-th failed start in `slot`: the entity
    /// and whether it is a contingency. `None` escalates.
    pub fn ladder_next(&self, slot: EntityId, count: u32) -> Option<(EntityId, bool)> {
        let spec = self.model.recovery_for(self.name(slot));
        if spec.ladder.is_empty() {
            return Some((slot, false));
        }
        let target = |t: &Option<String>| t.as_deref().and_then(|n| self.resolve_near(slot, n)).unwrap_or(slot);
        let bounded: Vec<_> = spec.ladder.iter().filter_map(|r| r.threshold.map(|k| (k, &r.target))).collect();
        if let Some((_, t)) = bounded.iter().find(|(k, _)| *k == count) {
            let t = target(t);
            return Some((t, t != slot));
        }
        let last = bounded.iter().map(|(k, _)| *k).max().unwrap_or(0);
        if count < last {
            return Some((slot, false));
        }
        spec.ladder.iter().find(|r| r.threshold.is_none()).map(|r| (target(&r.target), false))
    }

    /// A start attempt in `p.slot` failed.
    pub(super) fn start_failed(&mut self, p: Pending) {
        let slot_name = self.name(p.slot).to_string();
        let count = {
            let c = self.state.fail_counts.entry(slot_name.clone()).or_default();
            *c += 1;
            *c
        };
        self.emit_detail(TraceKind::AbortRaised, vec![self.name(p.entity).to_string()], "failure");
        self.state.events.push_back(EcaEvent::StartFailed(slot_name.clone(), count));
        match self.ladder_next(p.slot, count) {
            Some((next, contingency)) => {
                let kind = if contingency { TraceKind::ContingencyFired } else { TraceKind::RedoAttempt };
                self.emit_detail(kind, vec![self.name(next).to_string(), slot_name], count.to_string());
                let order = self.fresh_id();
                self.state.pending.push(Pending { entity: next, slot: p.slot, act: p.act, order });
            }
            None => {
                let owner = p.act.map(|a| self.state.activations[&a].owner);
                self.nf_abort(owner, &slot_name, "recovery ladder exhausted");
            }
        }
    }

    /// A running execution failed: revert what it did and apply the ladder.
    pub(super) fn fail_running(&mut self, id: ExecId) {
        self.abort_exec(id);
        let x = &self.state.execs[&id];
        let p = Pending { entity: x.entity, slot: x.slot, act: x.act, order: 0 };
        self.start_failed(p);
    }

    fn abort_exec(&mut self, id: ExecId) {
        let x = self.state.execs[&id].clone();
        if let ExecStatus::Composite(act) = x.status {
            self.close_activation(act);
        }
        if x.effects.iter().any(Effect::is_write) {
            undo_effects(&mut self.state.snapshot, &x.effects);
            self.emit_detail(TraceKind::UndoApplied, vec![self.name(x.entity).to_string()], "partial");
        }
        self.state.arrivals.retain(|a| a.exec != id);
        self.state.execs.get_mut(&id).unwrap().status = ExecStatus::Aborted;
    }

    /// Business abort: rolls back everything executed since the current
    /// service state was entered, then tells the service.
    pub(super) fn nf_abort(&mut self, target: Option<ExecId>, label: &str, reason: &str) {
        self.emit(TraceKind::AbortRaised, vec![label.to_string(), reason.to_string()]).detail =
            Some("nonfailure".into());
        let entered = self.state.service.entered;
        let mut victims: BTreeSet<ExecId> =
            self.state.execs.values().filter(|x| x.is_live() && x.started >= entered).map(|x| x.id).collect();
        let mut cur = target;
        while let Some(id) = cur {
            victims.insert(id);
            cur = self.state.execs[&id].act.map(|a| self.state.activations[&a].owner);
        }
        for id in victims.into_iter().rev() {
            if self.state.execs[&id].is_live() {
                self.abort_exec(id);
            }
        }
        let closed: BTreeSet<ActId> = self.state.activations.values().filter(|a| a.closed).map(|a| a.id).collect();
        self.state.pending.retain(|p| p.act.is_none_or(|a| !closed.contains(&a)));

        let mut entries = Vec::new();
        let mut i = self.state.journal.entries.len();
        while i > 0 {
            i -= 1;
            if self.state.journal.entries[i].started >= entered {
                entries.push(self.state.journal.entries.remove(i));
            }
        }
        for entry in entries {
            if !entry.committed {
                undo_effects(&mut self.state.snapshot, &entry.effects);
                self.emit(TraceKind::UndoApplied, vec![entry.entity.clone()]);
                continue;
            }
            if let Rollback::Compensate(c) = self.model.recovery_for(&entry.entity).rollback {
                self.emit(TraceKind::CompensationStarted, vec![entry.entity.clone(), c.clone()]);
                let subject = self.state.execs[&entry.exec].entity;
                if let Some(comp) = self.resolve_near(subject, &c) {
                    self.start_now(comp);
                }
            }
        }
        self.state.events.push_back(EcaEvent::Abort(AbortKind::NonFailure));
        self.probe(EcaEvent::DbChanged);
    }
}
