//! Starting, stepping and completing entity executions.

use std::collections::BTreeSet;

use super::engine::Engine;
use super::journal::JournalEntry;
use super::state::*;
use super::trace::TraceKind;
use crate::diagnostic::Span;
use crate::dsl::ast::Outcome;
use crate::expr::{
    apply_effect, exec_action, Action, ActionKind, Destination, Effect, EvalEnv, FieldInit, FieldType, Record, Value,
    WriterKind,
};
use crate::model::{Counterpart, EntityId, EntityKind, Step};

fn default_value(ty: &FieldType) -> Value {
    match ty {
        FieldType::Bool => Value::Bool(false),
        FieldType::Int => Value::Int(0),
        FieldType::Date => Value::Date(0),
        FieldType::Time => Value::Time(0),
        FieldType::Timestamp => Value::Timestamp(0),
        FieldType::Duration => Value::Duration(0),
        _ => Value::Text(String::new()),
    }
}

impl Engine<'_> {
    /// Takes a start request through failure injection and the
    /// pre-condition check.
    pub(super) fn attempt_start(&mut self, p: Pending) {
        let slot_name = self.name(p.slot).to_string();
        if let Some(n) = self.state.fail_pending.get_mut(&slot_name).filter(|n| **n > 0) {
            *n -= 1;
            self.start_failed(p);
            return;
        }
        let id = self.fresh_id();
        let now = self.state.clock;
        self.state.execs.insert(
            id,
            Exec {
                id,
                entity: p.entity,
                slot: p.slot,
                act: p.act,
                status: ExecStatus::Waiting(Wait::Pre { deadline: now + self.model.entities[p.entity].pre_timeout }),
                started: now,
                pc: 0,
                finish: None,
                effects: Vec::new(),
                outcome: None,
            },
        );
        self.retry_pre(id);
    }

    pub(super) fn pre_holds(&self, id: ExecId) -> bool {
        let x = &self.state.execs[&id];
        let e = &self.model.entities[x.entity];
        let b = self.bindings_for(x.act.map(|a| self.state.activations[&a].owner), Some(&e.name));
        e.pre.iter().all(|p| self.holds(p, &b))
    }

    /// Starts a waiting execution if its pre-condition holds; gives up once
    /// the deadline has passed.
    pub(super) fn retry_pre(&mut self, id: ExecId) {
        if self.pre_holds(id) {
            self.begin(id);
            return;
        }
        let ExecStatus::Waiting(Wait::Pre { deadline }) = self.state.execs[&id].status else { return };
        if self.state.clock >= deadline {
            let name = self.name(self.state.execs[&id].entity).to_string();
            self.emit_detail(TraceKind::TemporalViolation, vec![name.clone()], "pre");
            self.nf_abort(Some(id), &name, "pre-condition does not hold");
        }
    }

    /// Starts a standalone execution immediately, bypassing the queue.
    pub(super) fn start_now(&mut self, entity: EntityId) {
        let order = self.fresh_id();
        self.attempt_start(Pending { entity, slot: entity, act: None, order });
    }

    fn begin(&mut self, id: ExecId) {
        let model = self.model;
        let now = self.state.clock;
        let x = self.state.execs.get_mut(&id).unwrap();
        x.started = now;
        x.status = ExecStatus::Running;
        let e = &model.entities[x.entity];
        self.state.temporal.record_start(&e.name, now);
        self.emit(TraceKind::EntityStarted, vec![e.name.clone()]);
        if e.kind == EntityKind::Process {
            self.state.events.push_back(EcaEvent::ProcessStart(e.name.clone()));
        }
        for (name, ty) in &e.vars {
            let eff = Effect::VarSet { scope: id, name: name.clone(), old: None, new: Some(default_value(ty)) };
            apply_effect(&mut self.state.snapshot, &eff);
            self.state.execs.get_mut(&id).unwrap().effects.push(eff);
        }
        match e.decomposition {
            Some(d) => {
                let act = self.fresh_id();
                self.state.activations.insert(
                    act,
                    Activation {
                        id: act,
                        decomp: d,
                        owner: id,
                        tokens: Default::default(),
                        votes: Vec::new(),
                        group_done: Default::default(),
                        closed: false,
                    },
                );
                self.state.execs.get_mut(&id).unwrap().status = ExecStatus::Composite(act);
                for &c in &model.decompositions[d].initial {
                    let order = self.fresh_id();
                    self.state.pending.push(Pending { entity: c, slot: c, act: Some(act), order });
                }
                self.close_if_quiet(act);
            }
            None => self.run_steps(id),
        }
    }

    /// Runs steps from the current position until one blocks or all are
    /// done. With nothing left and no duration, completes on the spot.
    pub(super) fn run_steps(&mut self, id: ExecId) {
        let model = self.model;
        let entity = &model.entities[self.state.execs[&id].entity];
        while self.state.execs[&id].pc < entity.steps.len() {
            let pc = self.state.execs[&id].pc;
            match &entity.steps[pc] {
                Step::Receive { message, .. } => {
                    let Some(records) = self.state.inbox.get_mut(message).and_then(|q| q.pop_front()) else {
                        self.wait(id, Wait::Inbox { message: message.clone() });
                        return;
                    };
                    self.receive_into(message, records, vec![message.clone(), entity.name.clone()]);
                }
                Step::Take { message, buffer, .. } => {
                    let item =
                        self.state.buffers.get_mut(buffer).and_then(|b| b.take(Some(message), &mut self.state.draws));
                    let Some(item) = item else {
                        self.wait(id, Wait::Take { buffer: buffer.clone(), message: message.clone() });
                        return;
                    };
                    let records = vec![item.record];
                    self.state.temporal.record_receive(message, self.state.clock);
                    self.emit_message(TraceKind::BufferTake, vec![buffer.clone(), message.clone()], &records);
                    self.state.messages.insert(message.clone(), records);
                }
                Step::Put { message, buffer, fields, span } => {
                    let record = match self.message_record(id, message, fields, *span) {
                        Ok(r) => r,
                        Err(msg) => {
                            self.nf_abort(Some(id), &entity.name, &msg);
                            return;
                        }
                    };
                    self.state.temporal.record_send(message, self.state.clock);
                    self.emit_message(
                        TraceKind::BufferPut,
                        vec![buffer.clone(), message.clone()],
                        std::slice::from_ref(&record),
                    );
                    if let Some(b) = self.state.buffers.get_mut(buffer) {
                        b.put(message, record);
                    }
                }
                Step::Sync { message, counterpart, reply, .. } => {
                    let service = match counterpart {
                        Counterpart::LocalService => model.local_service().map(|s| s.name.clone()).unwrap_or_default(),
                        Counterpart::Remote(s) | Counterpart::Other(s) => s.clone(),
                        Counterpart::Entity(e) => model.entities[*e].name.clone(),
                    };
                    let now = self.state.clock;
                    self.state.temporal.record_send(message, now);
                    self.emit_message(TraceKind::MessageSent, vec![message.clone(), service.clone()], &[Record::new()]);
                    if let Some(r) = self.state.replies.get_mut(&service).and_then(|q| q.pop_front()) {
                        self.state.arrivals.push(Arrival {
                            exec: id,
                            service: service.clone(),
                            message: r.message,
                            records: r.records,
                            at: now + r.delay.max(0),
                        });
                    }
                    self.state.execs.get_mut(&id).unwrap().pc += 1;
                    self.wait(id, Wait::Reply { message: reply.clone(), service });
                    return;
                }
                Step::Action(a) => {
                    if let Err(msg) = self.run_action(id, a) {
                        self.nf_abort(Some(id), &entity.name, &msg);
                        return;
                    }
                }
            }
            self.state.execs.get_mut(&id).unwrap().pc += 1;
        }
        let finish = self.state.clock + entity.duration;
        self.state.execs.get_mut(&id).unwrap().finish = Some(finish);
        if entity.duration == 0 {
            self.complete(id, None);
        }
    }

    fn wait(&mut self, id: ExecId, w: Wait) {
        self.state.execs.get_mut(&id).unwrap().status = ExecStatus::Waiting(w);
    }

    /// Executes one action for `id`, applying and recording its effects and
    /// routing outgoing messages.
    fn run_action(&mut self, id: ExecId, action: &Action) -> Result<Vec<Effect>, String> {
        let model = self.model;
        let x = &self.state.execs[&id];
        let writer = match model.entities[x.entity].kind {
            EntityKind::Decision => WriterKind::Decision,
            EntityKind::Synchroniser => WriterKind::Synchroniser,
            EntityKind::Process => WriterKind::Process,
        };
        let bindings = self.bindings_for(Some(id), None);
        let env = EvalEnv {
            snapshot: &self.state.snapshot,
            temporal: &self.state.temporal,
            bindings: &bindings,
            catalog: &model.catalog,
            now: self.state.clock,
        };
        let effects = exec_action(action, writer, &env).map_err(|e| e.to_string())?;
        let mut wrote = false;
        let mut sent = BTreeSet::new();
        for eff in &effects {
            match eff {
                Effect::MessageOut { message, dest, records } => {
                    let to = match dest {
                        Destination::LocalService => {
                            model.local_service().map(|s| s.name.clone()).unwrap_or_else(|| "service".into())
                        }
                        Destination::Named(n) => n.clone(),
                        Destination::Environment => "environment".into(),
                    };
                    self.state.temporal.record_send(message, self.state.clock);
                    self.emit_message(TraceKind::MessageSent, vec![message.clone(), to], records);
                    sent.insert(message.clone());
                }
                _ => {
                    apply_effect(&mut self.state.snapshot, eff);
                    wrote |= matches!(eff, Effect::StoreChanged { .. });
                }
            }
        }
        self.state.execs.get_mut(&id).unwrap().effects.extend(effects.iter().cloned());
        for m in sent {
            self.state.events.push_back(EcaEvent::MsgTo(m));
        }
        if wrote {
            self.probe(EcaEvent::DbChanged);
        }
        Ok(effects)
    }

    /// Builds the record carried by a buffer put.
    fn message_record(&self, id: ExecId, message: &str, fields: &[FieldInit], span: Span) -> Result<Record, String> {
        let action = Action {
            kind: ActionKind::Send {
                message: message.to_string(),
                dest: Destination::Environment,
                each: None,
                fields: fields.to_vec(),
            },
            span,
        };
        let bindings = self.bindings_for(Some(id), None);
        let env = EvalEnv {
            snapshot: &self.state.snapshot,
            temporal: &self.state.temporal,
            bindings: &bindings,
            catalog: &self.model.catalog,
            now: self.state.clock,
        };
        match exec_action(&action, WriterKind::Process, &env).map_err(|e| e.to_string())?.pop() {
            Some(Effect::MessageOut { mut records, .. }) => Ok(records.pop().unwrap_or_default()),
            _ => Ok(Record::new()),
        }
    }

    /// Finishes an execution. `forced` carries the outcome of a complex
    /// decision; simple decisions evaluate their rules here.
    pub(super) fn complete(&mut self, id: ExecId, forced: Option<Outcome>) {
        let model = self.model;
        let x = self.state.execs[&id].clone();
        let e = &model.entities[x.entity];
        let now = self.state.clock;
        self.state.temporal.record_completion(&e.name, x.started, now);
        let b = self.bindings_for(Some(id), None);
        if !e.post.iter().all(|p| self.holds(p, &b)) {
            self.emit_detail(TraceKind::TemporalViolation, vec![e.name.clone()], "post");
            self.nf_abort(Some(id), &e.name, "post-condition does not hold");
            return;
        }
        let outcome = match (e.kind, forced) {
            (EntityKind::Decision, Some(o)) => Some((o, "network")),
            (EntityKind::Decision, None) => match self.decide(id) {
                Some(o) => Some(o),
                None => {
                    self.nf_abort(Some(id), &e.name, "no decision rule holds");
                    return;
                }
            },
            _ => None,
        };
        if let Some((o, via)) = outcome {
            let t = self.emit(TraceKind::DecisionOutcome, vec![e.name.clone()]);
            t.outcome = Some(o);
            t.detail = Some(via.to_string());
        }
        let outcome = outcome.map(|(o, _)| o);
        self.emit(TraceKind::EntityCompleted, vec![e.name.clone()]).outcome = outcome;
        {
            let x = self.state.execs.get_mut(&id).unwrap();
            x.status = ExecStatus::Completed;
            x.outcome = outcome;
            x.finish = Some(now);
        }
        if e.kind == EntityKind::Process && !e.is_composite() {
            self.journal(id);
        }
        self.state.events.push_back(match outcome {
            Some(o) => EcaEvent::DecisionEnd(e.name.clone(), o),
            None => EcaEvent::ProcessEnd(e.name.clone()),
        });
        if let Some(act) = x.act {
            self.child_done(act, x.slot, x.entity, outcome);
        }
    }

    /// Journals a completed atomic process and commits it unless a commit
    /// group keeps it open.
    fn journal(&mut self, id: ExecId) {
        let model = self.model;
        let x = &self.state.execs[&id];
        let name = model.entities[x.entity].name.clone();
        let group = x.act.and_then(|a| {
            let act = &self.state.activations[&a];
            model.decompositions[act.decomp].commits.iter().find(|g| g.members.contains(&x.slot)).map(|g| (a, g))
        });
        let scope = group.map(|(a, g)| format!("{}#{a}", g.name));
        self.state.journal.push(JournalEntry {
            exec: id,
            entity: name.clone(),
            started: x.started,
            effects: x.effects.clone(),
            committed: group.is_none(),
            scope: scope.clone(),
        });
        let slot = x.slot;
        match group {
            None => self.emit_detail(TraceKind::Commit, vec![name], "process"),
            Some((a, g)) => {
                let done = self.state.activations.get_mut(&a).unwrap().group_done.entry(g.name.clone()).or_default();
                if !done.contains(&slot) {
                    done.push(slot);
                }
                if g.members.iter().all(|m| done.contains(m)) {
                    done.clear();
                    self.state.journal.commit_scope(scope.as_deref().unwrap());
                    self.emit_detail(TraceKind::Commit, vec![g.name.clone()], "group");
                }
            }
        }
    }

    fn decide(&mut self, id: ExecId) -> Option<(Outcome, &'static str)> {
        let e = &self.model.entities[self.state.execs[&id].entity];
        let rules = e.rules.as_ref()?;
        let b = self.bindings_for(Some(id), None);
        let (p, n) = (self.holds(&rules.positive, &b), self.holds(&rules.negative, &b));
        let count = self.state.decision_counts.entry(e.name.clone()).or_default();
        let occurrence = *count;
        *count += 1;
        match (p, n) {
            (true, false) => Some((Outcome::Positive, "rule")),
            (false, true) => Some((Outcome::Negative, "rule")),
            (true, true) => match self.state.scenario.override_for(&e.name, occurrence) {
                Some(o) => Some((o, "override")),
                None if self.state.draws.below(2) == 0 => Some((Outcome::Positive, "draw")),
                None => Some((Outcome::Negative, "draw")),
            },
            (false, false) => None,
        }
    }

    /// Reacts to a child of `act` finishing: terminators, votes and triggers.
    pub(super) fn child_done(&mut self, act: ActId, slot: EntityId, entity: EntityId, outcome: Option<Outcome>) {
        let model = self.model;
        let a = &self.state.activations[&act];
        if a.closed {
            return;
        }
        let d = &model.decompositions[a.decomp];
        let owner = a.owner;
        let complex = model.entities[self.state.execs[&owner].entity].kind == EntityKind::Decision;
        let mut fired = false;
        if let Some(o) = outcome {
            if complex {
                let terms: Vec<_> = model.entities[entity].terminators.iter().filter(|t| t.outcome == o).collect();
                if let Some(t) = terms.iter().find(|t| t.abort) {
                    let result = t.result;
                    self.close_activation(act);
                    self.complete(owner, Some(result));
                    return;
                }
                for t in &terms {
                    self.state.activations.get_mut(&act).unwrap().votes.push(t.result);
                }
                fired = !terms.is_empty();
            }
        }
        let mut triggered = false;
        for (i, t) in d.triggers.iter().enumerate() {
            if t.from != slot || !(t.outcome.is_none() || t.outcome == outcome) {
                continue;
            }
            triggered = true;
            if model.entities[t.to].kind == EntityKind::Synchroniser {
                *self.state.activations.get_mut(&act).unwrap().tokens.entry(i).or_default() += 1;
            } else {
                let order = self.fresh_id();
                self.state.pending.push(Pending { entity: t.to, slot: t.to, act: Some(act), order });
            }
        }
        // A sub-decision outcome that leads nowhere ends its branch with
        // that outcome.
        if let (true, false, false, Some(o)) = (complex, fired, triggered, outcome) {
            self.state.activations.get_mut(&act).unwrap().votes.push(o);
        }
        self.close_if_quiet(act);
    }

    /// Completes the owner once nothing in the activation can progress.
    pub(super) fn close_if_quiet(&mut self, act: ActId) {
        let model = self.model;
        let a = &self.state.activations[&act];
        if a.closed {
            return;
        }
        let live = self.state.execs.values().any(|x| x.act == Some(act) && x.is_live());
        let pending = self.state.pending.iter().any(|p| p.act == Some(act));
        let d = &model.decompositions[a.decomp];
        let sync_ready = d.children.iter().any(|&c| {
            model.entities[c].kind == EntityKind::Synchroniser && {
                let inputs: Vec<usize> = (0..d.triggers.len()).filter(|&i| d.triggers[i].to == c).collect();
                !inputs.is_empty() && inputs.iter().all(|i| a.tokens.get(i).copied().unwrap_or(0) > 0)
            }
        });
        if live || pending || sync_ready {
            return;
        }
        let owner = a.owner;
        let complex = model.entities[self.state.execs[&owner].entity].kind == EntityKind::Decision;
        let result =
            complex.then(|| if a.votes.contains(&Outcome::Negative) { Outcome::Negative } else { Outcome::Positive });
        self.state.activations.get_mut(&act).unwrap().closed = true;
        let x = self.state.execs.get_mut(&owner).unwrap();
        x.status = ExecStatus::Running;
        self.complete(owner, result);
    }

    /// Cancels everything still running in an activation, silently.
    pub(super) fn close_activation(&mut self, act: ActId) {
        self.state.activations.get_mut(&act).unwrap().closed = true;
        self.state.pending.retain(|p| p.act != Some(act));
        let inner: Vec<ExecId> =
            self.state.execs.values().filter(|x| x.act == Some(act) && x.is_live()).map(|x| x.id).collect();
        for id in inner {
            if let ExecStatus::Composite(child) = self.state.execs[&id].status {
                self.close_activation(child);
            }
            self.state.arrivals.retain(|a| a.exec != id);
            self.state.execs.get_mut(&id).unwrap().status = ExecStatus::Aborted;
        }
    }
}
