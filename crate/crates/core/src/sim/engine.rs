use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::buffer::{Buffer, Draws};
use super::journal::Journal;
use super::scenario::{InjectionKind, Scenario};
use super::state::*;
use super::trace::{payload_digest, TraceEntry, TraceKind};
use super::SimError;
use crate::expr::{Bindings, EvalEnv, Record, StoreSnapshot, TemporalIndex};
use crate::metamodel::ConceptRegistry;
use crate::model::{EntityId, EntityKind, Event, ServiceState, WorkflowModel};
use crate::validate::validate;

pub const CHECKPOINT_VERSION: u32 = 1;

/// How a run ended without error.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_state: String,
    pub steps: u64,
    pub trace_len: usize,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    model: String,
    state: EngineState,
}

pub struct Engine<'m> {
    pub(super) model: &'m WorkflowModel,
    pub state: EngineState,
    trace: Vec<TraceEntry>,
    /// Entries emitted by the step in progress.
    pub(super) fresh: Vec<TraceEntry>,
}

/// Creates an engine at birth for a model that validates without errors.
pub fn init_instance<'m>(
    model: &'m WorkflowModel,
    registry: &ConceptRegistry,
    scenario: Scenario,
    seed: u64,
) -> Result<Engine<'m>, SimError> {
    let errors: Vec<_> = validate(model, registry).into_iter().filter(|d| d.is_error()).collect();
    if !errors.is_empty() {
        return Err(SimError::ModelInvalid(errors));
    }
    Ok(Engine::new_unchecked(model, scenario, seed))
}

impl<'m> Engine<'m> {
    /// Skips validation. Useful for generated models known to be well formed.
    pub fn new_unchecked(model: &'m WorkflowModel, scenario: Scenario, seed: u64) -> Self {
        let buffers = model.buffers.iter().map(|(n, b)| (n.clone(), Buffer::new(b.protocol.clone()))).collect();
        let replies = scenario.replies.iter().map(|(s, r)| (s.clone(), r.iter().cloned().collect())).collect();
        let state = EngineState {
            clock: 0,
            draws: Draws::new(seed),
            service: ServiceInstance { state: ServiceState::Birth, entered: 0, history: Vec::new() },
            terminated: false,
            execs: BTreeMap::new(),
            activations: BTreeMap::new(),
            pending: Vec::new(),
            arrivals: Vec::new(),
            buffers,
            inbox: BTreeMap::new(),
            messages: BTreeMap::new(),
            snapshot: StoreSnapshot::default(),
            temporal: TemporalIndex::default(),
            journal: Journal::default(),
            events: VecDeque::new(),
            fail_pending: BTreeMap::new(),
            fail_counts: BTreeMap::new(),
            decision_counts: BTreeMap::new(),
            replies,
            scenario,
            next_injection: 0,
            quiescing: false,
            steps: 0,
            seq: 0,
            next_id: 0,
        };
        Engine { model, state, trace: Vec::new(), fresh: Vec::new() }
    }

    pub fn model(&self) -> &'m WorkflowModel {
        self.model
    }

    pub fn trace(&self) -> &[TraceEntry] {
        &self.trace
    }

    pub fn service_state(&self) -> &ServiceState {
        &self.state.service.state
    }

    pub fn is_dead(&self) -> bool {
        self.state.terminated
    }

    pub fn checkpoint(&self) -> String {
        let cp = Checkpoint { version: CHECKPOINT_VERSION, model: self.model.digest(), state: self.state.clone() };
        serde_json::to_string(&cp).expect("engine state serialises")
    }

    pub fn restore(model: &'m WorkflowModel, text: &str) -> Result<Self, SimError> {
        let cp: Checkpoint = serde_json::from_str(text).map_err(|e| SimError::Checkpoint(e.to_string()))?;
        if cp.version != CHECKPOINT_VERSION {
            return Err(SimError::Checkpoint(format!("unsupported checkpoint version {}", cp.version)));
        }
        if cp.model != model.digest() {
            return Err(SimError::Checkpoint("checkpoint belongs to a different model".into()));
        }
        Ok(Engine { model, state: cp.state, trace: Vec::new(), fresh: Vec::new() })
    }

    /// Executes one scheduling micro-step and returns the entries it emitted.
    pub fn step(&mut self) -> Result<Vec<TraceEntry>, SimError> {
        if self.state.terminated {
            return Err(SimError::Terminated);
        }
        let progressed = self.resume_one()
            || self.dispatch_next_event()
            || self.fire_synchroniser()
            || self.start_next()
            || self.complete_next()
            || self.advance();
        if !progressed {
            return Err(SimError::StuckState { state: self.state.service.state.to_string() });
        }
        self.state.steps += 1;
        let fresh = std::mem::take(&mut self.fresh);
        self.trace.extend(fresh.iter().cloned());
        Ok(fresh)
    }

    /// Steps until death. The trace so far stays available on error.
    pub fn run(&mut self, max_steps: u64) -> Result<RunSummary, SimError> {
        let mut budget = max_steps;
        while !self.state.terminated {
            if budget == 0 {
                return Err(SimError::BudgetExhausted { steps: max_steps });
            }
            budget -= 1;
            self.step()?;
        }
        Ok(RunSummary { final_state: self.final_state(), steps: self.state.steps, trace_len: self.trace.len() })
    }

    /// The last named state entered, or the current one.
    pub fn final_state(&self) -> String {
        let s = &self.state.service;
        match (&s.state, s.history.last()) {
            (ServiceState::Death, Some(t)) => t.from.to_string(),
            (st, _) => st.to_string(),
        }
    }

    // ---- trace and helpers -------------------------------------------------

    pub(super) fn emit(&mut self, kind: TraceKind, subject: Vec<String>) -> &mut TraceEntry {
        self.state.seq += 1;
        self.fresh.push(TraceEntry {
            seq: self.state.seq,
            clock: self.state.clock,
            kind,
            subject,
            outcome: None,
            detail: None,
            digest: None,
        });
        self.fresh.last_mut().unwrap()
    }

    pub(super) fn emit_detail(&mut self, kind: TraceKind, subject: Vec<String>, detail: impl Into<String>) {
        self.emit(kind, subject).detail = Some(detail.into());
    }

    pub(super) fn emit_message(&mut self, kind: TraceKind, subject: Vec<String>, records: &[Record]) {
        self.emit(kind, subject).digest = Some(payload_digest(records));
    }

    pub(super) fn name(&self, e: EntityId) -> &'m str {
        &self.model.entities[e].name
    }

    pub(super) fn fresh_id(&mut self) -> u64 {
        self.state.next_id += 1;
        self.state.next_id
    }

    pub(super) fn bindings_for(&self, exec: Option<ExecId>, pending_start: Option<&str>) -> Bindings {
        let mut chain = Vec::new();
        let mut cur = exec;
        while let Some(id) = cur {
            chain.push(id);
            cur = self.state.execs[&id].act.map(|a| self.state.activations[&a].owner);
        }
        let mut vars = BTreeMap::new();
        for id in chain.into_iter().rev() {
            for (n, v) in self.state.snapshot.vars.get(&id).into_iter().flatten() {
                vars.insert(n.clone(), (id, v.clone()));
            }
        }
        Bindings { vars, messages: self.state.messages.clone(), pending_start: pending_start.map(str::to_string) }
    }

    /// Evaluates a predicate; facts that do not exist yet read as false.
    pub(super) fn holds(&self, expr: &crate::expr::Expr, bindings: &Bindings) -> bool {
        let env = EvalEnv {
            snapshot: &self.state.snapshot,
            temporal: &self.state.temporal,
            bindings,
            catalog: &self.model.catalog,
            now: self.state.clock,
        };
        crate::expr::eval_predicate(expr, &env).unwrap_or(false)
    }

    /// Queues a probe event only when some rule of the current state could
    /// react to it.
    pub(super) fn probe(&mut self, ev: EcaEvent) {
        let wanted = self.current_rules().any(|r| {
            matches!((&r.event, &ev), (Event::DbState(_), EcaEvent::DbChanged) | (Event::Timer(_), EcaEvent::Tick))
        });
        if wanted && self.state.events.back() != Some(&ev) {
            self.state.events.push_back(ev);
        }
    }

    pub(super) fn current_rules(&self) -> impl Iterator<Item = &'m crate::model::EcaRule> + '_ {
        let cur = self.state.service.state.clone();
        self.model.local_service().into_iter().flat_map(|s| &s.rules).filter(move |r| r.source == cur)
    }

    pub(super) fn set_clock(&mut self, t: i64) {
        if t > self.state.clock {
            self.state.clock = t;
            self.probe(EcaEvent::Tick);
        }
    }

    // ---- scheduling levels -------------------------------------------------

    /// Level 1: suspended or waiting executions whose input is now there.
    fn resume_one(&mut self) -> bool {
        let now = self.state.clock;
        let ready = self.state.execs.values().find_map(|x| match &x.status {
            ExecStatus::Waiting(w) => {
                let ok = match w {
                    Wait::Reply { .. } => self.state.arrivals.iter().any(|a| a.exec == x.id && a.at <= now),
                    Wait::Take { buffer, message } => {
                        self.state.buffers.get(buffer).is_some_and(|b| b.has(Some(message)))
                    }
                    Wait::Inbox { message } => self.state.inbox.get(message).is_some_and(|q| !q.is_empty()),
                    Wait::Pre { deadline } => *deadline <= now || self.pre_holds(x.id),
                };
                ok.then_some(x.id)
            }
            _ => None,
        });
        let Some(id) = ready else { return false };
        match self.state.execs[&id].status.clone() {
            ExecStatus::Waiting(Wait::Reply { service, .. }) => {
                let idx = self.state.arrivals.iter().position(|a| a.exec == id && a.at <= now).unwrap();
                let a = self.state.arrivals.remove(idx);
                self.receive_into(&a.message, a.records, vec![a.message.clone(), service]);
                self.state.execs.get_mut(&id).unwrap().status = ExecStatus::Running;
                self.run_steps(id);
            }
            ExecStatus::Waiting(Wait::Pre { .. }) => self.retry_pre(id),
            _ => {
                self.state.execs.get_mut(&id).unwrap().status = ExecStatus::Running;
                self.run_steps(id);
            }
        }
        true
    }

    /// Level 2.
    fn dispatch_next_event(&mut self) -> bool {
        match self.state.events.pop_front() {
            Some(ev) => {
                self.dispatch_eca(&ev);
                true
            }
            None => false,
        }
    }

    /// Level 3: AND-joins whose every input has a token.
    fn fire_synchroniser(&mut self) -> bool {
        let model = self.model;
        let mut found = None;
        'outer: for act in self.state.activations.values().filter(|a| !a.closed) {
            let d = &model.decompositions[act.decomp];
            for &c in &d.children {
                if model.entities[c].kind != EntityKind::Synchroniser {
                    continue;
                }
                let inputs: Vec<usize> = (0..d.triggers.len()).filter(|&i| d.triggers[i].to == c).collect();
                if !inputs.is_empty() && inputs.iter().all(|i| act.tokens.get(i).copied().unwrap_or(0) > 0) {
                    found = Some((act.id, c, inputs));
                    break 'outer;
                }
            }
        }
        let Some((act, sync, inputs)) = found else { return false };
        let a = self.state.activations.get_mut(&act).unwrap();
        for i in inputs {
            *a.tokens.get_mut(&i).unwrap() -= 1;
        }
        let id = self.fresh_id();
        let now = self.state.clock;
        self.state.execs.insert(
            id,
            Exec {
                id,
                entity: sync,
                slot: sync,
                act: Some(act),
                status: ExecStatus::Completed,
                started: now,
                pc: 0,
                finish: Some(now),
                effects: Vec::new(),
                outcome: None,
            },
        );
        let name = self.name(sync).to_string();
        self.emit(TraceKind::EntityStarted, vec![name.clone()]);
        self.emit(TraceKind::EntityCompleted, vec![name]);
        self.child_done(act, sync, sync, None);
        true
    }

    /// Level 4: the pending start of the earliest-declared entity.
    fn start_next(&mut self) -> bool {
        if self.state.pending.is_empty() {
            return false;
        }
        let model = self.model;
        let exclusive_running =
            self.state.execs.values().find(|x| x.is_live() && model.entities[x.entity].exclusive).map(|x| x.id);
        let eligible = |p: &Pending| match exclusive_running {
            Some(x) => p.act.is_some_and(|a| self.descends_from(a, x)),
            None => true,
        };
        let Some(idx) = (0..self.state.pending.len())
            .filter(|&i| eligible(&self.state.pending[i]))
            .min_by_key(|&i| (self.state.pending[i].entity, self.state.pending[i].order))
        else {
            return false;
        };
        let exclusive_waiting =
            exclusive_running.is_none() && self.state.pending.iter().any(|p| model.entities[p.entity].exclusive);
        let idx = if exclusive_waiting {
            let busy = self.state.execs.values().any(|x| x.is_busy());
            let first = (0..self.state.pending.len())
                .filter(|&i| model.entities[self.state.pending[i].entity].exclusive)
                .min_by_key(|&i| (self.state.pending[i].entity, self.state.pending[i].order))
                .unwrap();
            if busy {
                if self.state.quiescing {
                    return false;
                }
                self.state.quiescing = true;
                let n = self.name(self.state.pending[first].entity).to_string();
                self.emit(TraceKind::Quiesce, vec![n]);
                return true;
            }
            first
        } else {
            idx
        };
        self.state.quiescing = false;
        let p = self.state.pending.remove(idx);
        self.attempt_start(p);
        true
    }

    fn descends_from(&self, mut act: ActId, exec: ExecId) -> bool {
        loop {
            let owner = self.state.activations[&act].owner;
            if owner == exec {
                return true;
            }
            match self.state.execs[&owner].act {
                Some(a) => act = a,
                None => return false,
            }
        }
    }

    /// Finished executions whose duration has elapsed.
    fn complete_next(&mut self) -> bool {
        let now = self.state.clock;
        let next = self
            .state
            .execs
            .values()
            .filter(|x| x.status == ExecStatus::Running && x.finish.is_some_and(|f| f <= now))
            .min_by_key(|x| (x.finish, x.id))
            .map(|x| x.id);
        match next {
            Some(id) => {
                self.complete(id, None);
                true
            }
            None => false,
        }
    }

    /// Level 5: next injection, or the clock moves to the next timed event.
    fn advance(&mut self) -> bool {
        let now = self.state.clock;
        let timed = self
            .state
            .execs
            .values()
            .filter_map(|x| match &x.status {
                ExecStatus::Running => x.finish,
                ExecStatus::Waiting(Wait::Pre { deadline }) => Some(*deadline),
                _ => None,
            })
            .chain(self.state.arrivals.iter().map(|a| a.at))
            .filter(|&t| t > now)
            .min();
        let inj = self.state.scenario.injections.get(self.state.next_injection).cloned();
        match (inj, timed) {
            (Some(inj), t) if t.is_none_or(|t| inj.t <= t) => {
                self.state.next_injection += 1;
                self.set_clock(inj.t);
                self.inject(inj.kind);
                true
            }
            (_, Some(t)) => {
                self.set_clock(t);
                true
            }
            _ => false,
        }
    }

    fn inject(&mut self, kind: InjectionKind) {
        match kind {
            InjectionKind::Message { message, records } => {
                self.receive_into(&message, records, vec![message.clone(), "environment".into()]);
                self.state.events.push_back(EcaEvent::MsgFrom(message));
            }
            InjectionKind::FailStart { entity, count } => {
                *self.state.fail_pending.entry(entity).or_default() += count;
            }
            InjectionKind::FAbort { entity } => match self.live_exec_named(&entity) {
                Some(id) => self.fail_running(id),
                None => *self.state.fail_pending.entry(entity).or_default() += 1,
            },
            InjectionKind::NfAbort { entity } => {
                let target = entity.as_deref().and_then(|n| self.live_exec_named(n));
                let label = entity.unwrap_or_else(|| "service".into());
                self.nf_abort(target, &label, "injected");
            }
            InjectionKind::Clock => {}
        }
    }

    /// Latest live execution of the named entity or occupying its slot.
    pub(super) fn live_exec_named(&self, name: &str) -> Option<ExecId> {
        self.state
            .execs
            .values()
            .rev()
            .find(|x| x.is_live() && (self.name(x.entity) == name || self.name(x.slot) == name))
            .map(|x| x.id)
    }

    /// Records the arrival of a message instance and binds it as the latest.
    pub(super) fn receive_into(&mut self, message: &str, records: Vec<Record>, subject: Vec<String>) {
        let now = self.state.clock;
        self.state.temporal.record_receive(message, now);
        self.emit_message(TraceKind::MessageReceived, subject, &records);
        self.state.messages.insert(message.to_string(), records);
    }
}
