//! Service-model rules: matching events, state transitions and actions.

use super::engine::Engine;
use super::state::*;
use super::trace::TraceKind;
use crate::model::{EcaAction, EcaRule, Event, ServiceState};

impl Engine<'_> {
    fn matches(&self, rule: &EcaRule, ev: &EcaEvent) -> bool {
        let b = self.bindings_for(None, None);
        let event_ok = match (&rule.event, ev) {
            (Event::MsgFrom(a), EcaEvent::MsgFrom(b)) | (Event::MsgTo(a), EcaEvent::MsgTo(b)) => a == b,
            (Event::DbState(e), EcaEvent::DbChanged) | (Event::Timer(e), EcaEvent::Tick) => self.holds(e, &b),
            (Event::DecisionEnd(a, o), EcaEvent::DecisionEnd(b, p)) => a == b && o == p,
            (Event::ProcessStart(a), EcaEvent::ProcessStart(b)) | (Event::ProcessEnd(a), EcaEvent::ProcessEnd(b)) => {
                a == b
            }
            (Event::ProcessStartFailed(a, k), EcaEvent::StartFailed(b, n)) => a == b && k == n,
            (Event::Abort(k), EcaEvent::Abort(j)) => k == j,
            _ => false,
        };
        event_ok && rule.cond.as_ref().is_none_or(|c| self.holds(c, &b))
    }

    /// Fires the first rule of the current state matching `ev`; later
    /// matches are reported as shadowed. Returns the ids of fired rules.
    pub fn dispatch_eca(&mut self, ev: &EcaEvent) -> Vec<String> {
        if self.state.terminated {
            return Vec::new();
        }
        let matching: Vec<&EcaRule> = self.current_rules().filter(|r| self.matches(r, ev)).collect();
        let Some((rule, shadowed)) = matching.split_first() else { return Vec::new() };
        for s in shadowed {
            self.emit_detail(TraceKind::RuleShadowed, vec![s.id.clone()], rule.id.clone());
        }
        match &rule.target {
            Some(to) => {
                let from = self.state.service.state.clone();
                let now = self.state.clock;
                let t = self.emit(TraceKind::StateTransition, vec![from.to_string(), to.to_string()]);
                t.detail = Some(rule.id.clone());
                if *to != from {
                    self.state.service.entered = now;
                }
                self.state.service.state = to.clone();
                self.state.service.history.push(Transition { from, to: to.clone(), rule: rule.id.clone(), at: now });
                if let ServiceState::Named(n) = to {
                    self.state.temporal.record_state(n, now);
                }
            }
            None => {
                self.emit(TraceKind::RuleFired, vec![rule.id.clone()]);
            }
        }
        for a in &rule.actions {
            self.eca_action(&rule.id, a);
        }
        if rule.target == Some(ServiceState::Death) {
            self.emit(TraceKind::Death, vec![self.model.local_service().map(|s| s.name.clone()).unwrap_or_default()]);
            self.state.terminated = true;
        } else if rule.target.is_some() {
            self.probe(EcaEvent::Tick);
            self.probe(EcaEvent::DbChanged);
        }
        vec![rule.id.clone()]
    }

    fn eca_action(&mut self, rule: &str, action: &EcaAction) {
        match action {
            EcaAction::Forward { message, to } => {
                if let Some(records) = self.state.messages.get(message).cloned() {
                    self.state.inbox.entry(message.clone()).or_default().push_back(records);
                }
                self.start_root(rule, to);
            }
            EcaAction::Trigger(name) => self.start_root(rule, name),
            EcaAction::Send { message, to } => {
                self.state.temporal.record_send(message, self.state.clock);
                self.emit_message(TraceKind::MessageSent, vec![message.clone(), to.clone()], &[Default::default()]);
            }
        }
    }

    /// Queues a top-level process unless it is already running.
    fn start_root(&mut self, rule: &str, name: &str) {
        let Some(root) = self.model.roots().find(|e| e.name == name).map(|e| e.id) else { return };
        let active = self.state.execs.values().any(|x| x.entity == root && x.is_live())
            || self.state.pending.iter().any(|p| p.entity == root && p.act.is_none());
        if active {
            return;
        }
        self.emit_detail(TraceKind::Triggered, vec![name.to_string()], rule.to_string());
        let order = self.fresh_id();
        self.state.pending.push(Pending { entity: root, slot: root, act: None, order });
    }
}
