//! Static well-formedness checks over a lowered model.
//!
//! Every check is independent and reports under its own code; the result is
//! ordered by code, then by the order in which the model declares things.

mod codes;

use std::collections::{BTreeMap, BTreeSet};

pub use codes::{explain, CodeInfo, UnknownCode, CODES};

use crate::diagnostic::{Diagnostic, Span};
use crate::dsl::ast::SyncOrder;
use crate::expr::{ActionKind, Destination};
use crate::metamodel::{AllocationMode, ConceptRegistry, ObjectNature, Protocol};
use crate::model::{Counterpart, EcaAction, Entity, EntityKind, Event, Rollback, ServiceState, Step, WorkflowModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ValidateOptions {
    pub allocation: AllocationMode,
}

/// Runs every check with default options.
pub fn validate(model: &WorkflowModel, registry: &ConceptRegistry) -> Vec<Diagnostic> {
    validate_with(model, registry, ValidateOptions::default())
}

pub fn validate_with(model: &WorkflowModel, registry: &ConceptRegistry, opts: ValidateOptions) -> Vec<Diagnostic> {
    let v = Validator { m: model, reg: registry };
    let mut out = Vec::new();
    out.extend(v.v001());
    out.extend(v.v002());
    out.extend(v.v003());
    out.extend(v.v004());
    out.extend(v.v005());
    out.extend(v.v006());
    out.extend(v.v007());
    out.extend(v.v008());
    out.extend(v.v009());
    out.extend(v.v010());
    out.extend(v.v011());
    out.extend(v.v012());
    out.extend(v.v013());
    out.extend(v.v014());
    out.extend(v.v015(opts.allocation));
    out.extend(v.v016());
    out.extend(v.v017());
    out.extend(v.v018());
    for d in &mut out {
        if d.anchor.is_none() {
            d.anchor = explain(&d.code).ok().map(|i| i.anchor.to_string());
        }
    }
    out
}

struct Validator<'a> {
    m: &'a WorkflowModel,
    reg: &'a ConceptRegistry,
}

fn err(code: &str, span: Span, msg: String) -> Diagnostic {
    Diagnostic::error(code, span, msg)
}

impl Validator<'_> {
    fn name(&self, e: usize) -> &str {
        &self.m.entities[e].name
    }

    /// Occurrences carrying their own definition. References share the body
    /// of their definition, so checking them again would only repeat findings.
    fn defining(&self) -> impl Iterator<Item = &Entity> {
        self.m.entities.iter().filter(|e| !e.is_reference)
    }

    fn v001(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for e in self.defining() {
            let subj = [e.name.clone()];
            if e.kind != EntityKind::Decision {
                if e.rules.is_some() {
                    out.push(
                        err("V001", e.span, format!("{} \"{}\" declares outcome rules", e.kind.label(), e.name))
                            .with_subjects(subj.clone()),
                    );
                }
                if !e.terminators.is_empty() {
                    out.push(
                        err("V001", e.span, format!("{} \"{}\" declares terminators", e.kind.label(), e.name))
                            .with_subjects(subj.clone()),
                    );
                }
            }
            if e.kind == EntityKind::Synchroniser
                && (e.is_composite()
                    || !e.steps.is_empty()
                    || !e.pre.is_empty()
                    || !e.post.is_empty()
                    || e.duration > 0)
            {
                out.push(
                    err("V001", e.span, format!("synchroniser \"{}\" has a body or a duration", e.name))
                        .with_subjects(subj.clone()),
                );
            }
            if e.is_composite() && !e.steps.is_empty() {
                out.push(
                    err("V001", e.span, format!("\"{}\" has both a decomposition and steps", e.name))
                        .with_subjects(subj),
                );
            }
        }
        for d in &self.m.decompositions {
            for t in &d.triggers {
                if t.outcome.is_some() && self.m.entities[t.from].kind != EntityKind::Decision {
                    out.push(
                        err(
                            "V001",
                            t.span,
                            format!("outcome label on a trigger from non-decision \"{}\"", self.name(t.from)),
                        )
                        .with_subjects([self.name(t.from)]),
                    );
                }
            }
        }
        out
    }

    fn v002(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for pm in &self.m.models {
            if pm.roots.len() != 1 {
                let names: Vec<_> = pm.roots.iter().map(|&r| self.name(r).to_string()).collect();
                out.push(
                    err(
                        "V002",
                        pm.span,
                        format!("model block has {} top-level entities, expected one", pm.roots.len()),
                    )
                    .with_subjects(names),
                );
            }
            for &r in &pm.roots {
                let e = &self.m.entities[r];
                if e.kind != EntityKind::Process {
                    out.push(
                        err("V002", e.span, format!("top-level entity \"{}\" is a {}", e.name, e.kind.label()))
                            .with_subjects([e.name.clone()]),
                    );
                }
            }
        }
        for d in &self.m.decompositions {
            if d.initial.is_empty() {
                let owner = &self.m.entities[d.owner];
                out.push(
                    err("V002", d.span, format!("decomposition of \"{}\" has no initial entity", owner.name))
                        .with_subjects([owner.name.clone()]),
                );
            }
        }
        out
    }

    fn v003(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for d in &self.m.decompositions {
            let owner = &self.m.entities[d.owner].name;
            let local = |e: usize| self.m.entities[e].parent_decomp == Some(d.id);
            for t in &d.triggers {
                for end in [t.from, t.to] {
                    if !local(end) {
                        out.push(
                            err(
                                "V003",
                                t.span,
                                format!("trigger inside \"{owner}\" reaches \"{}\" outside the body", self.name(end)),
                            )
                            .with_subjects([self.name(t.from), self.name(t.to)]),
                        );
                        break;
                    }
                }
            }
            for &i in &d.initial {
                if !local(i) {
                    out.push(
                        err(
                            "V003",
                            d.span,
                            format!("initial entity \"{}\" is not a child of \"{owner}\"", self.name(i)),
                        )
                        .with_subjects([self.name(i)]),
                    );
                }
            }
            for c in &d.commits {
                for &m in &c.members {
                    if !local(m) {
                        out.push(
                            err(
                                "V003",
                                c.span,
                                format!("commit group \"{}\" names \"{}\" outside \"{owner}\"", c.name, self.name(m)),
                            )
                            .with_subjects([self.name(m)]),
                        );
                    }
                }
            }
        }
        out
    }

    fn v004(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (name, b) in &self.m.buffers {
            let Some((from, to)) = b.endpoints else { continue };
            let (a, z) = (&self.m.entities[from], &self.m.entities[to]);
            if a.parent_decomp != z.parent_decomp {
                out.push(
                    err(
                        "V004",
                        self.messaging_span(name, from, to),
                        format!("\"{}\" and \"{}\" exchange messages across decompositions", a.name, z.name),
                    )
                    .with_subjects([a.name.clone(), z.name.clone()]),
                );
            }
        }
        out
    }

    fn messaging_span(&self, buffer: &str, from: usize, to: usize) -> Span {
        for id in [from, to] {
            for s in &self.m.entities[id].steps {
                match s {
                    Step::Put { buffer: b, span, .. } | Step::Take { buffer: b, span, .. } if b == buffer => {
                        return *span
                    }
                    _ => {}
                }
            }
        }
        self.m.entities[from].span
    }

    fn v005(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for d in &self.m.decompositions {
            let owner = &self.m.entities[d.owner];
            if owner.kind != EntityKind::Decision {
                continue;
            }
            for &c in &d.children {
                let child = &self.m.entities[c];
                if child.kind == EntityKind::Process {
                    out.push(
                        err(
                            "V005",
                            child.span,
                            format!("process \"{}\" inside complex decision \"{}\"", child.name, owner.name),
                        )
                        .with_subjects([owner.name.clone(), child.name.clone()]),
                    );
                }
            }
        }
        out
    }

    fn v006(&self) -> Vec<Diagnostic> {
        let mut levels: Vec<Vec<usize>> = self.m.decompositions.iter().map(|d| d.children.clone()).collect();
        levels.push(self.m.roots().map(|e| e.id).collect());
        let mut out = Vec::new();
        for level in levels {
            let mut seen: BTreeMap<&str, EntityKind> = BTreeMap::new();
            for id in level {
                let e = &self.m.entities[id];
                match seen.get(e.name.as_str()) {
                    Some(&k) if k != e.kind && k != EntityKind::Synchroniser && e.kind != EntityKind::Synchroniser => {
                        out.push(
                            err(
                                "V006",
                                e.span,
                                format!("\"{}\" names both a process and a decision at one level", e.name),
                            )
                            .with_subjects([e.name.clone()]),
                        );
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(&e.name, e.kind);
                    }
                }
            }
        }
        out
    }

    fn v007(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for e in self.defining() {
            for (v, _) in &e.vars {
                if e.uses.contains(v) {
                    out.push(
                        err(
                            "V007",
                            e.span,
                            format!("\"{}\" declares variable `{v}` that is also a used store", e.name),
                        )
                        .with_subjects([e.name.clone(), v.clone()]),
                    );
                }
            }
        }
        out
    }

    fn v008(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for e in self.defining() {
            let Some(sup) = e.sup else { continue };
            let allowed = &self.m.entities[sup].uses;
            let mut needed: BTreeSet<String> = e.consumes().into_iter().chain(e.produces()).collect();
            needed.extend(e.uses.iter().cloned());
            for s in needed {
                if self.m.buffers.get(&s).is_some_and(|b| b.is_hidden()) || allowed.contains(&s) {
                    continue;
                }
                out.push(
                    err(
                        "V008",
                        e.span,
                        format!("\"{}\" accesses \"{s}\" which \"{}\" does not use", e.name, self.name(sup)),
                    )
                    .with_subjects([e.name.clone(), s]),
                );
            }
        }
        out
    }

    fn v009(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for e in self.defining() {
            for s in &e.steps {
                let (Step::Put { message, buffer, span, .. } | Step::Take { message, buffer, span }) = s else {
                    continue;
                };
                let Some(b) = self.m.buffers.get(buffer) else { continue };
                if !b.accepts.contains(message) {
                    out.push(
                        err("V009", *span, format!("buffer \"{buffer}\" is not allocated message \"{message}\""))
                            .with_subjects([buffer.clone(), message.clone()]),
                    );
                }
            }
        }
        for (name, b) in &self.m.buffers {
            let Protocol::Predicate(field) = &b.protocol else { continue };
            for m in &b.accepts {
                if self.m.catalog.messages.get(m).is_some_and(|s| s.field(field).is_none()) {
                    out.push(
                        err(
                            "V009",
                            Span::default(),
                            format!("predicate field `{field}` of \"{name}\" is missing from \"{m}\""),
                        )
                        .with_subjects([name.clone(), m.clone()]),
                    );
                }
            }
        }
        out
    }

    fn v010(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for e in self.defining() {
            for s in &e.steps {
                let bad = match s {
                    Step::Receive { from: Counterpart::Other(n), span, .. } => {
                        Some((*span, format!("\"{}\" receives from \"{n}\", which is not a service", e.name)))
                    }
                    Step::Receive { from: Counterpart::Remote(n), span, .. } => {
                        Some((*span, format!("\"{}\" receives directly from remote service \"{n}\"", e.name)))
                    }
                    Step::Sync { counterpart: Counterpart::Other(n), span, .. } => {
                        Some((*span, format!("\"{}\" calls \"{n}\", which is not a service", e.name)))
                    }
                    Step::Sync { counterpart: Counterpart::Entity(t), span, .. } => {
                        Some((*span, format!("\"{}\" calls entity \"{}\" synchronously", e.name, self.name(*t))))
                    }
                    Step::Action(a) => match &a.kind {
                        ActionKind::Send { dest: Destination::Named(n), .. }
                            if !self.m.service_decls.contains_key(n) =>
                        {
                            Some((a.span, format!("\"{}\" sends to \"{n}\", which is not a service", e.name)))
                        }
                        _ => None,
                    },
                    _ => None,
                };
                if let Some((span, msg)) = bad {
                    out.push(err("V010", span, msg).with_subjects([e.name.clone()]));
                }
            }
        }
        out
    }

    fn v011(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for e in self.defining() {
            for s in &e.steps {
                if let Step::Sync { order: SyncOrder::ReceiveFirst, message, span, .. } = s {
                    out.push(
                        err(
                            "V011",
                            *span,
                            format!("synchronous exchange of \"{message}\" in \"{}\" waits before sending", e.name),
                        )
                        .with_subjects([e.name.clone()]),
                    );
                }
            }
        }
        out
    }

    fn v012(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for svc in &self.m.services {
            let mut edges: BTreeMap<&ServiceState, Vec<&ServiceState>> = BTreeMap::new();
            for r in &svc.rules {
                if let Some(t) = &r.target {
                    edges.entry(&r.source).or_default().push(t);
                }
            }
            let reach = |from: &ServiceState| {
                let mut seen = BTreeSet::new();
                let mut stack = vec![from.clone()];
                while let Some(s) = stack.pop() {
                    if seen.insert(s.clone()) {
                        for t in edges.get(&s).into_iter().flatten() {
                            stack.push((*t).clone());
                        }
                    }
                }
                seen
            };
            let from_birth = reach(&ServiceState::Birth);
            for st in &svc.states {
                let s = ServiceState::Named(st.name.clone());
                if !from_birth.contains(&s) {
                    out.push(
                        Diagnostic::warning(
                            "V012",
                            st.span,
                            format!("state \"{}\" of \"{}\" is unreachable from birth", st.name, svc.name),
                        )
                        .with_subjects([svc.name.clone(), st.name.clone()]),
                    );
                } else if !reach(&s).contains(&ServiceState::Death) {
                    out.push(
                        Diagnostic::warning(
                            "V012",
                            st.span,
                            format!("death is unreachable from state \"{}\" of \"{}\"", st.name, svc.name),
                        )
                        .with_subjects([svc.name.clone(), st.name.clone()]),
                    );
                }
            }
            if !from_birth.contains(&ServiceState::Death) && svc.states.is_empty() {
                out.push(
                    Diagnostic::warning("V012", svc.span, format!("\"{}\" never reaches death", svc.name))
                        .with_subjects([svc.name.clone()]),
                );
            }
        }
        out
    }

    fn v013(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let m = self.m;
        let kind_of = |n: &str| m.find(n).map(|e| e.kind);
        for svc in &m.services {
            let declared: BTreeSet<&str> = svc.states.iter().map(|s| s.name.as_str()).collect();
            for r in &svc.rules {
                let span_of = |n: &str| r.name_spans.iter().find(|(x, _)| x == n).map(|(_, s)| *s).unwrap_or(r.span);
                let mut bad = |name: &str, msg: String| {
                    out.push(
                        err("V013", span_of(name), format!("{}: {msg}", r.id))
                            .with_subjects([r.id.clone(), name.to_string()]),
                    );
                };
                for s in std::iter::once(&r.source).chain(&r.target) {
                    if let ServiceState::Named(n) = s {
                        if !declared.contains(n.as_str()) {
                            bad(n, format!("undeclared state \"{n}\""));
                        }
                    }
                }
                if r.target == Some(ServiceState::Birth) {
                    bad("birth", "transition into birth".into());
                }
                if r.source == ServiceState::Death {
                    bad("death", "rule leaving death".into());
                }
                let message = |n: &str| m.catalog.messages.contains_key(n);
                match &r.event {
                    Event::MsgFrom(n) | Event::MsgTo(n) if !message(n) => bad(n, format!("unknown message \"{n}\"")),
                    Event::DecisionEnd(n, _) if kind_of(n) != Some(EntityKind::Decision) => {
                        bad(n, format!("\"{n}\" is not a decision"))
                    }
                    Event::ProcessStart(n) | Event::ProcessEnd(n) | Event::ProcessStartFailed(n, _)
                        if kind_of(n) != Some(EntityKind::Process) =>
                    {
                        bad(n, format!("\"{n}\" is not a process"))
                    }
                    _ => {}
                }
                for a in &r.actions {
                    match a {
                        EcaAction::Forward { message: msg, to } => {
                            if !message(msg) {
                                bad(msg, format!("unknown message \"{msg}\""));
                            }
                            if kind_of(to) != Some(EntityKind::Process) {
                                bad(to, format!("forward target \"{to}\" is not a process"));
                            }
                        }
                        EcaAction::Trigger(n) => {
                            if !m.roots().any(|e| &e.name == n) {
                                bad(n, format!("trigger target \"{n}\" is not a top-level process"));
                            }
                        }
                        EcaAction::Send { message: msg, to } => {
                            if !message(msg) {
                                bad(msg, format!("unknown message \"{msg}\""));
                            }
                            if !m.service_decls.contains_key(to) {
                                bad(to, format!("send target \"{to}\" is not a service"));
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn v014(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (name, spec) in &self.m.recovery {
            let mut bad = |msg: String| out.push(err("V014", spec.span, msg).with_subjects([name.clone()]));
            let Some(e) = self.m.find(name) else {
                bad(format!("recovery entry for unknown entity \"{name}\""));
                continue;
            };
            if e.kind == EntityKind::Decision && spec.rollback != Rollback::Null {
                bad(format!("decision \"{name}\" cannot be rolled back"));
            }
            if let Rollback::Compensate(c) = &spec.rollback {
                if c == name {
                    bad(format!("\"{name}\" compensates itself"));
                } else if self.m.find(c).is_none() {
                    bad(format!("compensation \"{c}\" of \"{name}\" does not exist"));
                }
            }
            let mut last = 0;
            let mut unbounded = 0;
            for (i, r) in spec.ladder.iter().enumerate() {
                match r.threshold {
                    Some(k) if unbounded > 0 => bad(format!("threshold {k} follows the unbounded rung")),
                    Some(k) if k <= last => bad(format!("threshold {k} does not exceed {last}")),
                    Some(k) => last = k,
                    None => {
                        unbounded += 1;
                        if unbounded > 1 {
                            bad("more than one unbounded rung".into());
                        }
                    }
                }
                if let Some(t) = &r.target {
                    if self.m.find(t).is_none() {
                        bad(format!("contingency \"{t}\" (rung {}) does not exist", i + 1));
                    }
                }
            }
        }
        out
    }

    fn v015(&self, mode: AllocationMode) -> Vec<Diagnostic> {
        let mut out = self.reg.check_allocation_axiom(mode);
        for d in &mut out {
            if let Some(e) = d.subjects.get(2).and_then(|p| self.m.find(p)) {
                d.span = e.span;
            }
        }
        out
    }

    fn v016(&self) -> Vec<Diagnostic> {
        self.m
            .suborg_cycles
            .iter()
            .map(|(child, parent, span)| {
                err("V016", *span, format!("placing \"{child}\" in \"{parent}\" closes a cycle"))
                    .with_subjects([child.clone(), parent.clone()])
            })
            .collect()
    }

    fn v017(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (name, s) in &self.m.stores {
            let natures: BTreeSet<_> = s
                .holds
                .iter()
                .filter_map(|o| self.m.object_natures.get(o))
                .map(|n| matches!(n, ObjectNature::Material))
                .collect();
            if natures.len() > 1 {
                out.push(
                    err("V017", Span::default(), format!("store \"{name}\" mixes material and informational objects"))
                        .with_subjects(std::iter::once(name.clone()).chain(s.holds.iter().cloned())),
                );
            }
        }
        out
    }

    fn v018(&self) -> Vec<Diagnostic> {
        self.defining()
            .filter(|e| e.exclusive && e.kind != EntityKind::Process)
            .map(|e| {
                err("V018", e.span, format!("{} \"{}\" is marked exclusive", e.kind.label(), e.name))
                    .with_subjects([e.name.clone()])
            })
            .collect()
    }
}
