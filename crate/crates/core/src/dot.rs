//! Graphviz rendering of a model.
//!
//! Node ids: `e{n}` for entities, `x{n}` for services, `s{i}_{n}` for the
//! states of service model `i`. Triggers and state transitions are solid edges, messaging is
//! dashed.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::dsl::quote;
use crate::expr::{ActionKind, Destination};
use crate::model::{Counterpart, DecompId, EntityKind, ServiceState, Step, WorkflowModel};

fn shape(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::Process => "box",
        EntityKind::Decision => "diamond",
        EntityKind::Synchroniser => "circle",
    }
}

struct Dot<'m> {
    m: &'m WorkflowModel,
    out: String,
    services: Vec<String>,
}

impl Dot<'_> {
    fn line(&mut self, depth: usize, text: impl AsRef<str>) {
        let _ = writeln!(self.out, "{:indent$}{}", "", text.as_ref(), indent = depth * 2);
    }

    fn service(&mut self, name: &str) -> String {
        let i = match self.services.iter().position(|s| s == name) {
            Some(i) => i,
            None => {
                self.services.push(name.to_string());
                self.services.len() - 1
            }
        };
        format!("x{i}")
    }

    fn node(&mut self, depth: usize, id: usize) {
        let e = &self.m.entities[id];
        let style = if e.is_reference { ", style=dashed" } else { "" };
        self.line(depth, format!("e{id} [label={}, shape={}{style}];", quote(&e.name), shape(e.kind)));
        if let Some(d) = e.decomposition.filter(|_| !e.is_reference) {
            self.cluster(depth, d);
        }
    }

    fn cluster(&mut self, depth: usize, d: DecompId) {
        let dec = &self.m.decompositions[d];
        self.line(depth, format!("subgraph cluster_d{d} {{"));
        self.line(depth + 1, format!("label={};", quote(&self.m.entities[dec.owner].name)));
        for &c in &dec.children {
            self.node(depth + 1, c);
        }
        self.line(depth, "}");
    }

    fn messaging(&mut self) {
        let m = self.m;
        let local = m.local_service().map(|s| s.name.clone()).unwrap_or_else(|| "service".into());
        let mut edges = BTreeSet::new();
        for e in &m.entities {
            let me = format!("e{}", e.id);
            for step in &e.steps {
                // (counterpart, message out, message in)
                let (other, sent, received) = match step {
                    Step::Receive { message, from, .. } => (from, None, Some(message)),
                    Step::Sync { message, counterpart, reply, .. } => (counterpart, Some(message), Some(reply)),
                    Step::Action(a) => match &a.kind {
                        ActionKind::Send { message, dest, .. } => {
                            let to = match dest {
                                Destination::LocalService => self.service(&local),
                                Destination::Named(n) => match m.find(n) {
                                    Some(t) => format!("e{}", t.id),
                                    None => self.service(n),
                                },
                                Destination::Environment => self.service("environment"),
                            };
                            edges.insert((me.clone(), to, message.clone()));
                            continue;
                        }
                        _ => continue,
                    },
                    Step::Take { message, buffer, .. } => {
                        // Edge from every writer of the buffer.
                        for w in &m.entities {
                            for s in &w.steps {
                                if matches!(s, Step::Put { buffer: b, .. } if b == buffer) {
                                    let label = if m.buffers[buffer].is_hidden() { message } else { buffer };
                                    edges.insert((format!("e{}", w.id), me.clone(), label.clone()));
                                }
                            }
                        }
                        continue;
                    }
                    Step::Put { .. } => continue,
                };
                let peer = match other {
                    Counterpart::Entity(t) => format!("e{t}"),
                    Counterpart::LocalService => self.service(&local),
                    Counterpart::Remote(n) | Counterpart::Other(n) => self.service(n),
                };
                if let Some(msg) = sent {
                    edges.insert((me.clone(), peer.clone(), msg.clone()));
                }
                if let Some(msg) = received {
                    edges.insert((peer, me.clone(), msg.clone()));
                }
            }
        }
        for (a, b, label) in edges {
            self.line(1, format!("{a} -> {b} [label={}, style=dashed];", quote(&label)));
        }
    }

    fn service_states(&mut self) {
        let m = self.m;
        for (i, svc) in m.services.iter().enumerate() {
            let mut states = vec![ServiceState::Birth];
            states.extend(svc.states.iter().map(|s| ServiceState::Named(s.name.clone())));
            states.push(ServiceState::Death);
            let id = |s: &ServiceState| format!("s{i}_{}", states.iter().position(|t| t == s).unwrap_or(0));
            self.line(1, format!("subgraph cluster_service{i} {{"));
            self.line(2, format!("label={};", quote(&svc.name)));
            for s in &states {
                let shape = match s {
                    ServiceState::Birth => "point",
                    ServiceState::Death => "doublecircle",
                    ServiceState::Named(_) => "ellipse",
                };
                self.line(2, format!("{} [label={}, shape={shape}];", id(s), quote(&s.to_string())));
            }
            for r in &svc.rules {
                if let Some(to) = &r.target {
                    self.line(2, format!("{} -> {} [label={}];", id(&r.source), id(to), quote(&r.id)));
                }
            }
            self.line(1, "}");
        }
    }
}

/// Renders `m` as a DOT digraph.
pub fn to_dot(m: &WorkflowModel) -> String {
    let mut d = Dot { m, out: String::new(), services: Vec::new() };
    d.line(0, "digraph workflow {");
    d.line(1, "compound=true;");
    for pm in &m.models {
        d.line(1, format!("subgraph cluster_m{} {{", pm.index));
        d.line(2, format!("label=\"model {}\";", pm.index + 1));
        for &r in &pm.roots {
            d.node(2, r);
        }
        d.line(1, "}");
    }
    for dec in &m.decompositions {
        for t in &dec.triggers {
            let label = t.outcome.map(|o| format!(" [label={}]", quote(o.keyword()))).unwrap_or_default();
            d.line(1, format!("e{} -> e{}{label};", t.from, t.to));
        }
    }
    d.messaging();
    d.service_states();
    let services = std::mem::take(&mut d.services);
    for (i, s) in services.iter().enumerate() {
        d.line(1, format!("x{i} [label={}, shape=component];", quote(s)));
    }
    d.line(0, "}");
    d.out
}
