//! Name resolution and desugaring from syntax tree to [`WorkflowModel`].

use std::collections::BTreeMap;

use super::ast::{
    BodyItemKind, EcaAction as EcaAst, EntityDecl, EntityKindAst, EventSpec, Name, Outcome, RollbackAst, ScopeDeclKind,
    SpecAst, StateRef,
};
use crate::diagnostic::{Diagnostic, Span};
use crate::expr::{
    typecheck, Action, ActionKind, Destination, Expr, ExprKind, FieldInit, FieldType, Schema, Type, TypeEnv, TypeError,
    UnOp,
};
use crate::metamodel::{ConceptId, ConceptKind, ConceptRegistry, OrgLevel, RegistryError, RelationName, ScopeTag};
use crate::model::{
    BufferInfo, CommitGroup, Counterpart, DecisionRules, DecompId, Decomposition, EcaAction, EcaRule, Entity, EntityId,
    EntityKind, Event, ProcessModel, RecoverySpec, Rollback, Rung, ServiceInfo, ServiceModel, ServiceState, StateInfo,
    Step, StoreInfo, Terminator, Trigger, WorkflowModel,
};

pub const UNRESOLVED: &str = "UnresolvedName";
pub const TYPE_MISMATCH: &str = "TypeMismatch";
pub const DUPLICATE: &str = "DuplicateDeclaration";

/// Resolves every name in `ast`, producing the concept registry and the
/// workflow model, or all lowering errors.
pub fn lower(ast: &SpecAst) -> Result<(ConceptRegistry, WorkflowModel), Vec<Diagnostic>> {
    let mut l = Lowerer::default();
    l.scope_concepts(ast);
    l.schemas_refs(ast);
    l.local_service = ast.services.first().map(|s| s.name.text.clone());
    for (i, m) in ast.models.iter().enumerate() {
        let mut roots = Vec::new();
        for decl in &m.entities {
            roots.push(l.entity(decl, i, None, None));
        }
        l.model.models.push(ProcessModel { index: i, roots, span: m.span });
    }
    l.resolve_links();
    l.resolve_messaging();
    l.resolve_references();
    l.check_entities();
    l.scope_relations(ast);
    l.services(ast);
    l.recovery(ast);
    if l.diags.is_empty() {
        Ok((l.reg, l.model))
    } else {
        Err(l.diags)
    }
}

/// Parses and lowers in one go.
pub fn load(text: &str) -> Result<(ConceptRegistry, WorkflowModel), Vec<Diagnostic>> {
    lower(&super::parse(text)?)
}

enum Link {
    Initial { d: DecompId, name: Name },
    Trigger { d: DecompId, from: Name, outcome: Option<Outcome>, to: Name, span: Span },
    Commit { d: DecompId, grain: Name, members: Vec<Name>, span: Span },
}

#[derive(Default)]
struct Lowerer {
    reg: ConceptRegistry,
    model: WorkflowModel,
    diags: Vec<Diagnostic>,
    local_service: Option<String>,
    has_body: Vec<bool>,
    links: Vec<Link>,
    /// (entity, step index, counterpart name, span)
    counterparts: Vec<(EntityId, usize, String, Span)>,
}

fn entity_kind(k: EntityKindAst) -> (EntityKind, ConceptKind) {
    match k {
        EntityKindAst::Process => (EntityKind::Process, ConceptKind::Process),
        EntityKindAst::Decision => (EntityKind::Decision, ConceptKind::Decision),
        EntityKindAst::Sync => (EntityKind::Synchroniser, ConceptKind::Synchroniser),
    }
}

fn field_accepts(ft: &FieldType, t: &Type) -> bool {
    match ft {
        FieldType::Ref(s) => match t {
            Type::Ref(x) | Type::StoreRecord(x) => x == s,
            Type::Text | Type::Int => true,
            _ => false,
        },
        _ => ft.to_type() == *t,
    }
}

impl Lowerer {
    fn error(&mut self, code: &str, span: Span, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, span, msg));
    }

    fn unresolved(&mut self, what: &str, name: &Name) {
        self.error(UNRESOLVED, name.span, format!("unknown {what} \"{}\"", name.text));
    }

    fn register(&mut self, kind: ConceptKind, name: &Name, scope: ScopeTag) -> Option<ConceptId> {
        match self.reg.register_concept(kind, &name.text, scope) {
            Ok(id) => Some(id),
            Err(RegistryError::DuplicateName { .. }) => {
                self.error(DUPLICATE, name.span, format!("{kind} \"{}\" is declared twice", name.text));
                None
            }
            Err(e) => {
                self.error(DUPLICATE, name.span, e.to_string());
                None
            }
        }
    }

    fn schema(&mut self, fields: &[super::ast::FieldDecl]) -> Schema {
        let mut s = Schema::default();
        for f in fields {
            if s.field(&f.name).is_some() {
                self.error(DUPLICATE, f.span, format!("field `{}` is declared twice", f.name));
                continue;
            }
            s.fields.push((f.name.clone(), f.ty.clone()));
        }
        s
    }

    // Phase 1: concepts declared in the scope block.
    fn scope_concepts(&mut self, ast: &SpecAst) {
        for decl in &ast.scope.decls {
            match &decl.kind {
                ScopeDeclKind::Organisation { name } | ScopeDeclKind::Unit { name, .. } => {
                    let level = if matches!(decl.kind, ScopeDeclKind::Organisation { .. }) {
                        OrgLevel::Organisation
                    } else {
                        OrgLevel::Unit
                    };
                    if let Some(id) = self.register(ConceptKind::OrgUnit, name, ScopeTag::Domain) {
                        self.reg.org_levels.insert(id, level);
                    }
                }
                ScopeDeclKind::Role { name } => {
                    self.register(ConceptKind::Role, name, ScopeTag::Domain);
                }
                ScopeDeclKind::Actor { name, .. } => {
                    self.register(ConceptKind::Actor, name, ScopeTag::Domain);
                }
                ScopeDeclKind::Object { name, nature } => {
                    if let Some(id) = self.register(ConceptKind::ObjectType, name, ScopeTag::Domain) {
                        self.reg.natures.insert(id, *nature);
                        self.model.object_natures.insert(name.text.clone(), *nature);
                    }
                }
                ScopeDeclKind::Service { name, external } => {
                    let scope = if *external { ScopeTag::Environment } else { ScopeTag::Domain };
                    if self.register(ConceptKind::Service, name, scope).is_some() {
                        self.model.service_decls.insert(name.text.clone(), ServiceInfo { external: *external });
                    }
                }
                ScopeDeclKind::Message { name, external, fields } => {
                    let scope = if *external { ScopeTag::Environment } else { ScopeTag::Domain };
                    let schema = self.schema(fields);
                    if self.model.catalog.messages.contains_key(&name.text) {
                        self.error(DUPLICATE, name.span, format!("message type \"{}\" is declared twice", name.text));
                        continue;
                    }
                    if let Some(id) = self.register(ConceptKind::MessageType, name, scope) {
                        self.reg.schemas.insert(id, schema.fields.iter().map(|(n, _)| n.clone()).collect());
                        self.model.catalog.messages.insert(name.text.clone(), schema);
                    }
                }
                ScopeDeclKind::Store { name, fields, fragment, .. } => {
                    let schema = self.schema(fields);
                    if let Some(id) = self.register(ConceptKind::ObjectStore, name, ScopeTag::Domain) {
                        self.reg.schemas.insert(id, schema.fields.iter().map(|(n, _)| n.clone()).collect());
                        if let Some(f) = fragment {
                            self.reg.fragments.insert(id, f.text.clone());
                        }
                        self.model.catalog.stores.insert(name.text.clone(), schema);
                        self.model.stores.insert(
                            name.text.clone(),
                            StoreInfo { holds: Vec::new(), fragment: fragment.as_ref().map(|f| f.text.clone()) },
                        );
                    }
                }
                ScopeDeclKind::Buffer { name, protocol, .. } => {
                    if let Some(id) = self.register(ConceptKind::MessageBuffer, name, ScopeTag::Domain) {
                        self.reg.set_protocol(id, protocol.clone());
                        self.model.buffers.insert(
                            name.text.clone(),
                            BufferInfo { protocol: protocol.clone(), accepts: Vec::new(), endpoints: None },
                        );
                    }
                }
                ScopeDeclKind::Locate { .. } | ScopeDeclKind::Undertake { .. } => {}
            }
        }
    }

    /// `ref "S"` field types must name a declared store.
    fn schemas_refs(&mut self, ast: &SpecAst) {
        for decl in &ast.scope.decls {
            let fields = match &decl.kind {
                ScopeDeclKind::Message { fields, .. } | ScopeDeclKind::Store { fields, .. } => fields,
                _ => continue,
            };
            for f in fields {
                if let FieldType::Ref(s) = &f.ty {
                    if !self.model.catalog.stores.contains_key(s) {
                        self.error(UNRESOLVED, f.span, format!("field `{}` refers to unknown store \"{s}\"", f.name));
                    }
                }
            }
        }
    }

    // Phase 2: entity occurrences, depth first.
    fn entity(
        &mut self,
        decl: &EntityDecl,
        model: usize,
        sup: Option<EntityId>,
        parent_decomp: Option<DecompId>,
    ) -> EntityId {
        let (kind, ckind) = entity_kind(decl.kind);
        let concept = match self.reg.lookup(ckind, &decl.name.text) {
            Some(c) => c,
            None => self.register(ckind, &decl.name, ScopeTag::Domain).unwrap_or(ConceptId(u32::MAX)),
        };
        let id = self.model.entities.len();
        if decl.body.is_some() {
            let dup =
                self.model.entities.iter().any(|e| e.kind == kind && e.name == decl.name.text && self.has_body[e.id]);
            if dup {
                self.error(
                    DUPLICATE,
                    decl.name.span,
                    format!("{} \"{}\" has more than one definition", kind.label(), decl.name.text),
                );
            }
        }
        self.has_body.push(decl.body.is_some());
        self.model.entities.push(Entity {
            id,
            concept,
            name: decl.name.text.clone(),
            kind,
            model,
            sup,
            parent_decomp,
            decomposition: None,
            exclusive: decl.exclusive,
            role: decl.role.as_ref().map(|r| r.text.clone()),
            duration: decl.duration.map(|(n, u)| n * u.seconds()).unwrap_or(0),
            steps: Vec::new(),
            pre: Vec::new(),
            pre_timeout: 0,
            post: Vec::new(),
            vars: Vec::new(),
            uses: Vec::new(),
            hci: Vec::new(),
            rules: None,
            terminators: Vec::new(),
            is_reference: false,
            span: decl.name.span,
        });
        let Some(items) = &decl.body else { return id };

        let structured = items.iter().any(|i| {
            matches!(
                i.kind,
                BodyItemKind::Entity(_)
                    | BodyItemKind::Initial(_)
                    | BodyItemKind::Trigger { .. }
                    | BodyItemKind::Commit { .. }
            )
        });
        let d = structured.then(|| {
            let d = self.model.decompositions.len();
            self.model.decompositions.push(Decomposition {
                id: d,
                owner: id,
                children: Vec::new(),
                initial: Vec::new(),
                triggers: Vec::new(),
                commits: Vec::new(),
                span: decl.span,
            });
            self.model.entities[id].decomposition = Some(d);
            d
        });

        let mut positive = None;
        let mut negative = None;
        let mut declared = 0;
        for item in items {
            let span = item.span;
            match &item.kind {
                BodyItemKind::Entity(child) => {
                    let d = d.expect("structured body");
                    let c = self.entity(child, model, Some(id), Some(d));
                    self.model.decompositions[d].children.push(c);
                }
                BodyItemKind::Initial(name) => {
                    self.links.push(Link::Initial { d: d.expect("structured body"), name: name.clone() })
                }
                BodyItemKind::Trigger { from, outcome, to } => self.links.push(Link::Trigger {
                    d: d.expect("structured body"),
                    from: from.clone(),
                    outcome: *outcome,
                    to: to.clone(),
                    span,
                }),
                BodyItemKind::Commit { grain, members } => self.links.push(Link::Commit {
                    d: d.expect("structured body"),
                    grain: grain.clone(),
                    members: members.clone(),
                    span,
                }),
                BodyItemKind::Receive { message, from, from_span } => {
                    let from = match from {
                        Destination::Named(n) => {
                            let idx = self.model.entities[id].steps.len();
                            self.counterparts.push((id, idx, n.clone(), *from_span));
                            Counterpart::Other(n.clone())
                        }
                        _ => Counterpart::LocalService,
                    };
                    self.push_step(id, Step::Receive { message: message.text.clone(), from, span });
                }
                BodyItemKind::Take { message, buffer } => {
                    self.push_step(id, Step::Take { message: message.text.clone(), buffer: buffer.text.clone(), span })
                }
                BodyItemKind::Put { message, buffer, fields } => self.push_step(
                    id,
                    Step::Put {
                        message: message.text.clone(),
                        buffer: buffer.text.clone(),
                        fields: fields.clone(),
                        span,
                    },
                ),
                BodyItemKind::Sync { order, message, counterpart, counterpart_span, reply } => {
                    let cp = match counterpart {
                        Destination::Named(n) => {
                            let idx = self.model.entities[id].steps.len();
                            self.counterparts.push((id, idx, n.clone(), *counterpart_span));
                            Counterpart::Other(n.clone())
                        }
                        _ => Counterpart::LocalService,
                    };
                    self.push_step(
                        id,
                        Step::Sync {
                            order: *order,
                            message: message.text.clone(),
                            counterpart: cp,
                            reply: reply.text.clone(),
                            span,
                        },
                    );
                }
                BodyItemKind::Action(a) => {
                    if let ActionKind::Send { dest: Destination::Named(n), .. } = &a.kind {
                        let idx = self.model.entities[id].steps.len();
                        self.counterparts.push((id, idx, n.clone(), a.span));
                    }
                    self.push_step(id, Step::Action(a.clone()));
                }
                BodyItemKind::Pre(e) => self.model.entities[id].pre.push(e.clone()),
                BodyItemKind::PreTimeout(n, u) => self.model.entities[id].pre_timeout = n * u.seconds(),
                BodyItemKind::Post(e) => self.model.entities[id].post.push(e.clone()),
                BodyItemKind::Var { name, ty } => {
                    if self.model.entities[id].vars.iter().any(|(n, _)| n == name) {
                        self.error(DUPLICATE, span, format!("variable `{name}` is declared twice"));
                    } else {
                        self.model.entities[id].vars.push((name.clone(), ty.clone()));
                    }
                }
                BodyItemKind::Uses(n) => self.model.entities[id].uses.push(n.text.clone()),
                BodyItemKind::Hci { name, schema } => {
                    self.model.entities[id].hci.push((name.text.clone(), schema.as_ref().map(|s| s.text.clone())))
                }
                BodyItemKind::Rule { outcome, expr } => {
                    declared += 1;
                    let slot = match outcome {
                        Outcome::Positive => &mut positive,
                        Outcome::Negative => &mut negative,
                    };
                    if slot.is_some() {
                        self.error(DUPLICATE, span, format!("{} rule is declared twice", outcome.keyword()));
                    } else {
                        *slot = Some(expr.clone());
                    }
                }
                BodyItemKind::Terminates { outcome, result, abort } => self.model.entities[id]
                    .terminators
                    .push(Terminator { outcome: *outcome, result: *result, abort: *abort }),
            }
        }
        if kind == EntityKind::Decision || declared > 0 {
            let not = |e: &Expr| Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e.clone())), e.span);
            let (p, n) = match (positive, negative) {
                (Some(p), Some(n)) => (p, n),
                (Some(p), None) => {
                    let n = not(&p);
                    (p, n)
                }
                (None, Some(n)) => (not(&n), n),
                (None, None) => (Expr::bool(true), Expr::bool(true)),
            };
            self.model.entities[id].rules = Some(DecisionRules { positive: p, negative: n, declared });
        }
        id
    }

    fn push_step(&mut self, id: EntityId, step: Step) {
        self.model.entities[id].steps.push(step);
    }

    /// Finds the entity a body-level name refers to: a child of `d` first,
    /// then any occurrence elsewhere.
    fn resolve_in(&self, d: Option<DecompId>, name: &str) -> Option<EntityId> {
        if let Some(d) = d {
            let body = &self.model.decompositions[d];
            if let Some(c) = body.children.iter().copied().find(|c| self.model.entities[*c].name == name) {
                return Some(c);
            }
        }
        let mut hits = self.model.entities.iter().filter(|e| e.name == name);
        let first = hits.next()?.id;
        Some(self.model.entities.iter().find(|e| e.name == name && self.has_body[e.id]).map_or(first, |e| e.id))
    }

    fn resolve_links(&mut self) {
        for link in std::mem::take(&mut self.links) {
            match link {
                Link::Initial { d, name } => match self.resolve_in(Some(d), &name.text) {
                    Some(e) => self.model.decompositions[d].initial.push(e),
                    None => self.unresolved("entity", &name),
                },
                Link::Trigger { d, from, outcome, to, span } => {
                    let f = self.resolve_in(Some(d), &from.text);
                    let t = self.resolve_in(Some(d), &to.text);
                    if f.is_none() {
                        self.unresolved("entity", &from);
                    }
                    if t.is_none() {
                        self.unresolved("entity", &to);
                    }
                    if let (Some(from), Some(to)) = (f, t) {
                        self.model.decompositions[d].triggers.push(Trigger { from, outcome, to, span });
                    }
                }
                Link::Commit { d, grain, members, span } => {
                    let mut ids = Vec::new();
                    for m in &members {
                        match self.resolve_in(Some(d), &m.text) {
                            Some(e) => ids.push(e),
                            None => self.unresolved("entity", m),
                        }
                    }
                    self.model.decompositions[d].commits.push(CommitGroup { name: grain.text, members: ids, span });
                }
            }
        }
    }

    /// Resolves named counterparts and turns entity-to-entity messaging
    /// into hidden FIFO buffers.
    fn resolve_messaging(&mut self) {
        for (id, idx, name, span) in std::mem::take(&mut self.counterparts) {
            let parent = self.model.entities[id].parent_decomp;
            let target = if let Some(e) = self.resolve_in(parent, &name) {
                Counterpart::Entity(e)
            } else if self.model.service_decls.contains_key(&name) {
                if self.local_service.as_deref() == Some(name.as_str()) {
                    Counterpart::LocalService
                } else {
                    Counterpart::Remote(name.clone())
                }
            } else if !self.reg.lookup_any(&name).is_empty() {
                Counterpart::Other(name.clone())
            } else {
                self.error(UNRESOLVED, span, format!("unknown counterpart \"{name}\""));
                continue;
            };
            let step = self.model.entities[id].steps[idx].clone();
            let replaced = match step {
                Step::Receive { message, span, .. } => match target {
                    Counterpart::Entity(src) => {
                        let buffer = self.hidden_buffer(src, id, message.clone());
                        Step::Take { message, buffer, span }
                    }
                    from => Step::Receive { message, from, span },
                },
                Step::Sync { order, message, reply, span, .. } => {
                    Step::Sync { order, message, counterpart: target, reply, span }
                }
                Step::Action(Action { kind: ActionKind::Send { message, dest, each, fields }, span }) => match target {
                    Counterpart::Entity(dst) => {
                        let buffer = self.hidden_buffer(id, dst, message.clone());
                        Step::Put { message, buffer, fields, span }
                    }
                    Counterpart::LocalService => Step::Action(Action {
                        kind: ActionKind::Send { message, dest: Destination::LocalService, each, fields },
                        span,
                    }),
                    _ => Step::Action(Action { kind: ActionKind::Send { message, dest, each, fields }, span }),
                },
                other => other,
            };
            self.model.entities[id].steps[idx] = replaced;
        }
    }

    fn hidden_buffer(&mut self, from: EntityId, to: EntityId, message: String) -> String {
        let name = format!("{}->{}", self.model.entities[from].name, self.model.entities[to].name);
        let info = self.model.buffers.entry(name.clone()).or_insert_with(|| BufferInfo {
            protocol: crate::metamodel::Protocol::Fifo,
            accepts: Vec::new(),
            endpoints: Some((from, to)),
        });
        if !info.accepts.contains(&message) {
            info.accepts.push(message.clone());
        }
        let buf = match self.reg.lookup(ConceptKind::MessageBuffer, &name) {
            Some(b) => Some(b),
            None => self.reg.register_concept(ConceptKind::MessageBuffer, &name, ScopeTag::Domain).ok(),
        };
        if let (Some(b), Some(m)) = (buf, self.reg.lookup(ConceptKind::MessageType, &message)) {
            let _ = self.reg.add_relation(RelationName::MesAlloc, b, m);
        }
        name
    }

    /// Bodiless occurrences reuse the definition of the same-named entity.
    fn resolve_references(&mut self) {
        for id in 0..self.model.entities.len() {
            if self.has_body[id] {
                continue;
            }
            let (kind, name) = (self.model.entities[id].kind, self.model.entities[id].name.clone());
            let Some(def) =
                self.model.entities.iter().find(|e| e.kind == kind && e.name == name && self.has_body[e.id])
            else {
                continue;
            };
            let def = def.clone();
            let e = &mut self.model.entities[id];
            e.decomposition = def.decomposition;
            e.steps = def.steps;
            e.pre = def.pre;
            e.pre_timeout = def.pre_timeout;
            e.post = def.post;
            e.vars = def.vars;
            e.uses = def.uses;
            e.hci = def.hci;
            e.rules = def.rules;
            e.terminators = def.terminators;
            e.exclusive |= def.exclusive;
            if e.role.is_none() {
                e.role = def.role;
            }
            if e.duration == 0 {
                e.duration = def.duration;
            }
            e.is_reference = true;
        }
    }

    fn env_for(&self, id: EntityId) -> BTreeMap<String, Type> {
        let mut vars = BTreeMap::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            let e = &self.model.entities[c];
            for (n, t) in &e.vars {
                vars.entry(n.clone()).or_insert_with(|| t.to_type());
            }
            cur = e.sup;
        }
        vars
    }

    fn check_bool(&mut self, e: &Expr, env: &TypeEnv<'_>, what: &str) -> Vec<Diagnostic> {
        match typecheck(e, env) {
            Ok(Type::Bool) => Vec::new(),
            Ok(t) => vec![Diagnostic::error(TYPE_MISMATCH, e.span, format!("{what} must be bool, found {t}"))],
            Err(err) => {
                let code = if err.unresolved { UNRESOLVED } else { TYPE_MISMATCH };
                vec![Diagnostic::error(code, err.span, err.message)]
            }
        }
    }

    /// Type-checks the defining occurrence of every entity.
    fn check_entities(&mut self) {
        let catalog = self.model.catalog.clone();
        let mut out = Vec::new();
        for id in 0..self.model.entities.len() {
            if !self.has_body[id] {
                continue;
            }
            let e = self.model.entities[id].clone();
            let env = TypeEnv { catalog: Some(&catalog), vars: self.env_for(id) };
            for p in &e.pre {
                out.extend(self.check_bool(p, &env, "pre-condition"));
            }
            for p in &e.post {
                out.extend(self.check_bool(p, &env, "post-condition"));
            }
            if let Some(r) = &e.rules {
                out.extend(self.check_bool(&r.positive, &env, "decision rule"));
                out.extend(self.check_bool(&r.negative, &env, "decision rule"));
            }
            for u in &e.uses {
                if !catalog.stores.contains_key(u) && !self.model.buffers.contains_key(u) {
                    out.push(Diagnostic::error(UNRESOLVED, e.span, format!("unknown store or buffer \"{u}\"")));
                }
            }
            for step in &e.steps {
                out.extend(self.check_step(step, &env));
            }
        }
        self.diags.extend(out);
    }

    fn check_message(&self, m: &str, span: Span) -> Vec<Diagnostic> {
        if self.model.catalog.messages.contains_key(m) {
            Vec::new()
        } else {
            vec![Diagnostic::error(UNRESOLVED, span, format!("unknown message type \"{m}\""))]
        }
    }

    fn check_step(&mut self, step: &Step, env: &TypeEnv<'_>) -> Vec<Diagnostic> {
        let catalog = env.catalog.expect("catalog");
        let mut out = Vec::new();
        match step {
            Step::Receive { message, span, .. } => out.extend(self.check_message(message, *span)),
            Step::Take { message, buffer, span } | Step::Put { message, buffer, span, .. } => {
                out.extend(self.check_message(message, *span));
                if !self.model.buffers.contains_key(buffer) {
                    out.push(Diagnostic::error(UNRESOLVED, *span, format!("unknown buffer \"{buffer}\"")));
                }
                if let Step::Put { fields, .. } = step {
                    out.extend(check_inits(message, catalog.messages.get(message), fields, env, true, *span));
                }
            }
            Step::Sync { message, reply, span, .. } => {
                out.extend(self.check_message(message, *span));
                out.extend(self.check_message(reply, *span));
            }
            Step::Action(a) => out.extend(self.check_action(a, env)),
        }
        out
    }

    fn check_action(&mut self, a: &Action, env: &TypeEnv<'_>) -> Vec<Diagnostic> {
        let catalog = env.catalog.expect("catalog");
        let span = a.span;
        let mut out = Vec::new();
        let store = |s: &str, out: &mut Vec<Diagnostic>| {
            let schema = catalog.stores.get(s);
            if schema.is_none() {
                out.push(Diagnostic::error(UNRESOLVED, span, format!("unknown store \"{s}\"")));
            }
            schema
        };
        match &a.kind {
            ActionKind::Add { store: s, fields } => {
                if let Some(schema) = store(s, &mut out) {
                    out.extend(check_inits(s, Some(schema), fields, env, true, span));
                }
            }
            ActionKind::Update { var, store: s, filter, fields } => {
                if let Some(schema) = store(s, &mut out) {
                    let mut local = env.clone();
                    local.vars.insert(var.clone(), Type::StoreRecord(s.clone()));
                    out.extend(self.check_bool(filter, &local, "filter"));
                    out.extend(check_inits(s, Some(schema), fields, &local, false, span));
                }
            }
            ActionKind::Remove { var, store: s, filter } => {
                if store(s, &mut out).is_some() {
                    let mut local = env.clone();
                    local.vars.insert(var.clone(), Type::StoreRecord(s.clone()));
                    out.extend(self.check_bool(filter, &local, "filter"));
                }
            }
            ActionKind::Set { var, value } => match env.vars.get(var) {
                None => out.push(Diagnostic::error(UNRESOLVED, span, format!("unknown variable `{var}`"))),
                Some(t) => match typecheck(value, env) {
                    Ok(v) if v == *t || matches!((t, &v), (Type::Ref(_), Type::Text | Type::Int)) => {}
                    Ok(v) => out.push(Diagnostic::error(
                        TYPE_MISMATCH,
                        value.span,
                        format!("variable `{var}` has type {t} but is set to {v}"),
                    )),
                    Err(e) => out.push(type_diag(e)),
                },
            },
            ActionKind::Send { message, each, fields, .. } => {
                out.extend(self.check_message(message, span));
                let mut local = env.clone();
                if let Some(each) = each {
                    if store(&each.store, &mut out).is_some() {
                        local.vars.insert(each.var.clone(), Type::StoreRecord(each.store.clone()));
                        if let Some(f) = &each.filter {
                            out.extend(self.check_bool(f, &local, "filter"));
                        }
                    }
                }
                if let Some(schema) = catalog.messages.get(message) {
                    out.extend(check_inits(message, Some(schema), fields, &local, true, span));
                }
            }
            ActionKind::Transfer { message, store: s } => {
                out.extend(self.check_message(message, span));
                store(s, &mut out);
            }
        }
        out
    }

    // Phase 3: relations between scope concepts.
    fn scope_relations(&mut self, ast: &SpecAst) {
        for decl in &ast.scope.decls {
            match &decl.kind {
                ScopeDeclKind::Unit { name, parent } => {
                    let (Some(u), Some(p)) = (
                        self.reg.lookup(ConceptKind::OrgUnit, &name.text),
                        self.lookup_or_report(ConceptKind::OrgUnit, parent, "organisational unit"),
                    ) else {
                        continue;
                    };
                    if let Err(RegistryError::CycleIntroduced { .. }) = self.reg.add_relation(RelationName::SubOf, u, p)
                    {
                        self.model.suborg_cycles.push((name.text.clone(), parent.text.clone(), decl.span));
                    }
                }
                ScopeDeclKind::Actor { name, unit, roles } => {
                    let Some(a) = self.reg.lookup(ConceptKind::Actor, &name.text) else { continue };
                    if let Some(u) = self.lookup_or_report(ConceptKind::OrgUnit, unit, "organisational unit") {
                        let _ = self.reg.add_relation(RelationName::Structure, u, a);
                    }
                    for r in roles {
                        if let Some(r) = self.lookup_or_report(ConceptKind::Role, r, "role") {
                            let _ = self.reg.add_relation(RelationName::Assign, a, r);
                        }
                    }
                }
                ScopeDeclKind::Store { name, holds, .. } => {
                    let Some(s) = self.reg.lookup(ConceptKind::ObjectStore, &name.text) else { continue };
                    for o in holds {
                        if let Some(o) = self.lookup_or_report(ConceptKind::ObjectType, o, "object type") {
                            let _ = self.reg.add_relation(RelationName::Holds, s, o);
                        }
                    }
                    if let Some(info) = self.model.stores.get_mut(&name.text) {
                        info.holds = holds.iter().map(|h| h.text.clone()).collect();
                    }
                }
                ScopeDeclKind::Buffer { name, accepts, .. } => {
                    let Some(b) = self.reg.lookup(ConceptKind::MessageBuffer, &name.text) else { continue };
                    for m in accepts {
                        if let Some(m) = self.lookup_or_report(ConceptKind::MessageType, m, "message type") {
                            let _ = self.reg.add_relation(RelationName::MesAlloc, b, m);
                        }
                    }
                    if let Some(info) = self.model.buffers.get_mut(&name.text) {
                        info.accepts = accepts.iter().map(|m| m.text.clone()).collect();
                    }
                }
                ScopeDeclKind::Locate { entity, unit } => {
                    let e = self.entity_concept(entity);
                    let u = self.lookup_or_report(ConceptKind::OrgUnit, unit, "organisational unit");
                    if let (Some(e), Some(u)) = (e, u) {
                        let _ = self.reg.add_relation(RelationName::Structure, u, e);
                    }
                }
                ScopeDeclKind::Undertake { role, entity } => {
                    let r = self.lookup_or_report(ConceptKind::Role, role, "role");
                    let e = self.entity_concept(entity);
                    if let (Some(r), Some(e)) = (r, e) {
                        self.undertake(r, e, entity);
                    }
                }
                _ => {}
            }
        }
        for i in 0..self.model.entities.len() {
            let e = &self.model.entities[i];
            let (Some(role), concept, span) = (e.role.clone(), e.concept, e.span) else { continue };
            let name = Name { text: role, span };
            if let Some(r) = self.lookup_or_report(ConceptKind::Role, &name, "role") {
                self.undertake(r, concept, &name);
            }
        }
    }

    fn undertake(&mut self, role: ConceptId, entity: ConceptId, at: &Name) {
        if let Err(RegistryError::KindMismatch { right, .. }) =
            self.reg.add_relation(RelationName::Undertake, role, entity)
        {
            self.error(TYPE_MISMATCH, at.span, format!("a role cannot undertake a {right}"));
        }
    }

    fn lookup_or_report(&mut self, kind: ConceptKind, name: &Name, what: &str) -> Option<ConceptId> {
        let found = self.reg.lookup(kind, &name.text);
        if found.is_none() {
            self.unresolved(what, name);
        }
        found
    }

    fn entity_concept(&mut self, name: &Name) -> Option<ConceptId> {
        let found = [ConceptKind::Process, ConceptKind::Decision, ConceptKind::Synchroniser]
            .into_iter()
            .find_map(|k| self.reg.lookup(k, &name.text));
        if found.is_none() {
            self.unresolved("process or decision", name);
        }
        found
    }

    fn services(&mut self, ast: &SpecAst) {
        let catalog = self.model.catalog.clone();
        let env = TypeEnv::new(&catalog);
        let mut next = 1;
        for svc in &ast.services {
            if !self.model.service_decls.contains_key(&svc.name.text) {
                self.unresolved("service", &svc.name);
            }
            let mut states: Vec<StateInfo> = Vec::new();
            for s in &svc.states {
                if states.iter().any(|x| x.name == s.name.text) {
                    self.error(DUPLICATE, s.name.span, format!("state \"{}\" is declared twice", s.name.text));
                    continue;
                }
                states.push(StateInfo {
                    name: s.name.text.clone(),
                    within: s.within.map(|(n, u)| n * u.seconds()),
                    span: s.span,
                });
            }
            let mut rules = Vec::new();
            for t in &svc.rules {
                let mut names = Vec::new();
                let mut name = |n: &Name| {
                    names.push((n.text.clone(), n.span));
                    n.text.clone()
                };
                let state = |s: &StateRef, name: &mut dyn FnMut(&Name) -> String| match s {
                    StateRef::Birth => ServiceState::Birth,
                    StateRef::Death => ServiceState::Death,
                    StateRef::Named(n) => ServiceState::Named(name(n)),
                };
                let source = state(&t.source, &mut name);
                let target = t.target.as_ref().map(|s| state(s, &mut name));
                let event = match &t.rule.when {
                    EventSpec::MsgFrom(n) => Event::MsgFrom(name(n)),
                    EventSpec::MsgTo(n) => Event::MsgTo(name(n)),
                    EventSpec::DbState(e) => Event::DbState(e.clone()),
                    EventSpec::DecisionEnd(n, o) => Event::DecisionEnd(name(n), *o),
                    EventSpec::ProcessStart(n) => Event::ProcessStart(name(n)),
                    EventSpec::ProcessEnd(n) => Event::ProcessEnd(name(n)),
                    EventSpec::ProcessStartFailed(n, k) => Event::ProcessStartFailed(name(n), *k),
                    EventSpec::Abort(k) => Event::Abort(*k),
                    EventSpec::Timer(e) => Event::Timer(e.clone()),
                };
                let actions = t
                    .rule
                    .then
                    .iter()
                    .map(|a| match a {
                        EcaAst::Forward { message, to } => EcaAction::Forward { message: name(message), to: name(to) },
                        EcaAst::Trigger(n) => EcaAction::Trigger(name(n)),
                        EcaAst::Send { message, to } => EcaAction::Send { message: name(message), to: name(to) },
                    })
                    .collect();
                if let Event::DbState(e) | Event::Timer(e) = &event {
                    let d = self.check_bool(e, &env, "event condition");
                    self.diags.extend(d);
                }
                if let Some(c) = &t.rule.cond {
                    let d = self.check_bool(c, &env, "rule condition");
                    self.diags.extend(d);
                }
                rules.push(EcaRule {
                    id: format!("R{next}"),
                    source,
                    target,
                    event,
                    cond: t.rule.cond.clone(),
                    actions,
                    span: t.span,
                    name_spans: names,
                });
                next += 1;
            }
            self.model.services.push(ServiceModel { name: svc.name.text.clone(), states, rules, span: svc.span });
        }
    }

    fn recovery(&mut self, ast: &SpecAst) {
        let Some(table) = &ast.recovery else { return };
        for entry in &table.entries {
            if self.model.recovery.contains_key(&entry.entity.text) {
                self.error(
                    DUPLICATE,
                    entry.entity.span,
                    format!("recovery for \"{}\" is declared twice", entry.entity.text),
                );
                continue;
            }
            let spec = RecoverySpec {
                entity: entry.entity.text.clone(),
                ladder: entry
                    .ladder
                    .iter()
                    .map(|r| Rung { threshold: r.threshold, target: r.target.as_ref().map(|t| t.text.clone()) })
                    .collect(),
                rollback: match &entry.rollback {
                    None | Some(RollbackAst::Undo) => Rollback::Undo,
                    Some(RollbackAst::Null) => Rollback::Null,
                    Some(RollbackAst::Compensate(c)) => Rollback::Compensate(c.text.clone()),
                },
                span: entry.span,
            };
            self.model.recovery.insert(spec.entity.clone(), spec);
        }
    }
}

fn type_diag(e: TypeError) -> Diagnostic {
    let code = if e.unresolved { UNRESOLVED } else { TYPE_MISMATCH };
    Diagnostic::error(code, e.span, e.message)
}

/// Checks field initialisers against a record schema. `complete` requires
/// every schema field to be set.
fn check_inits(
    owner: &str,
    schema: Option<&Schema>,
    fields: &[FieldInit],
    env: &TypeEnv<'_>,
    complete: bool,
    span: Span,
) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let Some(schema) = schema else { return out };
    for (i, f) in fields.iter().enumerate() {
        if fields[..i].iter().any(|g| g.name == f.name) {
            out.push(Diagnostic::error(DUPLICATE, f.value.span, format!("field `{}` is set twice", f.name)));
            continue;
        }
        let Some(ft) = schema.field(&f.name) else {
            out.push(Diagnostic::error(TYPE_MISMATCH, f.value.span, format!("\"{owner}\" has no field `{}`", f.name)));
            continue;
        };
        match typecheck(&f.value, env) {
            Ok(t) if field_accepts(ft, &t) => {}
            Ok(t) => out.push(Diagnostic::error(
                TYPE_MISMATCH,
                f.value.span,
                format!("field `{}` expects {} but the value is {t}", f.name, ft.keyword()),
            )),
            Err(e) => out.push(type_diag(e)),
        }
    }
    if complete {
        for (name, _) in &schema.fields {
            if !fields.iter().any(|f| &f.name == name) {
                out.push(Diagnostic::error(TYPE_MISMATCH, span, format!("\"{owner}\" needs a value for `{name}`")));
            }
        }
    }
    out
}
