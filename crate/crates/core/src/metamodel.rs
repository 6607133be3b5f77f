//! Business-scope concept registry.
//!
//! Holds every named concept of a specification together with the
//! organisational and messaging relations among them, and the partition of
//! concepts into the business domain and the business environment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::{Diagnostic, Span};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConceptId(pub u32);

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConceptKind {
    OrgUnit,
    Actor,
    Role,
    Process,
    Decision,
    Synchroniser,
    Service,
    ObjectType,
    ObjectStore,
    MessageType,
    MessageBuffer,
}

impl ConceptKind {
    pub const ALL: [ConceptKind; 11] = [
        ConceptKind::OrgUnit,
        ConceptKind::Actor,
        ConceptKind::Role,
        ConceptKind::Process,
        ConceptKind::Decision,
        ConceptKind::Synchroniser,
        ConceptKind::Service,
        ConceptKind::ObjectType,
        ConceptKind::ObjectStore,
        ConceptKind::MessageType,
        ConceptKind::MessageBuffer,
    ];

    /// Only services and message types may belong to the business environment.
    pub fn allows(self, scope: ScopeTag) -> bool {
        match scope {
            ScopeTag::Domain => true,
            ScopeTag::Environment => matches!(self, ConceptKind::Service | ConceptKind::MessageType),
        }
    }

    pub fn is_processing(self) -> bool {
        matches!(self, ConceptKind::Process | ConceptKind::Decision | ConceptKind::Synchroniser)
    }
}

impl fmt::Display for ConceptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConceptKind::OrgUnit => "org unit",
            ConceptKind::Actor => "actor",
            ConceptKind::Role => "role",
            ConceptKind::Process => "process",
            ConceptKind::Decision => "decision",
            ConceptKind::Synchroniser => "synchroniser",
            ConceptKind::Service => "service",
            ConceptKind::ObjectType => "object type",
            ConceptKind::ObjectStore => "object store",
            ConceptKind::MessageType => "message type",
            ConceptKind::MessageBuffer => "message buffer",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScopeTag {
    Domain,
    Environment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationName {
    Structure,
    SubOf,
    Assign,
    Undertake,
    MesAlloc,
    /// Object store → object types it stores.
    Holds,
}

impl RelationName {
    fn accepts(self, left: ConceptKind, right: ConceptKind) -> bool {
        use ConceptKind as K;
        match self {
            RelationName::Structure => left == K::OrgUnit,
            RelationName::SubOf => left == K::OrgUnit && right == K::OrgUnit,
            RelationName::Assign => left == K::Actor && right == K::Role,
            RelationName::Undertake => left == K::Role && matches!(right, K::Process | K::Decision),
            RelationName::MesAlloc => left == K::MessageBuffer && right == K::MessageType,
            RelationName::Holds => left == K::ObjectStore && right == K::ObjectType,
        }
    }
}

impl fmt::Display for RelationName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RelationName::Structure => "structure",
            RelationName::SubOf => "subOf",
            RelationName::Assign => "assign",
            RelationName::Undertake => "undertake",
            RelationName::MesAlloc => "mesAlloc",
            RelationName::Holds => "holds",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    Fifo,
    Lifo,
    Random,
    /// Take the message whose named field is smallest; ties go to the oldest.
    Predicate(String),
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Fifo => f.write_str("fifo"),
            Protocol::Lifo => f.write_str("lifo"),
            Protocol::Random => f.write_str("random"),
            Protocol::Predicate(field) => write!(f, "predicate:{field}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectNature {
    Informational,
    Material,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrgLevel {
    /// Top of an organisational hierarchy.
    Organisation,
    Unit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: ConceptId,
    pub kind: ConceptKind,
    pub name: String,
    pub scope: ScopeTag,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegistryError {
    #[error("concept name must not be empty")]
    EmptyName,
    #[error("{kind} \"{name}\" is already registered")]
    DuplicateName { kind: ConceptKind, name: String },
    #[error("a {kind} cannot belong to the business environment")]
    IllegalScope { kind: ConceptKind, scope: ScopeTag },
    #[error("{relation} does not relate a {left} to a {right}")]
    KindMismatch { relation: RelationName, left: ConceptKind, right: ConceptKind },
    #[error("subOf edge {left} -> {right} would introduce a cycle")]
    CycleIntroduced { left: ConceptId, right: ConceptId },
    #[error("unknown concept {0}")]
    UnknownConcept(ConceptId),
}

/// Whether an actor must sit in exactly the unit owning a process, or may sit
/// anywhere beneath it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AllocationMode {
    #[default]
    Transitive,
    Strict,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct AllocationViolation {
    pub actor: ConceptId,
    pub role: ConceptId,
    pub process: ConceptId,
    pub unit: ConceptId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptRegistry {
    concepts: Vec<Concept>,
    by_name: BTreeMap<(ConceptKind, ScopeTag, String), ConceptId>,
    relations: BTreeMap<RelationName, BTreeSet<(ConceptId, ConceptId)>>,
    pub protocols: BTreeMap<ConceptId, Protocol>,
    pub schemas: BTreeMap<ConceptId, Vec<String>>,
    pub fragments: BTreeMap<ConceptId, String>,
    pub natures: BTreeMap<ConceptId, ObjectNature>,
    pub org_levels: BTreeMap<ConceptId, OrgLevel>,
}

impl ConceptRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn register_concept(
        &mut self,
        kind: ConceptKind,
        name: &str,
        scope: ScopeTag,
    ) -> Result<ConceptId, RegistryError> {
        if name.trim().is_empty() {
            return Err(RegistryError::EmptyName);
        }
        if !kind.allows(scope) {
            return Err(RegistryError::IllegalScope { kind, scope });
        }
        let key = (kind, scope, name.to_string());
        if self.by_name.contains_key(&key) {
            return Err(RegistryError::DuplicateName { kind, name: name.to_string() });
        }
        let id = ConceptId(self.concepts.len() as u32);
        self.concepts.push(Concept { id, kind, name: name.to_string(), scope });
        self.by_name.insert(key, id);
        Ok(id)
    }

    pub fn get(&self, id: ConceptId) -> Option<&Concept> {
        self.concepts.get(id.0 as usize)
    }

    /// Total name function over registered concepts.
    pub fn name(&self, id: ConceptId) -> &str {
        self.get(id).map(|c| c.name.as_str()).unwrap_or("<unknown>")
    }

    pub fn kind(&self, id: ConceptId) -> Option<ConceptKind> {
        self.get(id).map(|c| c.kind)
    }

    /// Looks a concept up by kind and name, preferring the domain instance.
    pub fn lookup(&self, kind: ConceptKind, name: &str) -> Option<ConceptId> {
        self.by_name
            .get(&(kind, ScopeTag::Domain, name.to_string()))
            .or_else(|| self.by_name.get(&(kind, ScopeTag::Environment, name.to_string())))
            .copied()
    }

    /// All concepts carrying `name`, in registration order.
    pub fn lookup_any(&self, name: &str) -> Vec<ConceptId> {
        self.concepts.iter().filter(|c| c.name == name).map(|c| c.id).collect()
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.iter()
    }

    pub fn of_kind(&self, kind: ConceptKind) -> impl Iterator<Item = &Concept> {
        self.concepts.iter().filter(move |c| c.kind == kind)
    }

    pub fn add_relation(
        &mut self,
        relation: RelationName,
        left: ConceptId,
        right: ConceptId,
    ) -> Result<(), RegistryError> {
        let lk = self.kind(left).ok_or(RegistryError::UnknownConcept(left))?;
        let rk = self.kind(right).ok_or(RegistryError::UnknownConcept(right))?;
        if !relation.accepts(lk, rk) {
            return Err(RegistryError::KindMismatch { relation, left: lk, right: rk });
        }
        if relation == RelationName::SubOf
            && !self.contains(RelationName::SubOf, left, right)
            && (left == right || self.is_ancestor(right, left))
        {
            return Err(RegistryError::CycleIntroduced { left, right });
        }
        self.relations.entry(relation).or_default().insert((left, right));
        Ok(())
    }

    pub fn contains(&self, relation: RelationName, left: ConceptId, right: ConceptId) -> bool {
        self.relations.get(&relation).is_some_and(|r| r.contains(&(left, right)))
    }

    pub fn pairs(&self, relation: RelationName) -> impl Iterator<Item = (ConceptId, ConceptId)> + '_ {
        self.relations.get(&relation).into_iter().flat_map(|r| r.iter().copied())
    }

    pub fn set_protocol(&mut self, buffer: ConceptId, protocol: Protocol) {
        self.protocols.insert(buffer, protocol);
    }

    pub fn protocol(&self, buffer: ConceptId) -> Protocol {
        self.protocols.get(&buffer).cloned().unwrap_or(Protocol::Fifo)
    }

    /// Direct parents of `unit` in the subOf forest.
    pub fn parents(&self, unit: ConceptId) -> Vec<ConceptId> {
        self.pairs(RelationName::SubOf).filter(|(l, _)| *l == unit).map(|(_, r)| r).collect()
    }

    /// True when `descendant` reaches `ancestor` through one or more subOf edges.
    pub fn is_ancestor(&self, descendant: ConceptId, ancestor: ConceptId) -> bool {
        let mut stack = self.parents(descendant);
        let mut seen = BTreeSet::new();
        while let Some(u) = stack.pop() {
            if u == ancestor {
                return true;
            }
            if seen.insert(u) {
                stack.extend(self.parents(u));
            }
        }
        false
    }

    /// True when the subOf relation has no directed cycle.
    pub fn suborg_acyclic(&self) -> bool {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Open,
            Done,
        }
        let mut marks: BTreeMap<ConceptId, Mark> = BTreeMap::new();
        fn visit(reg: &ConceptRegistry, u: ConceptId, marks: &mut BTreeMap<ConceptId, Mark>) -> bool {
            match marks.get(&u) {
                Some(Mark::Open) => return false,
                Some(Mark::Done) => return true,
                None => {}
            }
            marks.insert(u, Mark::Open);
            for p in reg.parents(u) {
                if !visit(reg, p, marks) {
                    return false;
                }
            }
            marks.insert(u, Mark::Done);
            true
        }
        self.of_kind(ConceptKind::OrgUnit).all(|c| visit(self, c.id, &mut marks))
    }

    pub fn allocation_violations(&self, mode: AllocationMode) -> Vec<AllocationViolation> {
        let mut out = BTreeSet::new();
        for (actor, role) in self.pairs(RelationName::Assign) {
            for (r, process) in self.pairs(RelationName::Undertake) {
                if r != role {
                    continue;
                }
                for (unit, p) in self.pairs(RelationName::Structure) {
                    if p != process {
                        continue;
                    }
                    let placed = self.pairs(RelationName::Structure).any(|(w, a)| {
                        a == actor && (w == unit || (mode == AllocationMode::Transitive && self.is_ancestor(w, unit)))
                    });
                    if !placed {
                        out.insert(AllocationViolation { actor, role, process, unit });
                    }
                }
            }
        }
        out.into_iter().collect()
    }

    /// Every actor filling a role needed by a process must be located in the
    /// unit owning that process (or, in transitive mode, below it).
    pub fn check_allocation_axiom(&self, mode: AllocationMode) -> Vec<Diagnostic> {
        self.allocation_violations(mode)
            .into_iter()
            .map(|v| {
                let names = [v.actor, v.role, v.process, v.unit].map(|c| self.name(c).to_string());
                Diagnostic::error(
                    "V015",
                    Span::default(),
                    format!(
                        "actor \"{}\" plays role \"{}\" undertaking \"{}\" but is not located in \"{}\"",
                        names[0], names[1], names[2], names[3]
                    ),
                )
                .with_subjects(names)
            })
            .collect()
    }

    pub fn scope_projection(&self, tag: ScopeTag) -> BTreeSet<ConceptId> {
        self.concepts.iter().filter(|c| c.scope == tag).map(|c| c.id).collect()
    }
}
