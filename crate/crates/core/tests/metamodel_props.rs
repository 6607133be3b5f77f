use std::collections::BTreeSet;

use btw_core::metamodel::{
    AllocationMode, ConceptId, ConceptKind, ConceptRegistry, RegistryError, RelationName, ScopeTag,
};
use proptest::prelude::*;

fn units(n: usize) -> (ConceptRegistry, Vec<ConceptId>) {
    let mut reg = ConceptRegistry::new();
    let ids = (0..n)
        .map(|i| reg.register_concept(ConceptKind::OrgUnit, &format!("U{i}"), ScopeTag::Domain).unwrap())
        .collect();
    (reg, ids)
}

/// Plain DFS over the accepted edges.
fn reaches(edges: &BTreeSet<(usize, usize)>, n: usize, from: usize, to: usize) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        for &(a, b) in edges {
            if a == u && !seen[b] {
                if b == to {
                    return true;
                }
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    false
}

proptest! {
    #[test]
    fn suborg_stays_acyclic(n in 2usize..12, attempts in prop::collection::vec((0usize..12, 0usize..12), 0..60)) {
        let (mut reg, ids) = units(n);
        let mut accepted = BTreeSet::new();
        for (a, b) in attempts {
            let (a, b) = (a % n, b % n);
            let cyclic = !accepted.contains(&(a, b)) && (a == b || reaches(&accepted, n, b, a));
            match reg.add_relation(RelationName::SubOf, ids[a], ids[b]) {
                Ok(()) => {
                    prop_assert!(!cyclic);
                    accepted.insert((a, b));
                }
                Err(RegistryError::CycleIntroduced { .. }) => prop_assert!(cyclic),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
            prop_assert!(reg.suborg_acyclic());
        }
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(reg.is_ancestor(ids[a], ids[b]), reaches(&accepted, n, a, b));
            }
        }
    }

    #[test]
    fn allocation_matches_brute_force(
        n_units in 1usize..6,
        n_actors in 1usize..6,
        n_roles in 1usize..5,
        n_procs in 1usize..5,
        tree in prop::collection::vec(0usize..6, 5),
        located in prop::collection::vec(0usize..6, 6),
        assign in prop::collection::vec((0usize..6, 0usize..5), 0..10),
        undertake in prop::collection::vec((0usize..5, 0usize..5), 0..8),
        owner in prop::collection::vec(0usize..6, 5),
    ) {
        let (mut reg, u) = units(n_units);
        // unit i > 0 hangs under some earlier unit, so the forest is acyclic
        let mut parent = vec![None; n_units];
        for i in 1..n_units {
            let p = tree[i - 1] % i;
            reg.add_relation(RelationName::SubOf, u[i], u[p]).unwrap();
            parent[i] = Some(p);
        }
        let mk = |reg: &mut ConceptRegistry, k, p: &str, n| -> Vec<ConceptId> {
            (0..n).map(|i| reg.register_concept(k, &format!("{p}{i}"), ScopeTag::Domain).unwrap()).collect()
        };
        let actors = mk(&mut reg, ConceptKind::Actor, "A", n_actors);
        let roles = mk(&mut reg, ConceptKind::Role, "R", n_roles);
        let procs = mk(&mut reg, ConceptKind::Process, "P", n_procs);
        for (i, &a) in actors.iter().enumerate() {
            reg.add_relation(RelationName::Structure, u[located[i] % n_units], a).unwrap();
        }
        for (i, &p) in procs.iter().enumerate() {
            reg.add_relation(RelationName::Structure, u[owner[i] % n_units], p).unwrap();
        }
        let assign: BTreeSet<_> = assign.into_iter().map(|(a, r)| (a % n_actors, r % n_roles)).collect();
        let undertake: BTreeSet<_> = undertake.into_iter().map(|(r, p)| (r % n_roles, p % n_procs)).collect();
        for &(a, r) in &assign {
            reg.add_relation(RelationName::Assign, actors[a], roles[r]).unwrap();
        }
        for &(r, p) in &undertake {
            reg.add_relation(RelationName::Undertake, roles[r], procs[p]).unwrap();
        }
        let below = |mut w: usize, target: usize| loop {
            if w == target {
                return true;
            }
            match parent[w] {
                Some(p) => w = p,
                None => return false,
            }
        };
        for mode in [AllocationMode::Strict, AllocationMode::Transitive] {
            let mut expected = BTreeSet::new();
            for &(a, r) in &assign {
                for &(r2, p) in &undertake {
                    if r2 != r {
                        continue;
                    }
                    let unit = owner[p] % n_units;
                    let at = located[a] % n_units;
                    let ok = match mode {
                        AllocationMode::Strict => at == unit,
                        AllocationMode::Transitive => below(at, unit),
                    };
                    if !ok {
                        expected.insert((actors[a], roles[r], procs[p], u[unit]));
                    }
                }
            }
            let got: BTreeSet<_> = reg
                .allocation_violations(mode)
                .into_iter()
                .map(|v| (v.actor, v.role, v.process, v.unit))
                .collect();
            prop_assert_eq!(&got, &expected);
            prop_assert_eq!(reg.check_allocation_axiom(mode).len(), expected.len());
        }
    }

    #[test]
    fn scopes_partition_and_lookup_round_trips(
        entries in prop::collection::vec((0usize..11, prop::bool::ANY, "[A-Za-z][A-Za-z ]{0,8}"), 0..40)
    ) {
        let mut reg = ConceptRegistry::new();
        let mut registered = Vec::new();
        for (k, env, name) in entries {
            let kind = ConceptKind::ALL[k];
            let scope = if env { ScopeTag::Environment } else { ScopeTag::Domain };
            match reg.register_concept(kind, &name, scope) {
                Ok(id) => registered.push((id, kind, name, scope)),
                Err(RegistryError::IllegalScope { .. }) => prop_assert!(!kind.allows(scope)),
                Err(RegistryError::DuplicateName { .. }) => {
                    prop_assert!(registered.iter().any(|(_, k2, n2, s2)| *k2 == kind && *n2 == name && *s2 == scope))
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }
        let dom = reg.scope_projection(ScopeTag::Domain);
        let env = reg.scope_projection(ScopeTag::Environment);
        prop_assert!(dom.is_disjoint(&env));
        prop_assert_eq!(dom.len() + env.len(), reg.len());
        for (id, kind, name, scope) in &registered {
            let c = reg.get(*id).unwrap();
            prop_assert_eq!(&c.name, name);
            prop_assert_eq!(c.kind, *kind);
            prop_assert_eq!(reg.name(*id), name.as_str());
            prop_assert!(reg.lookup_any(name).contains(id));
            let shadowed = *scope == ScopeTag::Environment
                && registered.iter().any(|(_, k2, n2, s2)| k2 == kind && n2 == name && *s2 == ScopeTag::Domain);
            if !shadowed {
                prop_assert_eq!(reg.lookup(*kind, name), Some(*id));
            }
        }
    }
}
