mod support;

use std::collections::BTreeMap;
use std::fmt::Write;

use btw_core::dsl::load;
use btw_core::fixtures::{scenarios, AXIOMS, ROAD_CLOSURES};
use btw_core::sim::{init_instance, Engine, Scenario, TraceEntry, TraceKind};
use btw_core::validate::validate;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{loaded, network, random_road_scenario, run_text};

fn check_trace(trace: &[TraceEntry]) -> Result<(), TestCaseError> {
    let mut live: BTreeMap<&str, i64> = BTreeMap::new();
    for w in trace.windows(2) {
        prop_assert!(w[0].seq < w[1].seq, "seq {} then {}", w[0].seq, w[1].seq);
        prop_assert!(w[0].clock <= w[1].clock, "clock {} then {}", w[0].clock, w[1].clock);
    }
    for t in trace {
        let name = t.subject.first().map(String::as_str).unwrap_or("");
        match t.kind {
            TraceKind::EntityStarted => *live.entry(name).or_default() += 1,
            TraceKind::EntityCompleted => {
                let n = live.entry(name).or_default();
                prop_assert!(*n > 0, "{name} completed at seq {} without a start", t.seq);
                *n -= 1;
            }
            _ => {}
        }
    }
    // Every temporal violation is answered by a non-failure abort.
    for (i, t) in trace.iter().enumerate() {
        if t.kind == TraceKind::TemporalViolation {
            prop_assert!(
                trace[i..]
                    .iter()
                    .any(|u| u.kind == TraceKind::AbortRaised && u.detail.as_deref() == Some("nonfailure")),
                "violation at seq {} not followed by an abort",
                t.seq
            );
        }
    }
    Ok(())
}

/// `k` timed processes joined by "J" before "After".
fn join_spec(hours: &[u32]) -> String {
    let mut s = String::from("scope {\n  service \"Svc\";\n  message \"Go\" { }\n}\n\nmodel {\n  process \"Root\" {\n");
    for (i, h) in hours.iter().enumerate() {
        let _ = writeln!(s, "    process \"P{i}\" duration {h} hours;");
    }
    s.push_str("    sync \"J\";\n    process \"After\" duration 1 hours;\n");
    for i in 0..hours.len() {
        let _ = writeln!(s, "    initial \"P{i}\";\n    trigger \"P{i}\" -> \"J\";");
    }
    s.push_str("    trigger \"J\" -> \"After\";\n  }\n}\n\n");
    s.push_str("service \"Svc\" {\n  on birth when msg_from(\"Go\") then trigger \"Root\";\n  birth -> death when process_end(\"Root\");\n}\n");
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn road_traces_are_well_formed(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, m) = loaded(ROAD_CLOSURES);
        let mut sc = random_road_scenario(&mut rng);
        if rng.gen_bool(0.5) {
            let day = rng.gen_range(1..=28);
            sc = sc.replace("\"gazetted\":\"2024-03-12\"", &format!("\"gazetted\":\"2024-0{}-{day:02}\"", rng.gen_range(2..=6)));
        }
        let (_, trace) = run_text(&m, &reg, &sc, seed, 10_000);
        check_trace(&trace)?;
    }

    #[test]
    fn checkpoints_resume_identically(seed in any::<u64>(), cut in 1u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, m) = loaded(ROAD_CLOSURES);
        let sc = random_road_scenario(&mut rng);
        let (whole, trace) = run_text(&m, &reg, &sc, seed, 10_000);
        let mut first = init_instance(&m, &reg, Scenario::from_jsonl(&sc, &m).unwrap(), seed).unwrap();
        for _ in 0..cut {
            if first.is_dead() || first.step().is_err() {
                break;
            }
        }
        let mut second = Engine::restore(&m, &first.checkpoint()).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let rest = second.run(10_000);
        let mut joined = first.trace().to_vec();
        joined.extend_from_slice(second.trace());
        prop_assert_eq!(joined, trace);
        prop_assert_eq!(rest.is_ok(), whole.is_ok() || first.is_dead());
    }

    #[test]
    fn join_waits_for_every_input(hours in prop::collection::vec(1u32..48, 2..6)) {
        let (reg, m) = loaded(&join_spec(&hours));
        let (r, trace) = run_text(&m, &reg, "{\"t\":0,\"kind\":\"message\",\"target\":\"Go\"}\n", 0, 10_000);
        prop_assert!(r.is_ok(), "{:?}", r);
        check_trace(&trace)?;
        let pos = |kind, name: &str| trace.iter().position(|t| t.is(kind, name));
        let fired = pos(TraceKind::EntityStarted, "J").ok_or_else(|| TestCaseError::fail("J never fired"))?;
        for i in 0..hours.len() {
            let done = pos(TraceKind::EntityCompleted, &format!("P{i}")).ok_or_else(|| TestCaseError::fail("input missing"))?;
            prop_assert!(done < fired);
        }
        let longest = *hours.iter().max().unwrap() as i64 * 3600;
        prop_assert_eq!(trace[fired].clock, longest);
        prop_assert_eq!(trace.iter().filter(|t| t.is(TraceKind::EntityStarted, "After")).count(), 1);
    }

    #[test]
    fn validation_is_deterministic_and_clean_models_start(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = match seed % 3 {
            0 => ROAD_CLOSURES.to_string(),
            1 => {
                let (_, pass, fail) = AXIOMS[rng.gen_range(0..AXIOMS.len())];
                if rng.gen_bool(0.5) { pass.to_string() } else { fail.to_string() }
            }
            _ => network::generate(rng.gen_range(1..6), &mut rng).spec(),
        };
        let Ok((reg, m)) = load(&text) else { return Ok(()) };
        let first = validate(&m, &reg);
        let second = validate(&m, &reg);
        // spans compare equal regardless of position, so check locations too
        prop_assert_eq!(&first, &second);
        prop_assert!(first.iter().zip(&second).all(|(a, b)| a.span.same_location(&b.span)));
        let clean = !first.iter().any(|d| d.is_error());
        prop_assert_eq!(init_instance(&m, &reg, Scenario::default(), seed).is_ok(), clean);
    }
}

#[test]
fn shipped_scenarios_are_well_formed() {
    let (reg, m) = loaded(ROAD_CLOSURES);
    for sc in [scenarios::HAPPY, scenarios::REJECTION, scenarios::ROLLBACK] {
        let (r, trace) = run_text(&m, &reg, sc, 0, 10_000);
        assert!(r.is_ok());
        check_trace(&trace).unwrap();
    }
}
