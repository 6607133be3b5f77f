use super::*;
use crate::dsl::{format, lex, Tok};
use crate::fixtures::ROAD_CLOSURES;

#[test]
fn empty_input_wants_scope() {
    let d = parse("").unwrap_err();
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, "SyntaxError");
    assert!(d[0].message.contains("expected scope block"), "{}", d[0].message);
    let d = parse("  // nothing\n").unwrap_err();
    assert!(d[0].message.contains("expected scope block"));
}

#[test]
fn fixture_has_three_top_level_processes() {
    let ast = parse(ROAD_CLOSURES).unwrap();
    assert_eq!(ast.models.len(), 3);
    let names: Vec<_> = ast.models.iter().map(|m| m.entities[0].name.text.as_str()).collect();
    assert_eq!(names, ["Application Lodgement", "Application Investigation", "Title Issue"]);
    assert_eq!(ast.services.len(), 1);
    assert_eq!(ast.recovery.as_ref().unwrap().entries.len(), 5);
}

#[test]
fn fixture_round_trips_through_formatter() {
    let ast = parse(ROAD_CLOSURES).unwrap();
    let text = format(&ast);
    let again = parse(&text).unwrap();
    assert_eq!(ast, again);
    assert_eq!(format(&again), text, "formatting is a fixed point");
}

#[test]
fn minimal_spec_golden_text() {
    let src = "scope{service \"S\";}model{process \"P\";}";
    let expected = "scope {\n  service \"S\";\n}\n\nmodel {\n  process \"P\";\n}\n";
    assert_eq!(format(&parse(src).unwrap()), expected);
}

#[test]
fn several_errors_in_one_pass() {
    let src = r#"
scope {
  service ;
  role "R";
  actor "A" in ;
}
model {
  process "P" {
    receive "M" frm service;
    pre 1 < ;
  }
}
"#;
    let d = parse(src).unwrap_err();
    let lines: Vec<u32> = d.iter().map(|d| d.span.line).collect();
    assert_eq!(lines, vec![3, 5, 9, 10]);
}

#[test]
fn diagnostics_stay_in_bounds() {
    for src in ["scope {", "scope { service \"x", "model", "scope { } model { process }", "\"unterminated"] {
        let (_, diags) = parse_partial(src);
        assert!(!diags.is_empty(), "{src}");
        for d in diags {
            assert!(d.span.end <= src.len() && d.span.start <= d.span.end, "{src}: {:?}", d.span);
        }
    }
}

/// Deleting any single keyword either leaves a valid spec or produces
/// exactly one diagnostic, on the line of the deleted keyword.
#[test]
fn keyword_deletion_reports_once_at_the_gap() {
    let (toks, _) = lex(ROAD_CLOSURES);
    let mut checked = 0;
    for t in &toks {
        let Tok::Word(w) = &t.tok else { continue };
        if !is_keyword(w) {
            continue;
        }
        let mutated = format!("{}{}", &ROAD_CLOSURES[..t.span.start], &ROAD_CLOSURES[t.span.end..]);
        if let Err(d) = parse(&mutated) {
            checked += 1;
            assert_eq!(d.len(), 1, "deleting `{w}` at line {}: {:#?}", t.span.line, d);
            assert_eq!(d[0].span.line, t.span.line, "deleting `{w}` at line {}: {}", t.span.line, d[0].message);
        }
    }
    assert!(checked > 300, "only {checked} mutations failed to parse");
}

#[test]
fn expression_precedence() {
    let e = parse_expr("a or b and not c == 1 + 2 - x.f").unwrap();
    assert_eq!(crate::dsl::format_expr(&e), "a or (b and (not (c == ((1 + 2) - x.f))))");
}
