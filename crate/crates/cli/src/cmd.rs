use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use btw_core::diagnostic::{has_errors, Diagnostic, Severity};
use btw_core::dsl::{format, load, parse};
use btw_core::metamodel::{AllocationMode, ConceptRegistry};
use btw_core::model::WorkflowModel;
use btw_core::sim::{write_jsonl, Engine, Scenario, SimError};
use btw_core::validate::{explain, validate_with, ValidateOptions};
use serde_json::json;

use crate::{Cli, Command, Format, INVALID, OK, UNFINISHED, USAGE};

// Output is collected and written once; a closed pipe is not an error.
thread_local! {
    static OUT: std::cell::RefCell<String> = const { std::cell::RefCell::new(String::new()) };
}

macro_rules! out {
    ($($arg:tt)*) => {
        OUT.with(|o| { let _ = write!(o.borrow_mut(), $($arg)*); })
    };
}

macro_rules! outln {
    () => { out!("\n") };
    ($($arg:tt)*) => {
        OUT.with(|o| { let _ = writeln!(o.borrow_mut(), $($arg)*); })
    };
}

fn flush() {
    let text = OUT.with(|o| std::mem::take(&mut *o.borrow_mut()));
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

pub fn run(cli: &Cli) -> u8 {
    let result = match &cli.command {
        Command::Validate { spec } => validate(cli, spec),
        Command::Simulate { spec, scenario, seed, max_steps, trace } => {
            simulate(cli, spec, scenario.as_deref(), *seed, *max_steps, trace.as_deref())
        }
        Command::Explain { code } => explain_code(cli, code),
        Command::ExportGraph { spec, out } => export_graph(cli, spec, out.as_deref()),
        Command::Fmt { spec } => fmt(cli, spec),
    };
    flush();
    result.unwrap_or_else(|msg| {
        eprintln!("btw: {msg}");
        USAGE
    })
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn check_output(path: &Path) -> Result<(), String> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(format!("{}: directory does not exist", dir.display()))
        }
        _ => Ok(()),
    }
}

fn color() -> bool {
    std::env::var("BTW_COLOR").is_ok_and(|v| v == "1")
}

fn print_diagnostics(cli: &Cli, file: &str, diags: &[Diagnostic]) {
    match cli.format {
        Format::Json => {
            let records: Vec<_> = diags.iter().map(|d| d.to_record(file)).collect();
            outln!("{}", serde_json::to_string_pretty(&records).expect("records serialise"));
        }
        Format::Text => {
            for d in diags {
                let line = d.render(file);
                if color() {
                    let (word, paint) = match d.severity {
                        Severity::Error => ("error", "31"),
                        Severity::Warning => ("warning", "33"),
                    };
                    outln!("{}", line.replacen(word, &format!("\x1b[1;{paint}m{word}\x1b[0m"), 1));
                } else {
                    outln!("{line}");
                }
            }
        }
    }
}

fn options(cli: &Cli) -> ValidateOptions {
    let allocation = if cli.strict_allocation { AllocationMode::Strict } else { AllocationMode::Transitive };
    ValidateOptions { allocation }
}

/// Loads and validates; `Err` carries every diagnostic when any is an error.
fn checked(cli: &Cli, text: &str) -> Result<(ConceptRegistry, WorkflowModel, Vec<Diagnostic>), Vec<Diagnostic>> {
    let (reg, model) = load(text)?;
    let diags = validate_with(&model, &reg, options(cli));
    if has_errors(&diags) {
        return Err(diags);
    }
    Ok((reg, model, diags))
}

fn validate(cli: &Cli, spec: &Path) -> Result<u8, String> {
    let text = read(spec)?;
    let file = spec.display().to_string();
    let (diags, code) = match checked(cli, &text) {
        Ok((_, _, diags)) => (diags, OK),
        Err(diags) => (diags, INVALID),
    };
    print_diagnostics(cli, &file, &diags);
    if cli.format == Format::Text && diags.is_empty() {
        outln!("{file}: ok");
    }
    Ok(code)
}

fn simulate(
    cli: &Cli,
    spec: &Path,
    scenario: Option<&Path>,
    seed: u64,
    max_steps: u64,
    trace: Option<&Path>,
) -> Result<u8, String> {
    let text = read(spec)?;
    let sc_text = scenario.map(read).transpose()?.unwrap_or_default();
    if let Some(t) = trace {
        check_output(t)?;
    }
    let file = spec.display().to_string();
    let model = match checked(cli, &text) {
        Ok((_, model, warnings)) => {
            if cli.format == Format::Text {
                print_diagnostics(cli, &file, &warnings);
            }
            model
        }
        Err(diags) => {
            print_diagnostics(cli, &file, &diags);
            return Ok(INVALID);
        }
    };
    let sc = Scenario::from_jsonl(&sc_text, &model).map_err(|e| e.to_string())?;
    let mut engine = Engine::new_unchecked(&model, sc, seed);
    let result = engine.run(max_steps);
    if let Some(t) = trace {
        let mut f = fs::File::create(t).map_err(|e| format!("{}: {e}", t.display()))?;
        write_jsonl(&mut f, engine.trace()).map_err(|e| format!("{}: {e}", t.display()))?;
    }

    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for e in engine.trace() {
        *counts.entry(format!("{:?}", e.kind)).or_default() += 1;
    }
    let (outcome, code, note) = match &result {
        Ok(_) => ("death", OK, None),
        Err(e @ SimError::StuckState { .. }) => ("stuck", UNFINISHED, Some(e.to_string())),
        Err(e @ SimError::BudgetExhausted { .. }) => ("budget", UNFINISHED, Some(e.to_string())),
        Err(e) => return Err(e.to_string()),
    };
    let final_state = engine.final_state();
    match cli.format {
        Format::Json => {
            let summary = json!({
                "outcome": outcome,
                "final_state": final_state,
                "steps": engine.state.steps,
                "trace_entries": engine.trace().len(),
                "counts": counts,
            });
            outln!("{}", serde_json::to_string_pretty(&summary).expect("summary serialises"));
        }
        Format::Text => {
            if let Some(n) = note {
                outln!("{n}");
            }
            outln!("final state: {final_state}");
            outln!("steps: {}", engine.state.steps);
            outln!("trace entries: {}", engine.trace().len());
            for (kind, n) in &counts {
                outln!("  {kind}: {n}");
            }
        }
    }
    Ok(code)
}

fn explain_code(cli: &Cli, code: &str) -> Result<u8, String> {
    let info = explain(code).map_err(|e| e.to_string())?;
    match cli.format {
        Format::Json => {
            let j = json!({
                "code": info.code,
                "title": info.title,
                "severity": if info.warning { "warning" } else { "error" },
                "statement": info.statement,
                "anchor": info.anchor,
                "example": info.example,
            });
            outln!("{}", serde_json::to_string_pretty(&j).expect("explain serialises"));
        }
        Format::Text => {
            outln!("{}: {}", info.code, info.title);
            outln!();
            outln!("{}", info.statement);
            outln!();
            outln!("Topic: {}", info.anchor);
            outln!();
            outln!("Failing example:");
            for line in info.example.lines() {
                outln!("    {line}");
            }
        }
    }
    Ok(OK)
}

fn export_graph(cli: &Cli, spec: &Path, out: Option<&Path>) -> Result<u8, String> {
    let text = read(spec)?;
    if let Some(o) = out {
        check_output(o)?;
    }
    let model = match load(&text) {
        Ok((_, m)) => m,
        Err(diags) => {
            print_diagnostics(cli, &spec.display().to_string(), &diags);
            return Ok(INVALID);
        }
    };
    let dot = btw_core::dot::to_dot(&model);
    match out {
        Some(o) => fs::write(o, dot).map_err(|e| format!("{}: {e}", o.display()))?,
        None => out!("{dot}"),
    }
    Ok(OK)
}

fn fmt(cli: &Cli, spec: &Path) -> Result<u8, String> {
    let text = read(spec)?;
    match parse(&text) {
        Ok(ast) => {
            out!("{}", format(&ast));
            Ok(OK)
        }
        Err(diags) => {
            print_diagnostics(cli, &spec.display().to_string(), &diags);
            Ok(INVALID)
        }
    }
}
