//! Scenario files: one JSON object per line with fields
//! `{t, kind, target, payload}`.
//!
//! Kinds:
//! - `message`: an external message arrives at the local service; `target`
//!   is the message type, `payload` a record or an array of records.
//! - `fail_start`: the next `payload.count` (default 1) starts of `target`
//!   fail.
//! - `f_abort`: the running execution of `target` fails.
//! - `nf_abort`: business abort at `target`, or at every running entity when
//!   `target` is absent.
//! - `clock`: only advances the clock to `t`.
//! - `override`: forces `target` decision's outcome when both rules hold;
//!   `payload` is `{outcome, occurrence?}`.
//! - `reply`: canned reply from remote service `target`, consumed in order by
//!   synchronous calls; `payload` is `{message, records, delay?}`.
//!
//! `t` is seconds since the epoch or a `YYYY-MM-DD[THH:MM:SS]` string and
//! must never decrease.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::dsl::ast::Outcome;
use crate::expr::{parse_date, Record, Value, SECONDS_PER_DAY};
use crate::model::{EntityKind, WorkflowModel};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("scenario line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InjectionKind {
    Message { message: String, records: Vec<Record> },
    FailStart { entity: String, count: u32 },
    FAbort { entity: String },
    NfAbort { entity: Option<String> },
    Clock,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Injection {
    pub t: i64,
    pub kind: InjectionKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Override {
    pub decision: String,
    /// Zero-based evaluation index; `None` applies to every evaluation.
    pub occurrence: Option<u32>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reply {
    pub message: String,
    pub records: Vec<Record>,
    /// Seconds between the request and the reply.
    pub delay: i64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub injections: Vec<Injection>,
    pub overrides: Vec<Override>,
    pub replies: BTreeMap<String, Vec<Reply>>,
}

#[derive(Deserialize)]
struct Line {
    t: Json,
    kind: String,
    #[serde(default)]
    target: Option<String>,
    #[serde(default)]
    payload: Json,
}

pub fn parse_time(t: &Json) -> Option<i64> {
    match t {
        Json::Number(n) => n.as_i64(),
        Json::String(s) => {
            if let Some(d) = parse_date(s) {
                return Some(d * SECONDS_PER_DAY);
            }
            let dt = chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok()?;
            Some(dt.and_utc().timestamp())
        }
        _ => None,
    }
}

impl Scenario {
    /// Parses and checks a scenario against the model it will drive.
    pub fn from_jsonl(text: &str, model: &WorkflowModel) -> Result<Scenario, ScenarioError> {
        let mut sc = Scenario::default();
        let mut last = i64::MIN;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let fail = |message: String| ScenarioError { line, message };
            if raw.trim().is_empty() || raw.trim_start().starts_with("//") {
                continue;
            }
            let l: Line = serde_json::from_str(raw).map_err(|e| fail(e.to_string()))?;
            let t = parse_time(&l.t).ok_or_else(|| fail(format!("bad time {}", l.t)))?;
            if t < last {
                return Err(fail(format!("time {t} is earlier than the previous line ({last})")));
            }
            last = t;
            let target = || l.target.clone().ok_or_else(|| fail(format!("`{}` needs a target", l.kind)));
            let entity = |name: String| {
                if model.find(&name).is_some() {
                    Ok(name)
                } else {
                    Err(fail(format!("unknown entity \"{name}\"")))
                }
            };
            let kind = match l.kind.as_str() {
                "message" => {
                    let message = target()?;
                    let records = records(model, &message, &l.payload).map_err(fail)?;
                    InjectionKind::Message { message, records }
                }
                "fail_start" => {
                    let count = l.payload.get("count").and_then(Json::as_u64).unwrap_or(1) as u32;
                    InjectionKind::FailStart { entity: entity(target()?)?, count }
                }
                "f_abort" => InjectionKind::FAbort { entity: entity(target()?)? },
                "nf_abort" => InjectionKind::NfAbort { entity: l.target.clone().map(entity).transpose()? },
                "clock" => InjectionKind::Clock,
                "override" => {
                    let decision = target()?;
                    if !model.occurrences(&decision).any(|e| e.kind == EntityKind::Decision) {
                        return Err(fail(format!("\"{decision}\" is not a decision")));
                    }
                    let outcome = match l.payload.get("outcome").and_then(Json::as_str) {
                        Some("positive") => Outcome::Positive,
                        Some("negative") => Outcome::Negative,
                        other => return Err(fail(format!("bad outcome {other:?}"))),
                    };
                    let occurrence = l.payload.get("occurrence").and_then(Json::as_u64).map(|n| n as u32);
                    sc.overrides.push(Override { decision, occurrence, outcome });
                    continue;
                }
                "reply" => {
                    let service = target()?;
                    let message = l
                        .payload
                        .get("message")
                        .and_then(Json::as_str)
                        .ok_or_else(|| fail("reply needs `payload.message`".into()))?
                        .to_string();
                    let records =
                        records(model, &message, l.payload.get("records").unwrap_or(&Json::Null)).map_err(fail)?;
                    let delay = l.payload.get("delay").and_then(Json::as_i64).unwrap_or(0);
                    sc.replies.entry(service).or_default().push(Reply { message, records, delay });
                    continue;
                }
                other => return Err(fail(format!("unknown kind `{other}`"))),
            };
            sc.injections.push(Injection { t, kind });
        }
        Ok(sc)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |v: Json| {
            out.push_str(&v.to_string());
            out.push('\n');
        };
        for o in &self.overrides {
            let mut payload = json!({ "outcome": o.outcome.keyword() });
            if let Some(n) = o.occurrence {
                payload["occurrence"] = json!(n);
            }
            push(json!({ "t": 0, "kind": "override", "target": o.decision, "payload": payload }));
        }
        for (svc, replies) in &self.replies {
            for r in replies {
                let payload = json!({ "message": r.message, "records": records_json(&r.records), "delay": r.delay });
                push(json!({ "t": 0, "kind": "reply", "target": svc, "payload": payload }));
            }
        }
        for inj in &self.injections {
            push(match &inj.kind {
                InjectionKind::Message { message, records } => {
                    json!({ "t": inj.t, "kind": "message", "target": message, "payload": records_json(records) })
                }
                InjectionKind::FailStart { entity, count } => {
                    json!({ "t": inj.t, "kind": "fail_start", "target": entity, "payload": { "count": count } })
                }
                InjectionKind::FAbort { entity } => json!({ "t": inj.t, "kind": "f_abort", "target": entity }),
                InjectionKind::NfAbort { entity: Some(e) } => json!({ "t": inj.t, "kind": "nf_abort", "target": e }),
                InjectionKind::NfAbort { entity: None } => json!({ "t": inj.t, "kind": "nf_abort" }),
                InjectionKind::Clock => json!({ "t": inj.t, "kind": "clock" }),
            });
        }
        out
    }

    /// Outcome forced for the `occurrence`-th evaluation of `decision`.
    pub fn override_for(&self, decision: &str, occurrence: u32) -> Option<Outcome> {
        self.overrides
            .iter()
            .find(|o| o.decision == decision && o.occurrence.is_none_or(|n| n == occurrence))
            .map(|o| o.outcome)
    }
}

fn records(model: &WorkflowModel, message: &str, payload: &Json) -> Result<Vec<Record>, String> {
    let schema = model.catalog.messages.get(message).ok_or_else(|| format!("unknown message \"{message}\""))?;
    let items = match payload {
        Json::Array(xs) => xs.iter().collect(),
        Json::Null => vec![],
        one => vec![one],
    };
    if items.is_empty() && !schema.fields.is_empty() {
        return Err(format!("message \"{message}\" needs a payload"));
    }
    let mut out: Vec<Record> = items.into_iter().map(|j| schema.record_from_json(j)).collect::<Result<_, _>>()?;
    if out.is_empty() {
        out.push(Record::new());
    }
    Ok(out)
}

fn records_json(records: &[Record]) -> Json {
    let one = |r: &Record| Value::Record(r.clone()).to_json();
    match records {
        [r] => one(r),
        rs => Json::Array(rs.iter().map(one).collect()),
    }
}
