//! Deterministic discrete-event execution of a validated model.

mod buffer;
mod eca;
mod engine;
mod exec;
mod journal;
mod recovery;
mod scenario;
mod state;
mod trace;

use thiserror::Error;

pub use buffer::{Buffer, Draws, Item};
pub use engine::{init_instance, Engine, RunSummary, CHECKPOINT_VERSION};
pub use journal::{undo_effects, Journal, JournalEntry};
pub use scenario::{parse_time, Injection, InjectionKind, Override, Reply, Scenario, ScenarioError};
pub use state::*;
pub use trace::{from_jsonl, payload_digest, to_jsonl, write_jsonl, TraceEntry, TraceKind};

use crate::diagnostic::Diagnostic;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("model has {} validation error(s)", .0.len())]
    ModelInvalid(Vec<Diagnostic>),
    #[error("no runnable work in service state \"{state}\"")]
    StuckState { state: String },
    #[error("step budget of {steps} exhausted")]
    BudgetExhausted { steps: u64 },
    #[error("the service instance has already died")]
    Terminated,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[cfg(test)]
mod tests;
