use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod cmd;

/// Validate, simulate and render business workflow specifications.
#[derive(Parser, Debug)]
#[command(name = "btw", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Actors must sit in exactly the unit where a process is located.
    #[arg(long, global = true)]
    pub strict_allocation: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a specification and print its diagnostics.
    Validate { spec: PathBuf },
    /// Run a specification against a scenario.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        /// Where to write the JSONL trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Describe a diagnostic code.
    Explain { code: String },
    /// Print the model as a Graphviz digraph.
    ExportGraph {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a specification in canonical layout.
    Fmt { spec: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

/// Exit statuses: success, spec errors, run did not finish, usage or IO.
pub const OK: u8 = 0;
pub const INVALID: u8 = 1;
pub const UNFINISHED: u8 = 2;
pub const USAGE: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { OK });
        }
    };
    ExitCode::from(cmd::run(&cli))
}
