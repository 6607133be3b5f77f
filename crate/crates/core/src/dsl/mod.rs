//! Textual specification language: lexing, parsing, canonical formatting and
//! lowering into a [`crate::model::WorkflowModel`].

pub mod ast;
mod format;
mod lexer;
mod lower;
mod parser;

pub use format::{format, format_expr, quote};
pub use lexer::{lex, Tok, Token};
pub use lower::{load, lower, DUPLICATE, TYPE_MISMATCH, UNRESOLVED};
pub use parser::{is_keyword, parse, parse_expr, parse_partial, KEYWORDS};
