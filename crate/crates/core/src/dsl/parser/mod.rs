//! Recursive-descent parser with statement-level error recovery.
//!
//! Every statement either ends in `;` or in a single brace group, so after an
//! error the parser rewinds to the statement start and skips exactly one
//! statement. A missing `;` before something that starts a new statement is
//! reported once and otherwise ignored.

mod body;
mod expr;
mod scope;
mod service;

use crate::diagnostic::{has_errors, Diagnostic, Span};
use crate::dsl::ast::{Name, SpecAst};
use crate::dsl::lexer::{lex, Tok, Token};
use crate::expr::DurationUnit;

/// Reserved words. Variables may not use them.
pub const KEYWORDS: &[&str] = &[
    "scope",
    "organisation",
    "unit",
    "in",
    "role",
    "actor",
    "assigned",
    "object",
    "informational",
    "material",
    "service",
    "external",
    "message",
    "store",
    "holds",
    "fragment",
    "buffer",
    "fifo",
    "lifo",
    "random",
    "predicate",
    "accepts",
    "locate",
    "undertake",
    "model",
    "process",
    "decision",
    "sync",
    "exclusive",
    "duration",
    "receive",
    "from",
    "take",
    "put",
    "into",
    "send",
    "to",
    "reply",
    "add",
    "update",
    "where",
    "remove",
    "set",
    "each",
    "transfer",
    "pre",
    "post",
    "timeout",
    "var",
    "uses",
    "hci",
    "schema",
    "initial",
    "trigger",
    "commit",
    "positive",
    "negative",
    "when",
    "terminates",
    "aborts",
    "state",
    "within",
    "birth",
    "death",
    "on",
    "if",
    "then",
    "forward",
    "none",
    "recovery",
    "redo",
    "rollback",
    "undo",
    "null",
    "compensate",
    "self",
    "and",
    "or",
    "not",
    "true",
    "false",
    "date",
    "msg",
    "exists",
    "forall",
    "now",
    "today",
    "ref",
    "bool",
    "int",
    "text",
    "time",
    "timestamp",
    "msg_from",
    "msg_to",
    "db_state",
    "decision_end",
    "process_start",
    "process_end",
    "process_start_failed",
    "abort",
    "failure",
    "nonfailure",
    "timer",
    "seconds",
    "second",
    "minutes",
    "minute",
    "hours",
    "hour",
    "days",
    "day",
    "months",
    "month",
    "years",
    "year",
    "start_date",
    "end_date",
    "start_time",
    "end_time",
    "send_date",
    "rec_date",
    "send_time",
    "rec_time",
    "state_entered",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

/// Marker for an error that has already been reported.
#[derive(Debug)]
pub(crate) struct Reported;

pub(crate) type PResult<T> = Result<T, Reported>;

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
    pub(crate) diags: Vec<Diagnostic>,
}

/// Parses a specification. Fails with every syntax diagnostic found.
pub fn parse(text: &str) -> Result<SpecAst, Vec<Diagnostic>> {
    let (ast, diags) = parse_partial(text);
    match ast {
        Some(ast) if !has_errors(&diags) => Ok(ast),
        _ => Err(diags),
    }
}

/// Parses as much as possible, returning the recovered tree and all
/// diagnostics.
pub fn parse_partial(text: &str) -> (Option<SpecAst>, Vec<Diagnostic>) {
    let (toks, lex_diags) = lex(text);
    let mut p = Parser { toks, pos: 0, diags: lex_diags };
    let ast = p.spec();
    (ast, p.diags)
}

/// Parses a standalone expression (used by tests and scenario tooling).
pub fn parse_expr(text: &str) -> Result<crate::expr::Expr, Vec<Diagnostic>> {
    let (toks, diags) = lex(text);
    let mut p = Parser { toks, pos: 0, diags };
    let e = p.expr();
    if e.is_ok() && !p.at_eof() {
        let span = p.span();
        p.diags.push(Diagnostic::error("SyntaxError", span, "unexpected input after expression"));
    }
    match e {
        Ok(e) if p.diags.is_empty() => Ok(e),
        _ => Err(p.diags),
    }
}

impl Parser {
    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    pub(crate) fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    pub(crate) fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Word(x) if x == w)
    }

    pub(crate) fn at_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(x) if *x == p)
    }

    pub(crate) fn eat_word(&mut self, w: &str) -> bool {
        if self.at_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_punct(&mut self, p: &str) -> bool {
        if self.at_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn error<T>(&mut self, span: Span, message: impl Into<String>, hint: Option<&str>) -> PResult<T> {
        let mut d = Diagnostic::error("SyntaxError", span, message);
        if let Some(h) = hint {
            d = d.with_hint(h);
        }
        self.diags.push(d);
        Err(Reported)
    }

    pub(crate) fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let found = self.peek().describe();
        self.error(self.span(), format!("expected {expected}, found {found}"), None)
    }

    pub(crate) fn expect_word(&mut self, w: &str) -> PResult<Span> {
        if self.at_word(w) {
            Ok(self.bump().span)
        } else {
            self.unexpected(&format!("`{w}`"))
        }
    }

    pub(crate) fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.at_punct(p) {
            Ok(self.bump().span)
        } else {
            self.unexpected(&format!("`{p}`"))
        }
    }

    pub(crate) fn expect_name(&mut self) -> PResult<Name> {
        if let Tok::Str(s) = self.peek() {
            let text = s.clone();
            let span = self.bump().span;
            Ok(Name { text, span })
        } else {
            self.unexpected("a quoted name")
        }
    }

    /// A bare identifier that is not a keyword.
    pub(crate) fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek() {
            Tok::Word(w) if !is_keyword(w) => {
                let w = w.clone();
                Ok((w, self.bump().span))
            }
            _ => self.unexpected("an identifier"),
        }
    }

    pub(crate) fn expect_int(&mut self) -> PResult<i64> {
        if let Tok::Int(n) = self.peek() {
            let n = *n;
            self.bump();
            Ok(n)
        } else {
            self.unexpected("an integer")
        }
    }

    pub(crate) fn expect_duration(&mut self) -> PResult<(i64, DurationUnit)> {
        let n = self.expect_int()?;
        match self.peek() {
            Tok::Word(w) => match DurationUnit::from_keyword(w) {
                Some(u) => {
                    self.bump();
                    Ok((n, u))
                }
                None => self.unexpected("a duration unit"),
            },
            _ => self.unexpected("a duration unit"),
        }
    }

    /// Ends a `;`-terminated statement. When the `;` is missing but the next
    /// token plainly starts something new, the omission is reported and the
    /// statement kept.
    pub(crate) fn expect_semi(&mut self) -> PResult<()> {
        if self.eat_punct(";") {
            return Ok(());
        }
        if self.at_statement_boundary() {
            let at = self.prev_span();
            let span = Span { col: at.end_col, start: at.end, ..at };
            self.diags.push(Diagnostic::error("SyntaxError", span, "expected `;`").with_hint("insert `;`"));
            return Ok(());
        }
        self.unexpected("`;`")
    }

    /// A likely missing `;`: the next token closes the block, or starts a
    /// statement on a later line.
    fn at_statement_boundary(&self) -> bool {
        match self.peek() {
            Tok::Eof => true,
            Tok::Punct("}") => true,
            Tok::Word(w) => STATEMENT_STARTS.contains(&w.as_str()) && self.span().line > self.prev_span().line,
            _ => false,
        }
    }

    /// Rewinds to `start` and skips one statement: through the first `;` or
    /// the first complete brace group, stopping before an unmatched `}`.
    pub(crate) fn skip_statement(&mut self, start: usize) {
        self.pos = start;
        let mut depth = 0usize;
        loop {
            match self.peek() {
                Tok::Eof => return,
                Tok::Punct(";") if depth == 0 => {
                    self.bump();
                    return;
                }
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                    if depth == 0 {
                        self.bump();
                        return;
                    }
                }
                _ => {}
            }
            self.bump();
        }
    }

    /// Parses `{ item* }`, recovering per item.
    pub(crate) fn block<T>(&mut self, mut item: impl FnMut(&mut Parser) -> PResult<T>) -> PResult<(Vec<T>, Span)> {
        let open = self.expect_punct("{")?;
        let mut out = Vec::new();
        loop {
            if self.at_punct("}") {
                let close = self.bump().span;
                return Ok((out, open.join(close)));
            }
            if self.at_eof() {
                return self.error(self.span(), "expected `}`", Some("close the block"));
            }
            let start = self.pos;
            match item(self) {
                Ok(v) => out.push(v),
                Err(Reported) => {
                    self.skip_statement(start);
                    if self.pos == start {
                        // Nothing consumed: drop one token to guarantee progress.
                        self.bump();
                    }
                }
            }
        }
    }

    fn spec(&mut self) -> Option<SpecAst> {
        let begin = self.span();
        if self.at_eof() {
            let _ = self.error::<()>(begin, "expected scope block", Some("start the file with `scope { ... }`"));
            return None;
        }
        let has_keyword = self.eat_word("scope");
        if !has_keyword {
            let _ = self.error::<()>(begin, "expected scope block", Some("start the file with `scope { ... }`"));
        }
        let scope = if has_keyword || self.at_punct("{") {
            let start = self.pos;
            match self.scope_block() {
                Ok(s) => s,
                Err(Reported) => {
                    self.skip_statement(start);
                    Default::default()
                }
            }
        } else {
            Default::default()
        };
        let mut ast = SpecAst { scope, models: Vec::new(), services: Vec::new(), recovery: None, span: begin };
        while !self.at_eof() {
            let start = self.pos;
            let r = if self.eat_word("model") {
                self.model().map(|m| ast.models.push(m))
            } else if self.eat_word("service") {
                self.service_model().map(|s| ast.services.push(s))
            } else if self.eat_word("recovery") {
                self.recovery_table().map(|r| match &mut ast.recovery {
                    Some(existing) => existing.entries.extend(r.entries),
                    None => ast.recovery = Some(r),
                })
            } else {
                self.unexpected("`model`, `service` or `recovery`")
            };
            if r.is_err() {
                self.skip_statement(start);
                if self.pos == start {
                    self.bump();
                }
            }
        }
        ast.span = begin.join(self.span());
        Some(ast)
    }
}

/// Words that begin a statement in some block.
const STATEMENT_STARTS: &[&str] = &[
    "organisation",
    "unit",
    "role",
    "actor",
    "object",
    "service",
    "external",
    "message",
    "store",
    "buffer",
    "locate",
    "undertake",
    "model",
    "process",
    "decision",
    "sync",
    "exclusive",
    "receive",
    "take",
    "put",
    "send",
    "add",
    "update",
    "remove",
    "set",
    "transfer",
    "pre",
    "post",
    "var",
    "uses",
    "hci",
    "initial",
    "trigger",
    "commit",
    "positive",
    "negative",
    "state",
    "on",
    "birth",
    "recovery",
];

#[cfg(test)]
mod tests;
