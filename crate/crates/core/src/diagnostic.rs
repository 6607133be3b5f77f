//! Source spans and coded diagnostics shared by the parser, lowering and the
//! validator.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A location in a source file. Lines and columns are 1-based; `start`/`end`
/// are byte offsets into the text.
///
/// Spans compare equal regardless of position so that ASTs and models can be
/// compared structurally after a format/parse round trip. Use
/// [`Span::same_location`] for positional comparison.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
    pub end_col: u32,
    pub start: usize,
    pub end: usize,
}

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _state: &mut H) {}
}

impl Span {
    pub fn same_location(&self, other: &Span) -> bool {
        (self.line, self.col, self.end_col, self.start, self.end)
            == (other.line, other.col, other.end_col, other.start, other.end)
    }

    /// Smallest span covering both.
    pub fn join(self, other: Span) -> Span {
        let (first, last) = if self.start <= other.start { (self, other) } else { (other, self) };
        Span {
            line: first.line,
            col: first.col,
            end_col: if first.line == last.line { last.end_col } else { first.end_col },
            start: first.start,
            end: last.end.max(first.end),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: String,
    pub severity: Severity,
    pub span: Span,
    pub message: String,
    /// Names of the concepts the diagnostic is about.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subjects: Vec<String>,
    /// Short statement of the rule that was broken.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    /// Suggested fix, mostly used by the parser.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hint: Option<String>,
}

impl Diagnostic {
    pub fn error(code: impl Into<String>, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            code: code.into(),
            severity: Severity::Error,
            span,
            message: message.into(),
            subjects: Vec::new(),
            anchor: None,
            hint: None,
        }
    }

    pub fn warning(code: impl Into<String>, span: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Warning, ..Diagnostic::error(code, span, message) }
    }

    pub fn with_subjects<I, S>(mut self, subjects: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.subjects = subjects.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint = Some(hint.into());
        self
    }

    pub fn with_anchor(mut self, anchor: impl Into<String>) -> Self {
        self.anchor = Some(anchor.into());
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Human-readable single line: `file:line:col: severity[code]: message`.
    pub fn render(&self, file: &str) -> String {
        let mut out = format!(
            "{}:{}:{}: {}[{}]: {}",
            file, self.span.line, self.span.col, self.severity, self.code, self.message
        );
        if let Some(hint) = &self.hint {
            out.push_str(&format!(" (hint: {hint})"));
        }
        out
    }

    /// Structured record with the stable field set used by `--format json`.
    pub fn to_record(&self, file: &str) -> DiagnosticRecord {
        DiagnosticRecord {
            code: self.code.clone(),
            severity: self.severity,
            file: file.to_string(),
            line: self.span.line,
            col: self.span.col,
            message: self.message.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub code: String,
    pub severity: Severity,
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
