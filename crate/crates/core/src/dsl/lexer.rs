use crate::diagnostic::{Diagnostic, Span};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Bare word: keywords and variable names.
    Word(String),
    /// Quoted name or text literal.
    Str(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Int(i) => i.to_string(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const PUNCT: [&str; 20] =
    ["->", "==", "!=", "<=", ">=", "{", "}", "(", ")", "[", "]", ";", ",", ":", ".", "<", ">", "=", "+", "-"];
const STAR: &str = "*";

pub fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line = 1u32;
    let mut line_start = 0usize;

    let span_of = |start: usize, end: usize, line: u32, line_start: usize| Span {
        line,
        col: (text[line_start..start].chars().count() + 1) as u32,
        end_col: (text[line_start..end].chars().count() + 1) as u32,
        start,
        end,
    };

    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c == b'"' {
            i += 1;
            let mut s = String::new();
            let mut closed = false;
            while i < bytes.len() {
                match bytes[i] {
                    b'"' => {
                        i += 1;
                        closed = true;
                        break;
                    }
                    b'\n' => break,
                    b'\\' if i + 1 < bytes.len() => {
                        match bytes[i + 1] {
                            b'n' => s.push('\n'),
                            b't' => s.push('\t'),
                            other => s.push(other as char),
                        }
                        i += 2;
                    }
                    _ => {
                        let ch = text[i..].chars().next().expect("in bounds");
                        s.push(ch);
                        i += ch.len_utf8();
                    }
                }
            }
            let span = span_of(start, i, line, line_start);
            if !closed {
                diags.push(
                    Diagnostic::error("SyntaxError", span, "unterminated string literal")
                        .with_hint("close the name with `\"` on the same line"),
                );
            }
            tokens.push(Token { tok: Tok::Str(s), span });
            continue;
        }
        if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let span = span_of(start, i, line, line_start);
            let n = text[start..i].parse::<i64>().unwrap_or_else(|_| {
                diags.push(Diagnostic::error("SyntaxError", span, "integer literal out of range"));
                0
            });
            tokens.push(Token { tok: Tok::Int(n), span });
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens
                .push(Token { tok: Tok::Word(text[start..i].to_string()), span: span_of(start, i, line, line_start) });
            continue;
        }
        if c == b'*' {
            i += 1;
            tokens.push(Token { tok: Tok::Punct(STAR), span: span_of(start, i, line, line_start) });
            continue;
        }
        if let Some(p) = PUNCT.iter().find(|p| text[i..].starts_with(**p)) {
            i += p.len();
            tokens.push(Token { tok: Tok::Punct(p), span: span_of(start, i, line, line_start) });
            continue;
        }
        let ch = text[i..].chars().next().expect("in bounds");
        i += ch.len_utf8();
        diags.push(Diagnostic::error(
            "SyntaxError",
            span_of(start, i, line, line_start),
            format!("unexpected character {ch:?}"),
        ));
    }
    let end = span_of(bytes.len(), bytes.len(), line, line_start);
    tokens.push(Token { tok: Tok::Eof, span: end });
    (tokens, diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexes_names_and_arrows() {
        let (toks, diags) = lex("trigger \"Seek Views Required?\" positive -> \"Seek Views\"; // done\n x <= 3");
        assert!(diags.is_empty());
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(kinds[1], Tok::Str("Seek Views Required?".into()));
        assert_eq!(kinds[3], Tok::Punct("->"));
        assert_eq!(kinds[6], Tok::Word("x".into()));
        assert_eq!(kinds[7], Tok::Punct("<="));
        assert_eq!(toks[6].span.line, 2);
        assert_eq!(toks[6].span.col, 2);
    }

    #[test]
    fn unterminated_string_reported() {
        let (_, diags) = lex("scope { role \"oops; }");
        assert_eq!(diags.len(), 1);
    }
}
