//! Recognises the DOT language grammar (graph, statements, attribute lists,
//! edges, subgraphs). Only checks structure, not attribute semantics.

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    Sym(&'static str),
}

fn lex(src: &str) -> Result<Vec<Tok>, String> {
    let cs: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '/' && cs.get(i + 1) == Some(&'/') || c == '#' {
            while i < cs.len() && cs[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && cs.get(i + 1) == Some(&'*') {
            i += 2;
            while i + 1 < cs.len() && !(cs[i] == '*' && cs[i + 1] == '/') {
                i += 1;
            }
            i += 2;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match cs.get(i) {
                    None => return Err("unterminated string".into()),
                    Some('"') => break,
                    Some('\\') => {
                        s.push(cs[i]);
                        s.push(*cs.get(i + 1).ok_or("dangling escape")?);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                }
            }
            i += 1;
            out.push(Tok::Id(s));
        } else if c == '-' && matches!(cs.get(i + 1), Some('>') | Some('-')) {
            out.push(Tok::Sym(if cs[i + 1] == '>' { "->" } else { "--" }));
            i += 2;
        } else if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' {
            let start = i;
            while i < cs.len() && (cs[i].is_alphanumeric() || cs[i] == '_' || cs[i] == '.') {
                i += 1;
            }
            let word: String = cs[start..i].iter().collect();
            let numeral = word.chars().all(|c| c.is_ascii_digit() || c == '.' || c == '-');
            if !numeral && word.starts_with(|c: char| c.is_ascii_digit()) {
                return Err(format!("bad identifier {word}"));
            }
            out.push(Tok::Id(word));
        } else {
            let sym = match c {
                '{' => "{",
                '}' => "}",
                '[' => "[",
                ']' => "]",
                '=' => "=",
                ';' => ";",
                ',' => ",",
                ':' => ":",
                _ => return Err(format!("unexpected character {c:?}")),
            };
            out.push(Tok::Sym(sym));
            i += 1;
        }
    }
    Ok(out)
}

struct P {
    toks: Vec<Tok>,
    pos: usize,
    edge_op: &'static str,
}

fn is_kw(t: &Tok, kw: &str) -> bool {
    matches!(t, Tok::Id(s) if s.eq_ignore_ascii_case(kw))
}

impl P {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }
    fn eat(&mut self, sym: &str) -> bool {
        if self.peek() == Some(&Tok::Sym(static_sym(sym))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
    fn expect(&mut self, sym: &str) -> Result<(), String> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(format!("expected {sym} at token {} ({:?})", self.pos, self.peek()))
        }
    }
    fn id(&mut self) -> Result<String, String> {
        match self.peek() {
            Some(Tok::Id(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            other => Err(format!("expected identifier at token {}, got {other:?}", self.pos)),
        }
    }
    fn graph(&mut self) -> Result<(), String> {
        if self.peek().is_some_and(|t| is_kw(t, "strict")) {
            self.pos += 1;
        }
        let kind = self.id()?.to_ascii_lowercase();
        self.edge_op = match kind.as_str() {
            "digraph" => "->",
            "graph" => "--",
            _ => return Err(format!("expected graph or digraph, got {kind}")),
        };
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.pos += 1;
        }
        self.expect("{")?;
        self.stmt_list()?;
        self.expect("}")?;
        if self.pos != self.toks.len() {
            return Err("trailing tokens".into());
        }
        Ok(())
    }
    fn stmt_list(&mut self) -> Result<(), String> {
        while !matches!(self.peek(), Some(Tok::Sym("}")) | None) {
            self.stmt()?;
            self.eat(";");
        }
        Ok(())
    }
    fn stmt(&mut self) -> Result<(), String> {
        let t = self.peek().cloned().ok_or("unexpected end")?;
        if ["graph", "node", "edge"].iter().any(|k| is_kw(&t, k)) {
            self.pos += 1;
            return self.attr_list(true);
        }
        if is_kw(&t, "subgraph") || t == Tok::Sym("{") {
            self.subgraph()?;
            return self.edge_rhs();
        }
        self.id()?;
        if self.eat("=") {
            self.id()?;
            return Ok(());
        }
        self.port()?;
        self.edge_rhs()
    }
    fn port(&mut self) -> Result<(), String> {
        while self.eat(":") {
            self.id()?;
        }
        Ok(())
    }
    fn subgraph(&mut self) -> Result<(), String> {
        if self.peek().is_some_and(|t| is_kw(t, "subgraph")) {
            self.pos += 1;
            if matches!(self.peek(), Some(Tok::Id(_))) {
                self.pos += 1;
            }
        }
        self.expect("{")?;
        self.stmt_list()?;
        self.expect("}")
    }
    fn edge_rhs(&mut self) -> Result<(), String> {
        while let Some(Tok::Sym(op @ ("->" | "--"))) = self.peek().cloned() {
            if op != self.edge_op {
                return Err(format!("edge operator {op} in a graph using {}", self.edge_op));
            }
            self.pos += 1;
            if self.peek().is_some_and(|t| is_kw(t, "subgraph") || *t == Tok::Sym("{")) {
                self.subgraph()?;
            } else {
                self.id()?;
                self.port()?;
            }
        }
        self.attr_list(false)
    }
    fn attr_list(&mut self, required: bool) -> Result<(), String> {
        if required && self.peek() != Some(&Tok::Sym("[")) {
            return Err("expected attribute list".into());
        }
        while self.eat("[") {
            while !self.eat("]") {
                self.id()?;
                self.expect("=")?;
                self.id()?;
                if !self.eat(",") {
                    self.eat(";");
                }
            }
        }
        Ok(())
    }
}

fn static_sym(s: &str) -> &'static str {
    ["{", "}", "[", "]", "=", ";", ",", ":", "->", "--"].into_iter().find(|x| *x == s).expect("known symbol")
}

/// `Ok` if `src` is a syntactically valid DOT graph.
pub fn check(src: &str) -> Result<(), String> {
    let toks = lex(src)?;
    P { toks, pos: 0, edge_op: "->" }.graph()
}

#[test]
fn grammar_checker_self_test() {
    assert!(check("digraph { a -> b [label=\"x\"]; subgraph cluster_1 { c; } }").is_ok());
    assert!(check("digraph g { a -- b }").is_err());
    assert!(check("digraph { a -> }").is_err());
    assert!(check("digraph { a [label=] }").is_err());
    assert!(check("digraph { \"open }").is_err());
    assert!(check("digraph { a } b").is_err());
}
