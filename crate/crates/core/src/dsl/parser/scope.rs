use super::{PResult, Parser};
use crate::dsl::ast::{FieldDecl, Name, ScopeBlock, ScopeDecl, ScopeDeclKind};
use crate::dsl::lexer::Tok;
use crate::expr::FieldType;
use crate::metamodel::{ObjectNature, Protocol};

impl Parser {
    pub(crate) fn scope_block(&mut self) -> PResult<ScopeBlock> {
        let (decls, span) = self.block(|p| p.scope_decl())?;
        Ok(ScopeBlock { decls, span })
    }

    fn scope_decl(&mut self) -> PResult<ScopeDecl> {
        let start = self.span();
        let external = self.eat_word("external");
        let kind = if external {
            if self.eat_word("service") {
                let name = self.expect_name()?;
                self.expect_semi()?;
                ScopeDeclKind::Service { name, external }
            } else if self.eat_word("message") {
                let name = self.expect_name()?;
                let fields = self.field_decls()?;
                ScopeDeclKind::Message { name, external, fields }
            } else {
                return self.unexpected("`service` or `message`");
            }
        } else if self.eat_word("organisation") {
            let name = self.expect_name()?;
            self.expect_semi()?;
            ScopeDeclKind::Organisation { name }
        } else if self.eat_word("unit") {
            let name = self.expect_name()?;
            self.expect_word("in")?;
            let parent = self.expect_name()?;
            self.expect_semi()?;
            ScopeDeclKind::Unit { name, parent }
        } else if self.eat_word("role") {
            let name = self.expect_name()?;
            self.expect_semi()?;
            ScopeDeclKind::Role { name }
        } else if self.eat_word("actor") {
            let name = self.expect_name()?;
            self.expect_word("in")?;
            let unit = self.expect_name()?;
            let roles = if self.eat_word("assigned") { self.name_list()? } else { Vec::new() };
            self.expect_semi()?;
            ScopeDeclKind::Actor { name, unit, roles }
        } else if self.eat_word("object") {
            let name = self.expect_name()?;
            let nature = if self.eat_word("material") {
                ObjectNature::Material
            } else if self.eat_word("informational") {
                ObjectNature::Informational
            } else {
                return self.unexpected("`informational` or `material`");
            };
            self.expect_semi()?;
            ScopeDeclKind::Object { name, nature }
        } else if self.eat_word("service") {
            let name = self.expect_name()?;
            self.expect_semi()?;
            ScopeDeclKind::Service { name, external }
        } else if self.eat_word("message") {
            let name = self.expect_name()?;
            let fields = self.field_decls()?;
            ScopeDeclKind::Message { name, external, fields }
        } else if self.eat_word("store") {
            let name = self.expect_name()?;
            let holds = if self.eat_word("holds") { self.name_list()? } else { Vec::new() };
            let fragment = if self.eat_word("fragment") { Some(self.expect_name()?) } else { None };
            let fields = self.field_decls()?;
            ScopeDeclKind::Store { name, holds, fields, fragment }
        } else if self.eat_word("buffer") {
            let name = self.expect_name()?;
            let protocol = if self.eat_word("fifo") {
                Protocol::Fifo
            } else if self.eat_word("lifo") {
                Protocol::Lifo
            } else if self.eat_word("random") {
                Protocol::Random
            } else if self.eat_word("predicate") {
                Protocol::Predicate(self.expect_name()?.text)
            } else {
                return self.unexpected("a buffer protocol (`fifo`, `lifo`, `random` or `predicate`)");
            };
            self.expect_word("accepts")?;
            let accepts = self.name_list()?;
            self.expect_semi()?;
            ScopeDeclKind::Buffer { name, protocol, accepts }
        } else if self.eat_word("locate") {
            let entity = self.expect_name()?;
            self.expect_word("in")?;
            let unit = self.expect_name()?;
            self.expect_semi()?;
            ScopeDeclKind::Locate { entity, unit }
        } else if self.eat_word("undertake") {
            let role = self.expect_name()?;
            let entity = self.expect_name()?;
            self.expect_semi()?;
            ScopeDeclKind::Undertake { role, entity }
        } else {
            return self.unexpected("a scope declaration");
        };
        Ok(ScopeDecl { kind, span: start.join(self.prev_span()) })
    }

    pub(crate) fn name_list(&mut self) -> PResult<Vec<Name>> {
        let mut out = vec![self.expect_name()?];
        while self.eat_punct(",") {
            out.push(self.expect_name()?);
        }
        Ok(out)
    }

    /// Any bare word, keywords included; used where a field name is expected.
    pub(crate) fn expect_field_name(&mut self) -> PResult<String> {
        if let Tok::Word(w) = self.peek() {
            let w = w.clone();
            self.bump();
            Ok(w)
        } else {
            self.unexpected("a field name")
        }
    }

    fn field_decls(&mut self) -> PResult<Vec<FieldDecl>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        if !self.at_punct("}") {
            loop {
                let start = self.span();
                let name = self.expect_field_name()?;
                self.expect_punct(":")?;
                let ty = self.field_type()?;
                out.push(FieldDecl { name, ty, span: start.join(self.prev_span()) });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("}")?;
        Ok(out)
    }

    pub(crate) fn field_type(&mut self) -> PResult<FieldType> {
        if self.eat_word("ref") {
            return Ok(FieldType::Ref(self.expect_name()?.text));
        }
        if let Tok::Word(w) = self.peek() {
            if let Some(t) = FieldType::from_keyword(w) {
                self.bump();
                return Ok(t);
            }
        }
        self.unexpected("a field type")
    }
}
