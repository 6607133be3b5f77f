use super::{PResult, Parser};
use crate::diagnostic::Span;
use crate::dsl::ast::{BodyItem, BodyItemKind, EntityDecl, EntityKindAst, Outcome, ProcessModelAst, SyncOrder};
use crate::dsl::lexer::Tok;
use crate::expr::{Action, ActionKind, Destination, Each, FieldInit};

impl Parser {
    /// `model { entity* }`; the `model` keyword is already consumed.
    pub(crate) fn model(&mut self) -> PResult<ProcessModelAst> {
        let start = self.prev_span();
        let (entities, span) = self.block(|p| {
            if p.at_entity_start() {
                p.entity_decl()
            } else {
                p.unexpected("`process`, `decision` or `sync`")
            }
        })?;
        Ok(ProcessModelAst { entities, span: start.join(span) })
    }

    fn at_entity_start(&self) -> bool {
        self.at_word("exclusive")
            || self.at_word("process")
            || self.at_word("decision")
            || (self.at_word("sync") && matches!(self.peek_at(1), Tok::Str(_)))
    }

    fn entity_decl(&mut self) -> PResult<EntityDecl> {
        let start = self.span();
        let exclusive = self.eat_word("exclusive");
        let kind = if self.eat_word("process") {
            EntityKindAst::Process
        } else if self.eat_word("decision") {
            EntityKindAst::Decision
        } else if self.eat_word("sync") {
            EntityKindAst::Sync
        } else {
            return self.unexpected("`process`, `decision` or `sync`");
        };
        let name = self.expect_name()?;
        let role = if self.eat_word("role") { Some(self.expect_name()?) } else { None };
        let duration = if self.eat_word("duration") { Some(self.expect_duration()?) } else { None };
        let body = if self.at_punct("{") {
            Some(self.block(|p| p.body_item())?.0)
        } else {
            self.expect_semi()?;
            None
        };
        Ok(EntityDecl { kind, name, exclusive, role, duration, body, span: start.join(self.prev_span()) })
    }

    fn body_item(&mut self) -> PResult<BodyItem> {
        let start = self.span();
        let kind = self.body_item_kind()?;
        Ok(BodyItem { kind, span: start.join(self.prev_span()) })
    }

    fn body_item_kind(&mut self) -> PResult<BodyItemKind> {
        if self.at_entity_start() {
            return Ok(BodyItemKind::Entity(self.entity_decl()?));
        }
        let Tok::Word(word) = self.peek().clone() else {
            return self.unexpected("a statement");
        };
        let kw_span = self.span();
        if let Some(outcome) = Outcome::from_keyword(&word) {
            self.bump();
            return self.outcome_clause(outcome);
        }
        let item = match word.as_str() {
            "receive" => {
                self.bump();
                let message = self.expect_name()?;
                self.expect_word("from")?;
                let (from, from_span) = self.counterpart()?;
                self.expect_semi()?;
                BodyItemKind::Receive { message, from, from_span }
            }
            "take" => {
                self.bump();
                let message = self.expect_name()?;
                self.expect_word("from")?;
                let buffer = self.expect_name()?;
                self.expect_semi()?;
                BodyItemKind::Take { message, buffer }
            }
            "put" => {
                self.bump();
                let message = self.expect_name()?;
                self.expect_word("into")?;
                let buffer = self.expect_name()?;
                let fields = self.optional_inits()?;
                BodyItemKind::Put { message, buffer, fields }
            }
            "sync" => {
                self.bump();
                let order = if self.eat_word("send") {
                    SyncOrder::SendFirst
                } else if self.eat_word("receive") {
                    SyncOrder::ReceiveFirst
                } else {
                    return self.unexpected("`send` or `receive`");
                };
                let message = self.expect_name()?;
                self.expect_word(if order == SyncOrder::SendFirst { "to" } else { "from" })?;
                let (counterpart, counterpart_span) = self.counterpart()?;
                self.expect_word("reply")?;
                let reply = self.expect_name()?;
                self.expect_semi()?;
                BodyItemKind::Sync { order, message, counterpart, counterpart_span, reply }
            }
            "send" | "add" | "update" | "remove" | "set" | "transfer" => BodyItemKind::Action(self.action()?),
            "pre" => {
                self.bump();
                if self.eat_word("timeout") {
                    let (n, u) = self.expect_duration()?;
                    self.expect_semi()?;
                    BodyItemKind::PreTimeout(n, u)
                } else {
                    let e = self.expr()?;
                    self.expect_semi()?;
                    BodyItemKind::Pre(e)
                }
            }
            "post" => {
                self.bump();
                let e = self.expr()?;
                self.expect_semi()?;
                BodyItemKind::Post(e)
            }
            "var" => {
                self.bump();
                let (name, _) = self.expect_ident()?;
                self.expect_punct(":")?;
                let ty = self.field_type()?;
                self.expect_semi()?;
                BodyItemKind::Var { name, ty }
            }
            "uses" => {
                self.bump();
                let n = self.expect_name()?;
                self.expect_semi()?;
                BodyItemKind::Uses(n)
            }
            "hci" => {
                self.bump();
                let name = self.expect_name()?;
                let schema = if self.eat_word("schema") { Some(self.expect_name()?) } else { None };
                self.expect_semi()?;
                BodyItemKind::Hci { name, schema }
            }
            "initial" => {
                self.bump();
                let n = self.expect_name()?;
                self.expect_semi()?;
                BodyItemKind::Initial(n)
            }
            "trigger" => {
                self.bump();
                let from = self.expect_name()?;
                let outcome = match self.peek() {
                    Tok::Word(w) => match Outcome::from_keyword(w) {
                        Some(o) => {
                            self.bump();
                            Some(o)
                        }
                        None => return self.unexpected("`positive`, `negative` or `->`"),
                    },
                    _ => None,
                };
                self.expect_punct("->")?;
                let to = self.expect_name()?;
                self.expect_semi()?;
                BodyItemKind::Trigger { from, outcome, to }
            }
            "commit" => {
                self.bump();
                let grain = self.expect_name()?;
                self.expect_punct("{")?;
                let members = if self.at_punct("}") { Vec::new() } else { self.name_list()? };
                self.expect_punct("}")?;
                BodyItemKind::Commit { grain, members }
            }
            _ => return self.error(kw_span, format!("expected a statement, found `{word}`"), None),
        };
        Ok(item)
    }

    /// After `positive`/`negative`: a rule or a terminator.
    fn outcome_clause(&mut self, outcome: Outcome) -> PResult<BodyItemKind> {
        if self.eat_word("when") {
            let expr = self.expr()?;
            self.expect_semi()?;
            return Ok(BodyItemKind::Rule { outcome, expr });
        }
        let abort = if self.eat_word("terminates") {
            false
        } else if self.eat_word("aborts") {
            true
        } else {
            return self.unexpected("`when`, `terminates` or `aborts`");
        };
        let result = match self.peek() {
            Tok::Word(w) if Outcome::from_keyword(w).is_some() => {
                let o = Outcome::from_keyword(w).expect("checked");
                self.bump();
                o
            }
            _ => return self.unexpected("`positive` or `negative`"),
        };
        self.expect_semi()?;
        Ok(BodyItemKind::Terminates { outcome, result, abort })
    }

    fn counterpart(&mut self) -> PResult<(Destination, Span)> {
        if self.at_word("service") {
            return Ok((Destination::LocalService, self.bump().span));
        }
        let n = self.expect_name()?;
        Ok((Destination::Named(n.text), n.span))
    }

    fn optional_inits(&mut self) -> PResult<Vec<FieldInit>> {
        if self.at_punct("{") {
            self.inits()
        } else {
            self.expect_semi()?;
            Ok(Vec::new())
        }
    }

    /// `{ name = expr, ... }`
    fn inits(&mut self) -> PResult<Vec<FieldInit>> {
        self.expect_punct("{")?;
        let mut out = Vec::new();
        if !self.at_punct("}") {
            loop {
                let name = self.expect_field_name()?;
                self.expect_punct("=")?;
                let value = self.expr()?;
                out.push(FieldInit { name, value });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct("}")?;
        Ok(out)
    }

    fn action(&mut self) -> PResult<Action> {
        let start = self.span();
        let Tok::Word(word) = self.bump().tok else { unreachable!("caller checked") };
        let kind = match word.as_str() {
            "send" => {
                let message = self.expect_name()?.text;
                let (dest, each) = if self.eat_word("each") {
                    let (var, _) = self.expect_ident()?;
                    self.expect_word("in")?;
                    let store = self.expect_name()?.text;
                    let filter = if self.eat_word("where") { Some(self.expr()?) } else { None };
                    (Destination::Environment, Some(Each { var, store, filter }))
                } else {
                    self.expect_word("to")?;
                    (self.counterpart()?.0, None)
                };
                let fields = self.optional_inits()?;
                ActionKind::Send { message, dest, each, fields }
            }
            "add" => {
                let store = self.expect_name()?.text;
                let fields = self.inits()?;
                ActionKind::Add { store, fields }
            }
            "update" => {
                let (var, _) = self.expect_ident()?;
                self.expect_word("in")?;
                let store = self.expect_name()?.text;
                self.expect_word("where")?;
                let filter = self.expr()?;
                let fields = self.inits()?;
                ActionKind::Update { var, store, filter, fields }
            }
            "remove" => {
                let (var, _) = self.expect_ident()?;
                self.expect_word("in")?;
                let store = self.expect_name()?.text;
                self.expect_word("where")?;
                let filter = self.expr()?;
                self.expect_semi()?;
                ActionKind::Remove { var, store, filter }
            }
            "set" => {
                let (var, _) = self.expect_ident()?;
                self.expect_punct("=")?;
                let value = self.expr()?;
                self.expect_semi()?;
                ActionKind::Set { var, value }
            }
            "transfer" => {
                let message = self.expect_name()?.text;
                self.expect_word("into")?;
                let store = self.expect_name()?.text;
                self.expect_semi()?;
                ActionKind::Transfer { message, store }
            }
            _ => unreachable!("caller checked"),
        };
        Ok(Action { kind, span: start.join(self.prev_span()) })
    }
}
