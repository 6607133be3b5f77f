use super::{PResult, Parser};
use crate::dsl::ast::{
    AbortKind, EcaAction, EcaRuleAst, EventSpec, Outcome, RecoveryEntryAst, RecoveryTableAst, RollbackAst, RungAst,
    ServiceModelAst, StateDecl, StateRef, TransitionAst,
};
use crate::dsl::lexer::Tok;

enum ServiceItem {
    State(StateDecl),
    Rule(Box<TransitionAst>),
}

impl Parser {
    /// `service "Name" { ... }`; the `service` keyword is already consumed.
    pub(crate) fn service_model(&mut self) -> PResult<ServiceModelAst> {
        let start = self.prev_span();
        let name = self.expect_name()?;
        let (items, span) = self.block(|p| p.service_item())?;
        let mut states = Vec::new();
        let mut rules = Vec::new();
        for item in items {
            match item {
                ServiceItem::State(s) => states.push(s),
                ServiceItem::Rule(r) => rules.push(*r),
            }
        }
        Ok(ServiceModelAst { name, states, rules, span: start.join(span) })
    }

    fn service_item(&mut self) -> PResult<ServiceItem> {
        let start = self.span();
        if self.eat_word("state") {
            let name = self.expect_name()?;
            let within = if self.eat_word("within") { Some(self.expect_duration()?) } else { None };
            self.expect_semi()?;
            return Ok(ServiceItem::State(StateDecl { name, within, span: start.join(self.prev_span()) }));
        }
        let (source, target) = if self.eat_word("on") {
            (self.state_ref()?, None)
        } else {
            let source = self.state_ref()?;
            self.expect_punct("->")?;
            (source, Some(self.state_ref()?))
        };
        self.expect_word("when")?;
        let when = self.event()?;
        let cond = if self.eat_word("if") { Some(self.expr()?) } else { None };
        let mut then = Vec::new();
        if self.eat_word("then") && !self.eat_word("none") {
            loop {
                then.push(self.eca_action()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_semi()?;
        let rule = EcaRuleAst { when, cond, then };
        Ok(ServiceItem::Rule(Box::new(TransitionAst { source, target, rule, span: start.join(self.prev_span()) })))
    }

    fn state_ref(&mut self) -> PResult<StateRef> {
        if self.eat_word("birth") {
            Ok(StateRef::Birth)
        } else if self.eat_word("death") {
            Ok(StateRef::Death)
        } else if matches!(self.peek(), Tok::Str(_)) {
            Ok(StateRef::Named(self.expect_name()?))
        } else {
            self.unexpected("a state name, `birth` or `death`")
        }
    }

    fn event(&mut self) -> PResult<EventSpec> {
        let Tok::Word(w) = self.peek().clone() else {
            return self.unexpected("an event");
        };
        let ev = match w.as_str() {
            "msg_from" | "msg_to" | "process_start" | "process_end" => {
                self.bump();
                self.expect_punct("(")?;
                let n = self.expect_name()?;
                self.expect_punct(")")?;
                match w.as_str() {
                    "msg_from" => EventSpec::MsgFrom(n),
                    "msg_to" => EventSpec::MsgTo(n),
                    "process_start" => EventSpec::ProcessStart(n),
                    _ => EventSpec::ProcessEnd(n),
                }
            }
            "db_state" | "timer" => {
                self.bump();
                self.expect_punct("(")?;
                let e = self.expr()?;
                self.expect_punct(")")?;
                if w == "timer" {
                    EventSpec::Timer(e)
                } else {
                    EventSpec::DbState(e)
                }
            }
            "decision_end" => {
                self.bump();
                self.expect_punct("(")?;
                let n = self.expect_name()?;
                self.expect_punct(",")?;
                let o = match self.peek() {
                    Tok::Word(w) if Outcome::from_keyword(w).is_some() => {
                        let o = Outcome::from_keyword(w).expect("checked");
                        self.bump();
                        o
                    }
                    _ => return self.unexpected("`positive` or `negative`"),
                };
                self.expect_punct(")")?;
                EventSpec::DecisionEnd(n, o)
            }
            "process_start_failed" => {
                self.bump();
                self.expect_punct("(")?;
                let n = self.expect_name()?;
                self.expect_punct(",")?;
                let k = self.expect_int()?;
                self.expect_punct(")")?;
                EventSpec::ProcessStartFailed(n, k.clamp(0, u32::MAX as i64) as u32)
            }
            "abort" => {
                self.bump();
                self.expect_punct("(")?;
                let kind = if self.eat_word("failure") {
                    AbortKind::Failure
                } else if self.eat_word("nonfailure") {
                    AbortKind::NonFailure
                } else {
                    return self.unexpected("`failure` or `nonfailure`");
                };
                self.expect_punct(")")?;
                EventSpec::Abort(kind)
            }
            _ => return self.unexpected("an event"),
        };
        Ok(ev)
    }

    fn eca_action(&mut self) -> PResult<EcaAction> {
        if self.eat_word("forward") {
            let message = self.expect_name()?;
            self.expect_word("to")?;
            let to = self.expect_name()?;
            Ok(EcaAction::Forward { message, to })
        } else if self.eat_word("trigger") {
            Ok(EcaAction::Trigger(self.expect_name()?))
        } else if self.eat_word("send") {
            let message = self.expect_name()?;
            self.expect_word("to")?;
            let to = self.expect_name()?;
            Ok(EcaAction::Send { message, to })
        } else {
            self.unexpected("`forward`, `trigger`, `send` or `none`")
        }
    }

    /// `recovery { entry* }`; the keyword is already consumed.
    pub(crate) fn recovery_table(&mut self) -> PResult<RecoveryTableAst> {
        let start = self.prev_span();
        let (entries, span) = self.block(|p| p.recovery_entry())?;
        Ok(RecoveryTableAst { entries, span: start.join(span) })
    }

    fn recovery_entry(&mut self) -> PResult<RecoveryEntryAst> {
        let start = self.span();
        let entity = self.expect_name()?;
        let mut ladder = Vec::new();
        let mut rollback = None;
        let mut seen_any = false;
        if self.eat_word("redo") {
            seen_any = true;
            self.expect_punct("[")?;
            if !self.at_punct("]") {
                loop {
                    ladder.push(self.rung()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct("]")?;
        }
        if self.eat_word("rollback") {
            seen_any = true;
            rollback = Some(if self.eat_word("undo") {
                RollbackAst::Undo
            } else if self.eat_word("null") {
                RollbackAst::Null
            } else if self.eat_word("compensate") {
                RollbackAst::Compensate(self.expect_name()?)
            } else {
                return self.unexpected("`undo`, `null` or `compensate`");
            });
        }
        if !seen_any {
            return self.unexpected("`redo` or `rollback`");
        }
        self.expect_semi()?;
        Ok(RecoveryEntryAst { entity, ladder, rollback, span: start.join(self.prev_span()) })
    }

    fn rung(&mut self) -> PResult<RungAst> {
        let start = self.span();
        let threshold = if self.eat_punct("*") {
            None
        } else {
            let n = self.expect_int()?;
            Some(n.clamp(0, u32::MAX as i64) as u32)
        };
        self.expect_punct("->")?;
        let target = if self.eat_word("self") { None } else { Some(self.expect_name()?) };
        Ok(RungAst { threshold, target, span: start.join(self.prev_span()) })
    }
}
