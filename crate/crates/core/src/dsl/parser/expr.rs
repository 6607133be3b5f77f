use super::{PResult, Parser};
use crate::dsl::lexer::Tok;
use crate::expr::{parse_date, BinOp, DurationUnit, Expr, ExprKind, Quantifier, TemporalFn, UnOp};

impl Parser {
    pub(crate) fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_word("or") {
            let rhs = self.and_expr()?;
            lhs = binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_word("and") {
            let rhs = self.not_expr()?;
            lhs = binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.at_word("not") {
            let start = self.bump().span;
            let inner = self.not_expr()?;
            let span = start.join(inner.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(inner)), span));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Punct("==") => BinOp::Eq,
            Tok::Punct("!=") => BinOp::Ne,
            Tok::Punct("<") => BinOp::Lt,
            Tok::Punct("<=") => BinOp::Le,
            Tok::Punct(">") => BinOp::Gt,
            Tok::Punct(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        Ok(binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.at_punct("+") {
                BinOp::Add
            } else if self.at_punct("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.at_punct("-") {
            let start = self.bump().span;
            let inner = self.unary()?;
            let span = start.join(inner.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(inner)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.eat_punct(".") {
            let field = self.expect_field_name()?;
            let span = e.span.join(self.prev_span());
            e = Expr::new(ExprKind::Field(Box::new(e), field), span);
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                match self.peek() {
                    Tok::Word(w) if DurationUnit::from_keyword(w).is_some() => {
                        let unit = DurationUnit::from_keyword(w).expect("checked");
                        self.bump();
                        ExprKind::Duration(n, unit)
                    }
                    _ => ExprKind::Int(n),
                }
            }
            Tok::Str(s) => {
                self.bump();
                ExprKind::Text(s)
            }
            Tok::Punct("(") => {
                self.bump();
                let inner = self.expr()?;
                self.expect_punct(")")?;
                return Ok(inner);
            }
            Tok::Word(w) => match w.as_str() {
                "true" | "false" => {
                    self.bump();
                    ExprKind::Bool(w == "true")
                }
                "date" => {
                    self.bump();
                    let lit = self.expect_name()?;
                    match parse_date(&lit.text) {
                        Some(d) => ExprKind::Date(d),
                        None => {
                            return self.error(lit.span, format!("invalid date {:?}", lit.text), Some("use YYYY-MM-DD"))
                        }
                    }
                }
                "msg" => {
                    self.bump();
                    ExprKind::Msg(self.call_name()?)
                }
                "now" | "today" => {
                    self.bump();
                    self.expect_punct("(")?;
                    self.expect_punct(")")?;
                    if w == "now" {
                        ExprKind::Now
                    } else {
                        ExprKind::Today
                    }
                }
                "exists" | "forall" => {
                    self.bump();
                    let quantifier = if w == "exists" { Quantifier::Exists } else { Quantifier::Forall };
                    self.expect_punct("(")?;
                    let (var, _) = self.expect_ident()?;
                    self.expect_word("in")?;
                    let store = self.expect_name()?.text;
                    self.expect_punct(":")?;
                    let body = self.expr()?;
                    self.expect_punct(")")?;
                    ExprKind::Quant { quantifier, var, store, body: Box::new(body) }
                }
                _ => {
                    if let Some(f) = TemporalFn::from_name(&w) {
                        self.bump();
                        ExprKind::Temporal(f, self.call_name()?)
                    } else {
                        let (name, _) = self.expect_ident()?;
                        ExprKind::Var(name)
                    }
                }
            },
            _ => return self.unexpected("an expression"),
        };
        Ok(Expr::new(kind, start.join(self.prev_span())))
    }

    /// `( "name" )`
    fn call_name(&mut self) -> PResult<String> {
        self.expect_punct("(")?;
        let n = self.expect_name()?;
        self.expect_punct(")")?;
        Ok(n.text)
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = lhs.span.join(rhs.span);
    Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span)
}
