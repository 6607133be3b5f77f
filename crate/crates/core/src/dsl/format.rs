//! Canonical pretty-printer. Its output parses back to an equal tree.

use std::fmt::Write;

use crate::dsl::ast::*;
use crate::expr::{format_date, Action, ActionKind, Destination, Expr, ExprKind, FieldInit, UnOp};
use crate::metamodel::{ObjectNature, Protocol};

pub fn format(ast: &SpecAst) -> String {
    let mut f = Formatter { out: String::new(), indent: 0 };
    f.spec(ast);
    f.out
}

pub fn format_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e);
    s
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

struct Formatter {
    out: String,
    indent: usize,
}

impl Formatter {
    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn open(&mut self, header: &str) {
        self.line(&format!("{header} {{"));
        self.indent += 1;
    }

    fn close(&mut self) {
        self.indent -= 1;
        self.line("}");
    }

    fn spec(&mut self, ast: &SpecAst) {
        self.open("scope");
        for d in &ast.scope.decls {
            let text = scope_decl(&d.kind);
            self.line(&text);
        }
        self.close();
        for m in &ast.models {
            self.out.push('\n');
            self.open("model");
            for e in &m.entities {
                self.entity(e);
            }
            self.close();
        }
        for s in &ast.services {
            self.out.push('\n');
            self.service(s);
        }
        if let Some(r) = &ast.recovery {
            self.out.push('\n');
            self.open("recovery");
            for e in &r.entries {
                let text = recovery_entry(e);
                self.line(&text);
            }
            self.close();
        }
    }

    fn entity(&mut self, e: &EntityDecl) {
        let mut header = String::new();
        if e.exclusive {
            header.push_str("exclusive ");
        }
        header.push_str(e.kind.keyword());
        header.push(' ');
        header.push_str(&quote(&e.name.text));
        if let Some(r) = &e.role {
            let _ = write!(header, " role {}", quote(&r.text));
        }
        if let Some((n, u)) = e.duration {
            let _ = write!(header, " duration {n} {}", u.keyword());
        }
        match &e.body {
            None => self.line(&format!("{header};")),
            Some(items) => {
                self.open(&header);
                for item in items {
                    self.body_item(&item.kind);
                }
                self.close();
            }
        }
    }

    fn body_item(&mut self, item: &BodyItemKind) {
        let text = match item {
            BodyItemKind::Entity(e) => return self.entity(e),
            BodyItemKind::Receive { message, from, .. } => {
                format!("receive {} from {};", quote(&message.text), counterpart(from))
            }
            BodyItemKind::Take { message, buffer } => {
                format!("take {} from {};", quote(&message.text), quote(&buffer.text))
            }
            BodyItemKind::Put { message, buffer, fields } => {
                format!("put {} into {}{}", quote(&message.text), quote(&buffer.text), optional_inits(fields))
            }
            BodyItemKind::Sync { order, message, counterpart: c, reply, .. } => {
                let (kw, prep) = match order {
                    SyncOrder::SendFirst => ("send", "to"),
                    SyncOrder::ReceiveFirst => ("receive", "from"),
                };
                format!("sync {kw} {} {prep} {} reply {};", quote(&message.text), counterpart(c), quote(&reply.text))
            }
            BodyItemKind::Action(a) => action(a),
            BodyItemKind::Pre(e) => format!("pre {};", format_expr(e)),
            BodyItemKind::PreTimeout(n, u) => format!("pre timeout {n} {};", u.keyword()),
            BodyItemKind::Post(e) => format!("post {};", format_expr(e)),
            BodyItemKind::Var { name, ty } => format!("var {name}: {};", ty.keyword()),
            BodyItemKind::Uses(n) => format!("uses {};", quote(&n.text)),
            BodyItemKind::Hci { name, schema } => match schema {
                Some(s) => format!("hci {} schema {};", quote(&name.text), quote(&s.text)),
                None => format!("hci {};", quote(&name.text)),
            },
            BodyItemKind::Initial(n) => format!("initial {};", quote(&n.text)),
            BodyItemKind::Trigger { from, outcome, to } => match outcome {
                Some(o) => format!("trigger {} {} -> {};", quote(&from.text), o.keyword(), quote(&to.text)),
                None => format!("trigger {} -> {};", quote(&from.text), quote(&to.text)),
            },
            BodyItemKind::Commit { grain, members } => {
                format!("commit {} {{ {} }}", quote(&grain.text), name_list(members))
            }
            BodyItemKind::Rule { outcome, expr } => format!("{} when {};", outcome.keyword(), format_expr(expr)),
            BodyItemKind::Terminates { outcome, result, abort } => {
                format!("{} {} {};", outcome.keyword(), if *abort { "aborts" } else { "terminates" }, result.keyword())
            }
        };
        self.line(&text);
    }

    fn service(&mut self, s: &ServiceModelAst) {
        self.open(&format!("service {}", quote(&s.name.text)));
        for st in &s.states {
            match st.within {
                Some((n, u)) => self.line(&format!("state {} within {n} {};", quote(&st.name.text), u.keyword())),
                None => self.line(&format!("state {};", quote(&st.name.text))),
            }
        }
        for r in &s.rules {
            let mut text = match &r.target {
                Some(t) => format!("{} -> {}", state_ref(&r.source), state_ref(t)),
                None => format!("on {}", state_ref(&r.source)),
            };
            let _ = write!(text, " when {}", event(&r.rule.when));
            if let Some(c) = &r.rule.cond {
                let _ = write!(text, " if {}", format_expr(c));
            }
            if !r.rule.then.is_empty() {
                let acts: Vec<String> = r.rule.then.iter().map(eca_action).collect();
                let _ = write!(text, " then {}", acts.join(", "));
            }
            text.push(';');
            self.line(&text);
        }
        self.close();
    }
}

fn name_list(names: &[Name]) -> String {
    names.iter().map(|n| quote(&n.text)).collect::<Vec<_>>().join(", ")
}

fn field_decls(fields: &[FieldDecl]) -> String {
    if fields.is_empty() {
        return "{ }".into();
    }
    let parts: Vec<String> = fields.iter().map(|f| format!("{}: {}", f.name, f.ty.keyword())).collect();
    format!("{{ {} }}", parts.join(", "))
}

fn scope_decl(d: &ScopeDeclKind) -> String {
    match d {
        ScopeDeclKind::Organisation { name } => format!("organisation {};", quote(&name.text)),
        ScopeDeclKind::Unit { name, parent } => format!("unit {} in {};", quote(&name.text), quote(&parent.text)),
        ScopeDeclKind::Role { name } => format!("role {};", quote(&name.text)),
        ScopeDeclKind::Actor { name, unit, roles } => {
            let mut s = format!("actor {} in {}", quote(&name.text), quote(&unit.text));
            if !roles.is_empty() {
                let _ = write!(s, " assigned {}", name_list(roles));
            }
            s.push(';');
            s
        }
        ScopeDeclKind::Object { name, nature } => format!(
            "object {} {};",
            quote(&name.text),
            match nature {
                ObjectNature::Informational => "informational",
                ObjectNature::Material => "material",
            }
        ),
        ScopeDeclKind::Service { name, external } => {
            format!("{}service {};", if *external { "external " } else { "" }, quote(&name.text))
        }
        ScopeDeclKind::Message { name, external, fields } => {
            format!("{}message {} {}", if *external { "external " } else { "" }, quote(&name.text), field_decls(fields))
        }
        ScopeDeclKind::Store { name, holds, fields, fragment } => {
            let mut s = format!("store {}", quote(&name.text));
            if !holds.is_empty() {
                let _ = write!(s, " holds {}", name_list(holds));
            }
            if let Some(f) = fragment {
                let _ = write!(s, " fragment {}", quote(&f.text));
            }
            let _ = write!(s, " {}", field_decls(fields));
            s
        }
        ScopeDeclKind::Buffer { name, protocol, accepts } => {
            let p = match protocol {
                Protocol::Fifo => "fifo".to_string(),
                Protocol::Lifo => "lifo".to_string(),
                Protocol::Random => "random".to_string(),
                Protocol::Predicate(f) => format!("predicate {}", quote(f)),
            };
            format!("buffer {} {p} accepts {};", quote(&name.text), name_list(accepts))
        }
        ScopeDeclKind::Locate { entity, unit } => format!("locate {} in {};", quote(&entity.text), quote(&unit.text)),
        ScopeDeclKind::Undertake { role, entity } => {
            format!("undertake {} {};", quote(&role.text), quote(&entity.text))
        }
    }
}

fn counterpart(d: &Destination) -> String {
    match d {
        Destination::Named(n) => quote(n),
        Destination::LocalService | Destination::Environment => "service".into(),
    }
}

fn inits(fields: &[FieldInit]) -> String {
    if fields.is_empty() {
        return "{ }".into();
    }
    let parts: Vec<String> = fields.iter().map(|f| format!("{} = {}", f.name, format_expr(&f.value))).collect();
    format!("{{ {} }}", parts.join(", "))
}

fn optional_inits(fields: &[FieldInit]) -> String {
    if fields.is_empty() {
        ";".into()
    } else {
        format!(" {}", inits(fields))
    }
}

fn action(a: &Action) -> String {
    match &a.kind {
        ActionKind::Send { message, dest, each, fields } => {
            let target = match each {
                Some(each) => {
                    let mut s = format!("each {} in {}", each.var, quote(&each.store));
                    if let Some(f) = &each.filter {
                        let _ = write!(s, " where {}", format_expr(f));
                    }
                    s
                }
                None => format!("to {}", counterpart(dest)),
            };
            format!("send {} {target}{}", quote(message), optional_inits(fields))
        }
        ActionKind::Add { store, fields } => format!("add {} {}", quote(store), inits(fields)),
        ActionKind::Update { var, store, filter, fields } => {
            format!("update {var} in {} where {} {}", quote(store), format_expr(filter), inits(fields))
        }
        ActionKind::Remove { var, store, filter } => {
            format!("remove {var} in {} where {};", quote(store), format_expr(filter))
        }
        ActionKind::Set { var, value } => format!("set {var} = {};", format_expr(value)),
        ActionKind::Transfer { message, store } => format!("transfer {} into {};", quote(message), quote(store)),
    }
}

fn state_ref(s: &StateRef) -> String {
    match s {
        StateRef::Birth => "birth".into(),
        StateRef::Death => "death".into(),
        StateRef::Named(n) => quote(&n.text),
    }
}

fn event(e: &EventSpec) -> String {
    match e {
        EventSpec::MsgFrom(n) => format!("msg_from({})", quote(&n.text)),
        EventSpec::MsgTo(n) => format!("msg_to({})", quote(&n.text)),
        EventSpec::DbState(x) => format!("db_state({})", format_expr(x)),
        EventSpec::DecisionEnd(n, o) => format!("decision_end({}, {})", quote(&n.text), o.keyword()),
        EventSpec::ProcessStart(n) => format!("process_start({})", quote(&n.text)),
        EventSpec::ProcessEnd(n) => format!("process_end({})", quote(&n.text)),
        EventSpec::ProcessStartFailed(n, k) => format!("process_start_failed({}, {k})", quote(&n.text)),
        EventSpec::Abort(k) => format!("abort({})", k.keyword()),
        EventSpec::Timer(x) => format!("timer({})", format_expr(x)),
    }
}

fn eca_action(a: &EcaAction) -> String {
    match a {
        EcaAction::Forward { message, to } => format!("forward {} to {}", quote(&message.text), quote(&to.text)),
        EcaAction::Trigger(n) => format!("trigger {}", quote(&n.text)),
        EcaAction::Send { message, to } => format!("send {} to {}", quote(&message.text), quote(&to.text)),
    }
}

fn recovery_entry(e: &RecoveryEntryAst) -> String {
    let mut s = quote(&e.entity.text);
    if !e.ladder.is_empty() || e.rollback.is_none() {
        let rungs: Vec<String> = e
            .ladder
            .iter()
            .map(|r| {
                let t = r.threshold.map_or("*".to_string(), |n| n.to_string());
                let target = r.target.as_ref().map_or("self".to_string(), |n| quote(&n.text));
                format!("{t} -> {target}")
            })
            .collect();
        let _ = write!(s, " redo [{}]", rungs.join(", "));
    }
    match &e.rollback {
        Some(RollbackAst::Undo) => s.push_str(" rollback undo"),
        Some(RollbackAst::Null) => s.push_str(" rollback null"),
        Some(RollbackAst::Compensate(n)) => {
            let _ = write!(s, " rollback compensate {}", quote(&n.text));
        }
        None => {}
    }
    s.push(';');
    s
}

fn is_atomic(e: &Expr) -> bool {
    !matches!(e.kind, ExprKind::Binary(..) | ExprKind::Unary(..))
}

fn sub(out: &mut String, e: &Expr) {
    if is_atomic(e) || matches!(e.kind, ExprKind::Unary(UnOp::Neg, _)) {
        expr(out, e);
    } else {
        out.push('(');
        expr(out, e);
        out.push(')');
    }
}

fn expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Int(n) => {
            let _ = write!(out, "{n}");
        }
        ExprKind::Text(s) => out.push_str(&quote(s)),
        ExprKind::Date(d) => {
            let _ = write!(out, "date {}", quote(&format_date(*d)));
        }
        ExprKind::Duration(n, u) => {
            let _ = write!(out, "{n} {}", u.keyword());
        }
        ExprKind::Var(v) => out.push_str(v),
        ExprKind::Msg(m) => {
            let _ = write!(out, "msg({})", quote(m));
        }
        ExprKind::Field(base, f) => {
            if is_atomic(base) {
                expr(out, base);
            } else {
                out.push('(');
                expr(out, base);
                out.push(')');
            }
            let _ = write!(out, ".{f}");
        }
        ExprKind::Unary(UnOp::Not, inner) => {
            out.push_str("not ");
            sub(out, inner);
        }
        ExprKind::Unary(UnOp::Neg, inner) => {
            out.push('-');
            if is_atomic(inner) || matches!(inner.kind, ExprKind::Unary(UnOp::Neg, _)) {
                expr(out, inner);
            } else {
                out.push('(');
                expr(out, inner);
                out.push(')');
            }
        }
        ExprKind::Binary(op, a, b) => {
            sub(out, a);
            let _ = write!(out, " {} ", op.symbol());
            sub(out, b);
        }
        ExprKind::Quant { quantifier, var, store, body } => {
            let q = match quantifier {
                crate::expr::Quantifier::Exists => "exists",
                crate::expr::Quantifier::Forall => "forall",
            };
            let _ = write!(out, "{q}({var} in {} : ", quote(store));
            expr(out, body);
            out.push(')');
        }
        ExprKind::Temporal(f, n) => {
            let _ = write!(out, "{}({})", f.name(), quote(n));
        }
        ExprKind::Now => out.push_str("now()"),
        ExprKind::Today => out.push_str("today()"),
    }
}
