//! Recursive-descent parsers over the token stream.

use super::lexer::{SpannedTok, Tok};
use super::{ParseError, SourceSpan, SyntaxError};
use crate::context::{Endpoint, TypingContext};
use crate::proc::{BranchArm, ChanRef, Expr, Process};
use crate::types::{Branches, GlobalType, Label, LocalType, Role, Sort, WellFormedness};

pub(super) struct Parser<'a> {
    file: &'a str,
    src: &'a str,
    toks: Vec<SpannedTok>,
    pos: usize,
}

impl<'a> Parser<'a> {
    pub(super) fn new(file: &'a str, src: &'a str, toks: Vec<SpannedTok>) -> Self {
        Parser {
            file,
            src,
            toks,
            pos: 0,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.tok)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let (span, found) = match self.toks.get(self.pos) {
            Some(t) => (t.span.clone(), t.tok.describe()),
            None => (
                SourceSpan {
                    file: self.file.to_string(),
                    start: self.src.len(),
                    end: self.src.len(),
                },
                "end of input".to_string(),
            ),
        };
        SyntaxError::Parse(ParseError::new(
            span,
            expected.iter().map(|s| s.to_string()).collect(),
            found,
            self.src,
        ))
    }

    fn expect(&mut self, tok: Tok, desc: &str) -> Result<(), SyntaxError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&[desc]))
        }
    }

    fn ident(&mut self, desc: &str) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&[desc])),
        }
    }

    fn role(&mut self) -> Result<Role, SyntaxError> {
        let name = self.ident("role")?;
        Role::new(&name).map_err(SyntaxError::Invalid)
    }

    fn label(&mut self) -> Result<Label, SyntaxError> {
        let name = self.ident("label")?;
        Label::new(&name).map_err(SyntaxError::Invalid)
    }

    pub(super) fn finish(&mut self) -> Result<(), SyntaxError> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    // ---- global types ----

    pub(super) fn global(&mut self) -> Result<GlobalType, SyntaxError> {
        match self.peek() {
            Some(Tok::KwEnd) => {
                self.pos += 1;
                Ok(GlobalType::End)
            }
            Some(Tok::KwRec) => {
                self.pos += 1;
                let var = self.ident("recursion variable")?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.global()?;
                Ok(GlobalType::Rec {
                    var,
                    body: Box::new(body),
                })
            }
            Some(Tok::Ident(_)) => {
                if self.peek2() == Some(&Tok::Arrow) {
                    let from = self.role()?;
                    self.expect(Tok::Arrow, "`->`")?;
                    let to = self.role()?;
                    let branches = self.global_branches()?;
                    GlobalType::comm(from, to, branches).map_err(SyntaxError::Invalid)
                } else {
                    let var = self.ident("type variable")?;
                    Ok(GlobalType::Var(var))
                }
            }
            _ => Err(self.error(&["`end`", "`rec`", "role", "type variable"])),
        }
    }

    fn global_branches(&mut self) -> Result<Branches<GlobalType>, SyntaxError> {
        let mut items = Vec::new();
        if self.peek() == Some(&Tok::LBrace) {
            self.pos += 1;
            loop {
                items.push(self.global_branch()?);
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.pos += 1;
                    }
                    Some(Tok::RBrace) => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error(&["`,`", "`}`"])),
                }
            }
        } else {
            items.push(self.global_branch()?);
        }
        Branches::new(items).map_err(SyntaxError::Invalid)
    }

    fn global_branch(&mut self) -> Result<(Label, Sort, GlobalType), SyntaxError> {
        let label = self.label()?;
        let sort = self.opt_payload()?;
        self.expect(Tok::Dot, "`.`")?;
        let cont = self.global()?;
        Ok((label, sort, cont))
    }

    fn opt_payload(&mut self) -> Result<Sort, SyntaxError> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let sort = self.sort()?;
            self.expect(Tok::RParen, "`)`")?;
            Ok(sort)
        } else {
            Ok(Sort::Unit)
        }
    }

    fn sort(&mut self) -> Result<Sort, SyntaxError> {
        match self.peek() {
            Some(Tok::KwInt) => {
                self.pos += 1;
                Ok(Sort::Int)
            }
            Some(Tok::KwStr) => {
                self.pos += 1;
                Ok(Sort::Str)
            }
            Some(Tok::KwBool) => {
                self.pos += 1;
                Ok(Sort::Bool)
            }
            Some(Tok::KwUnit) => {
                self.pos += 1;
                Ok(Sort::Unit)
            }
            Some(Tok::Lt) => {
                self.pos += 1;
                let t = self.local()?;
                self.expect(Tok::Gt, "`>`")?;
                Ok(Sort::Session(Box::new(t)))
            }
            _ => Err(self.error(&["`int`", "`str`", "`bool`", "`unit`", "`<`"])),
        }
    }

    // ---- local types ----

    pub(super) fn local(&mut self) -> Result<LocalType, SyntaxError> {
        match self.peek() {
            Some(Tok::KwEnd) => {
                self.pos += 1;
                Ok(LocalType::End)
            }
            Some(Tok::KwRec) => {
                self.pos += 1;
                let var = self.ident("recursion variable")?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.local()?;
                Ok(LocalType::Rec {
                    var,
                    body: Box::new(body),
                })
            }
            Some(Tok::Ident(_)) => match self.peek2() {
                Some(Tok::Bang) => {
                    let peer = self.role()?;
                    self.pos += 1;
                    let branches = self.local_branches()?;
                    Ok(LocalType::Select { peer, branches })
                }
                Some(Tok::Query) => {
                    let peer = self.role()?;
                    self.pos += 1;
                    let branches = self.local_branches()?;
                    Ok(LocalType::Branch { peer, branches })
                }
                _ => {
                    let var = self.ident("type variable")?;
                    Ok(LocalType::Var(var))
                }
            },
            _ => Err(self.error(&["`end`", "`rec`", "role", "type variable"])),
        }
    }

    fn local_branches(&mut self) -> Result<Branches<LocalType>, SyntaxError> {
        let mut items = Vec::new();
        if self.peek() == Some(&Tok::LBrace) {
            self.pos += 1;
            loop {
                items.push(self.local_branch()?);
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.pos += 1;
                    }
                    Some(Tok::RBrace) => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error(&["`,`", "`}`"])),
                }
            }
        } else {
            items.push(self.local_branch()?);
        }
        Branches::new(items).map_err(SyntaxError::Invalid)
    }

    fn local_branch(&mut self) -> Result<(Label, Sort, LocalType), SyntaxError> {
        let label = self.label()?;
        let sort = self.opt_payload()?;
        self.expect(Tok::Dot, "`.`")?;
        let cont = self.local()?;
        Ok((label, sort, cont))
    }

    // ---- typing contexts ----

    pub(super) fn context(&mut self) -> Result<TypingContext, SyntaxError> {
        let mut ctx = TypingContext::new();
        if self.peek().is_none() {
            return Ok(ctx);
        }
        loop {
            let (endpoint, ty) = self.context_entry()?;
            ctx.insert(endpoint.clone(), ty)
                .map_err(|_| SyntaxError::DuplicateEndpoint(endpoint))?;
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(ctx)
    }

    fn context_entry(&mut self) -> Result<(Endpoint, LocalType), SyntaxError> {
        let session = self.ident("session name")?;
        self.expect(Tok::LBracket, "`[`")?;
        let role = self.role()?;
        self.expect(Tok::RBracket, "`]`")?;
        self.expect(Tok::Colon, "`:`")?;
        let ty = self.local()?;
        Ok((Endpoint::new(session, role), ty))
    }

    // ---- processes ----

    /// Pipe level: `P | Q | …`, left associated.
    pub(super) fn process(&mut self) -> Result<Process, SyntaxError> {
        let mut p = self.prefixed()?;
        while self.peek() == Some(&Tok::Pipe) {
            self.pos += 1;
            let q = self.prefixed()?;
            p = Process::par(p, q);
        }
        Ok(p)
    }

    fn prefixed(&mut self) -> Result<Process, SyntaxError> {
        match self.peek() {
            Some(Tok::Int(0)) => {
                self.pos += 1;
                Ok(Process::Nil)
            }
            Some(Tok::KwIf) => {
                self.pos += 1;
                let cond = self.expr()?;
                self.expect(Tok::KwThen, "`then`")?;
                let then_branch = self.process()?;
                self.expect(Tok::KwElse, "`else`")?;
                let else_branch = self.process()?;
                Ok(Process::If {
                    cond,
                    then_branch: Box::new(then_branch),
                    else_branch: Box::new(else_branch),
                })
            }
            Some(Tok::KwMu) => {
                self.pos += 1;
                let var = self.ident("process variable")?;
                let ann = if self.peek() == Some(&Tok::LBracket) {
                    self.pos += 1;
                    let ctx = self.entries_until(Tok::RBracket)?;
                    self.expect(Tok::RBracket, "`]`")?;
                    Some(ctx)
                } else {
                    None
                };
                self.expect(Tok::Dot, "`.`")?;
                let body = self.process()?;
                Ok(Process::Mu {
                    var,
                    ann,
                    body: Box::new(body),
                })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::KwNew) {
                    self.pos += 1;
                    let session = self.ident("session name")?;
                    let ann = if self.peek() == Some(&Tok::Colon) {
                        self.pos += 1;
                        Some(self.entries_until(Tok::RParen)?)
                    } else {
                        None
                    };
                    self.expect(Tok::RParen, "`)`")?;
                    let body = self.process()?;
                    Ok(Process::Res {
                        session,
                        ann,
                        body: Box::new(body),
                    })
                } else {
                    let p = self.process()?;
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(p)
                }
            }
            Some(Tok::Ident(_)) => {
                if self.peek2() == Some(&Tok::LBracket) {
                    self.communication()
                } else {
                    let var = self.ident("process variable")?;
                    Ok(Process::PVar(var))
                }
            }
            _ => Err(self.error(&[
                "`0`",
                "`if`",
                "`mu`",
                "`(`",
                "channel",
                "process variable",
            ])),
        }
    }

    /// `chan [role] ! label(expr). P` or `chan [role] ? { … }`, where the
    /// channel is `ID` (a bound variable) or `ID[role]` (an endpoint).
    fn communication(&mut self) -> Result<Process, SyntaxError> {
        let head = self.ident("channel")?;
        self.expect(Tok::LBracket, "`[`")?;
        let first = self.role()?;
        self.expect(Tok::RBracket, "`]`")?;
        let (chan, partner) = if self.peek() == Some(&Tok::LBracket) {
            self.pos += 1;
            let second = self.role()?;
            self.expect(Tok::RBracket, "`]`")?;
            (ChanRef::Concrete(Endpoint::new(head, first)), second)
        } else {
            (ChanRef::Var(head), first)
        };
        match self.peek() {
            Some(Tok::Bang) => {
                self.pos += 1;
                let label = self.label()?;
                self.expect(Tok::LParen, "`(`")?;
                let arg = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Dot, "`.`")?;
                let cont = self.prefixed()?;
                Ok(Process::Select {
                    chan,
                    to: partner,
                    label,
                    arg,
                    cont: Box::new(cont),
                })
            }
            Some(Tok::Query) => {
                self.pos += 1;
                self.expect(Tok::LBrace, "`{`")?;
                let mut arms = Vec::new();
                loop {
                    let label = self.label()?;
                    self.expect(Tok::LParen, "`(`")?;
                    let binder = self.ident("binder")?;
                    self.expect(Tok::RParen, "`)`")?;
                    self.expect(Tok::Dot, "`.`")?;
                    let body = self.process()?;
                    arms.push(BranchArm {
                        label,
                        binder,
                        body,
                    });
                    match self.peek() {
                        Some(Tok::Comma) => {
                            self.pos += 1;
                        }
                        Some(Tok::RBrace) => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.error(&["`,`", "`}`"])),
                    }
                }
                let mut seen = std::collections::HashSet::new();
                for arm in &arms {
                    if !seen.insert(arm.label.clone()) {
                        return Err(SyntaxError::Invalid(WellFormedness::DuplicateLabel(
                            arm.label.clone(),
                        )));
                    }
                }
                Ok(Process::Branch {
                    chan,
                    from: partner,
                    arms,
                })
            }
            _ => Err(self.error(&["`!`", "`?`"])),
        }
    }

    fn entries_until(&mut self, terminator: Tok) -> Result<TypingContext, SyntaxError> {
        let mut ctx = TypingContext::new();
        if self.peek() == Some(&terminator) {
            return Ok(ctx);
        }
        loop {
            let (endpoint, ty) = self.context_entry()?;
            ty.validate()?;
            ctx.insert(endpoint.clone(), ty)
                .map_err(|_| SyntaxError::DuplicateEndpoint(endpoint))?;
            if self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
            } else if self.peek() == Some(&terminator) {
                break;
            } else {
                return Err(self.error(&["`,`", terminator.describe().as_str()]));
            }
        }
        Ok(ctx)
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let lhs = self.atom()?;
        match self.peek() {
            Some(Tok::EqEq) => {
                self.pos += 1;
                let rhs = self.atom()?;
                Ok(Expr::Eq(Box::new(lhs), Box::new(rhs)))
            }
            Some(Tok::Lt) => {
                self.pos += 1;
                let rhs = self.atom()?;
                Ok(Expr::Lt(Box::new(lhs), Box::new(rhs)))
            }
            _ => Ok(lhs),
        }
    }

    fn atom(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek() {
            Some(Tok::Int(_)) => {
                if let Some(Tok::Int(n)) = self.bump() {
                    Ok(Expr::Int(n))
                } else {
                    unreachable!()
                }
            }
            Some(Tok::Str(_)) => {
                if let Some(Tok::Str(s)) = self.bump() {
                    Ok(Expr::Str(s))
                } else {
                    unreachable!()
                }
            }
            Some(Tok::KwTrue) => {
                self.pos += 1;
                Ok(Expr::Bool(true))
            }
            Some(Tok::KwFalse) => {
                self.pos += 1;
                Ok(Expr::Bool(false))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Unit)
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident("variable")?;
                if self.peek() == Some(&Tok::LBracket) {
                    self.pos += 1;
                    let role = self.role()?;
                    self.expect(Tok::RBracket, "`]`")?;
                    Ok(Expr::Chan(Endpoint::new(name, role)))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => Err(self.error(&[
                "integer",
                "string",
                "`true`",
                "`false`",
                "`()`",
                "variable",
            ])),
        }
    }
}

/// Checks that a parsed process is well scoped: every value or channel
/// variable is bound by an enclosing branch binder, every process variable
/// by an enclosing `mu`, and recursion bodies are guarded.
pub(super) fn check_scopes(p: &Process) -> Result<(), SyntaxError> {
    scopes(p, &mut Vec::new(), &mut Vec::new())
}

fn scopes(p: &Process, vals: &mut Vec<String>, pvars: &mut Vec<String>) -> Result<(), SyntaxError> {
    match p {
        Process::Nil => Ok(()),
        Process::Select { chan, arg, cont, .. } => {
            chan_scope(chan, vals)?;
            expr_scope(arg, vals)?;
            scopes(cont, vals, pvars)
        }
        Process::Branch { chan, arms, .. } => {
            chan_scope(chan, vals)?;
            for arm in arms {
                vals.push(arm.binder.clone());
                let r = scopes(&arm.body, vals, pvars);
                vals.pop();
                r?;
            }
            Ok(())
        }
        Process::Par(a, b) => {
            scopes(a, vals, pvars)?;
            scopes(b, vals, pvars)
        }
        Process::Res { body, .. } => scopes(body, vals, pvars),
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => {
            expr_scope(cond, vals)?;
            scopes(then_branch, vals, pvars)?;
            scopes(else_branch, vals, pvars)
        }
        Process::Mu { var, body, .. } => {
            if !guarded(body, var, false) {
                return Err(SyntaxError::Invalid(WellFormedness::UnguardedRecursion(
                    var.clone(),
                )));
            }
            pvars.push(var.clone());
            let r = scopes(body, vals, pvars);
            pvars.pop();
            r
        }
        Process::PVar(x) => {
            if pvars.iter().any(|v| v == x) {
                Ok(())
            } else {
                Err(SyntaxError::UnboundVariable(x.clone()))
            }
        }
    }
}

fn chan_scope(c: &ChanRef, vals: &[String]) -> Result<(), SyntaxError> {
    match c {
        ChanRef::Var(x) if !vals.iter().any(|v| v == x) => {
            Err(SyntaxError::UnboundVariable(x.clone()))
        }
        _ => Ok(()),
    }
}

fn expr_scope(e: &Expr, vals: &[String]) -> Result<(), SyntaxError> {
    match e {
        Expr::Var(x) => {
            if vals.iter().any(|v| v == x) {
                Ok(())
            } else {
                Err(SyntaxError::UnboundVariable(x.clone()))
            }
        }
        Expr::Eq(a, b) | Expr::Lt(a, b) => {
            expr_scope(a, vals)?;
            expr_scope(b, vals)
        }
        _ => Ok(()),
    }
}

/// A `mu` body is guarded when every use of its variable sits under at
/// least one communication prefix.
fn guarded(p: &Process, var: &str, under_prefix: bool) -> bool {
    match p {
        Process::Nil => true,
        Process::PVar(x) => x != var || under_prefix,
        Process::Select { cont, .. } => guarded(cont, var, true),
        Process::Branch { arms, .. } => arms.iter().all(|a| guarded(&a.body, var, true)),
        Process::Par(a, b) => guarded(a, var, under_prefix) && guarded(b, var, under_prefix),
        Process::Res { body, .. } => guarded(body, var, under_prefix),
        Process::If {
            then_branch,
            else_branch,
            ..
        } => guarded(then_branch, var, under_prefix) && guarded(else_branch, var, under_prefix),
        Process::Mu { var: v, body, .. } => v == var || guarded(body, var, under_prefix),
    }
}
