//! Reduction semantics for processes, up to structural congruence:
//! parallel composition is associative-commutative with `0` as unit, and
//! restrictions extrude (binders are renamed apart first, so extrusion
//! never captures).

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::context::{Endpoint, TypingContext};
use crate::proc::{BranchArm, ChanRef, Expr, Process};
use crate::semantics;
use crate::types::{Label, Role};

/// A closed run-time value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Str(String),
    Bool(bool),
    Unit,
    Chan(Endpoint),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{}", n),
            Value::Str(s) => write!(f, "{}", Expr::Str(s.clone())),
            Value::Bool(b) => write!(f, "{}", b),
            Value::Unit => f.write_str("()"),
            Value::Chan(e) => write!(f, "{}", e),
        }
    }
}

fn value_to_expr(v: &Value) -> Expr {
    match v {
        Value::Int(n) => Expr::Int(*n),
        Value::Str(s) => Expr::Str(s.clone()),
        Value::Bool(b) => Expr::Bool(*b),
        Value::Unit => Expr::Unit,
        Value::Chan(e) => Expr::Chan(e.clone()),
    }
}

/// Evaluation failure: a guard or argument that is not closed or is
/// ill-sorted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StuckExpr {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("ill-sorted expression `{0}`")]
    IllSorted(String),
}

/// Evaluates a closed, well-sorted expression.
pub fn eval(e: &Expr) -> Result<Value, StuckExpr> {
    match e {
        Expr::Int(n) => Ok(Value::Int(*n)),
        Expr::Str(s) => Ok(Value::Str(s.clone())),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Unit => Ok(Value::Unit),
        Expr::Var(x) => Err(StuckExpr::Unbound(x.clone())),
        Expr::Chan(ep) => Ok(Value::Chan(ep.clone())),
        Expr::Eq(a, b) => match (eval(a)?, eval(b)?) {
            (Value::Int(x), Value::Int(y)) => Ok(Value::Bool(x == y)),
            _ => Err(StuckExpr::IllSorted(e.to_string())),
        },
        Expr::Lt(a, b) => match (eval(a)?, eval(b)?) {
            (Value::Int(x), Value::Int(y)) => Ok(Value::Bool(x < y)),
            _ => Err(StuckExpr::IllSorted(e.to_string())),
        },
    }
}

/// The observable label of one reduction step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProcAction {
    /// A synchronisation: `from` sent `label(value)` to `to` on `session`.
    Comm {
        session: String,
        from: Role,
        to: Role,
        label: Label,
        value: Value,
    },
    /// A conditional resolved to its `then` (true) or `else` branch.
    IfBranch { taken: bool },
    /// Administrative unfolding of a recursion.
    MuUnfold { var: String },
}

impl ProcAction {
    pub fn is_comm(&self) -> bool {
        matches!(self, ProcAction::Comm { .. })
    }
}

impl fmt::Display for ProcAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProcAction::Comm {
                session,
                from,
                to,
                label,
                value,
            } => write!(f, "{}: {}->{}: {}({})", session, from, to, label, value),
            ProcAction::IfBranch { taken } => write!(f, "if:{}", taken),
            ProcAction::MuUnfold { var } => write!(f, "mu:{}", var),
        }
    }
}

// ---- renaming helpers ----

fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    let mut i = 1;
    loop {
        let candidate = format!("{}_{}", base, i);
        if !used.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

fn rename_session_in_expr(e: &Expr, old: &str, new: &str) -> Expr {
    match e {
        Expr::Chan(ep) if ep.session == old => {
            Expr::Chan(Endpoint::new(new, ep.role.clone()))
        }
        Expr::Eq(a, b) => Expr::Eq(
            Box::new(rename_session_in_expr(a, old, new)),
            Box::new(rename_session_in_expr(b, old, new)),
        ),
        Expr::Lt(a, b) => Expr::Lt(
            Box::new(rename_session_in_expr(a, old, new)),
            Box::new(rename_session_in_expr(b, old, new)),
        ),
        other => other.clone(),
    }
}

fn rename_session_in_ctx(ctx: &TypingContext, old: &str, new: &str) -> TypingContext {
    let mut out = TypingContext::new();
    for (e, t) in ctx.iter() {
        let e = if e.session == old {
            Endpoint::new(new, e.role.clone())
        } else {
            e.clone()
        };
        out.insert(e, t.clone()).expect("renaming keeps endpoints distinct");
    }
    out
}

/// Renames free occurrences of session `old` to `new` (fresh).
fn rename_session(p: &Process, old: &str, new: &str) -> Process {
    let ren_chan = |c: &ChanRef| match c {
        ChanRef::Concrete(e) if e.session == old => {
            ChanRef::Concrete(Endpoint::new(new, e.role.clone()))
        }
        other => other.clone(),
    };
    match p {
        Process::Nil => Process::Nil,
        Process::PVar(x) => Process::PVar(x.clone()),
        Process::Select {
            chan,
            to,
            label,
            arg,
            cont,
        } => Process::Select {
            chan: ren_chan(chan),
            to: to.clone(),
            label: label.clone(),
            arg: rename_session_in_expr(arg, old, new),
            cont: Box::new(rename_session(cont, old, new)),
        },
        Process::Branch { chan, from, arms } => Process::Branch {
            chan: ren_chan(chan),
            from: from.clone(),
            arms: arms
                .iter()
                .map(|a| BranchArm {
                    label: a.label.clone(),
                    binder: a.binder.clone(),
                    body: rename_session(&a.body, old, new),
                })
                .collect(),
        },
        Process::Par(a, b) => Process::par(
            rename_session(a, old, new),
            rename_session(b, old, new),
        ),
        Process::Res { session, ann, body } => {
            if session == old {
                p.clone() // shadowed
            } else {
                Process::Res {
                    session: session.clone(),
                    ann: ann.as_ref().map(|c| rename_session_in_ctx(c, old, new)),
                    body: Box::new(rename_session(body, old, new)),
                }
            }
        }
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => Process::If {
            cond: rename_session_in_expr(cond, old, new),
            then_branch: Box::new(rename_session(then_branch, old, new)),
            else_branch: Box::new(rename_session(else_branch, old, new)),
        },
        Process::Mu { var, ann, body } => Process::Mu {
            var: var.clone(),
            ann: ann.as_ref().map(|c| rename_session_in_ctx(c, old, new)),
            body: Box::new(rename_session(body, old, new)),
        },
    }
}

/// Renames every `Res` binder so that binders are pairwise distinct and
/// distinct from all free sessions. Makes scope extrusion capture-free.
fn rename_apart(p: &Process) -> Process {
    let mut used: BTreeSet<String> = p.free_sessions();
    rename_apart_in(p, &mut used)
}

fn rename_apart_in(p: &Process, used: &mut BTreeSet<String>) -> Process {
    match p {
        Process::Res { session, ann, body } => {
            let (name, body) = if used.contains(session) {
                let fresh = fresh_name(session, used);
                let renamed = rename_session(body, session, &fresh);
                let ann = ann.as_ref().map(|c| rename_session_in_ctx(c, session, &fresh));
                used.insert(fresh.clone());
                return Process::Res {
                    session: fresh.clone(),
                    ann,
                    body: Box::new(rename_apart_in(&renamed, used)),
                };
            } else {
                used.insert(session.clone());
                (session.clone(), body)
            };
            Process::Res {
                session: name,
                ann: ann.clone(),
                body: Box::new(rename_apart_in(body, used)),
            }
        }
        Process::Par(a, b) => {
            let a = rename_apart_in(a, used);
            let b = rename_apart_in(b, used);
            Process::par(a, b)
        }
        Process::Select {
            chan,
            to,
            label,
            arg,
            cont,
        } => Process::Select {
            chan: chan.clone(),
            to: to.clone(),
            label: label.clone(),
            arg: arg.clone(),
            cont: Box::new(rename_apart_in(cont, used)),
        },
        Process::Branch { chan, from, arms } => Process::Branch {
            chan: chan.clone(),
            from: from.clone(),
            arms: arms
                .iter()
                .map(|a| BranchArm {
                    label: a.label.clone(),
                    binder: a.binder.clone(),
                    body: rename_apart_in(&a.body, used),
                })
                .collect(),
        },
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => Process::If {
            cond: cond.clone(),
            then_branch: Box::new(rename_apart_in(then_branch, used)),
            else_branch: Box::new(rename_apart_in(else_branch, used)),
        },
        Process::Mu { var, ann, body } => Process::Mu {
            var: var.clone(),
            ann: ann.clone(),
            body: Box::new(rename_apart_in(body, used)),
        },
        other => other.clone(),
    }
}

// ---- substitution ----

/// Substitutes a value for a branch binder. Channel values rebind channel
/// references (delegation receipt); a restriction over the same session
/// name as a delegated endpoint is renamed first.
fn subst_value(p: &Process, x: &str, v: &Value) -> Process {
    match p {
        Process::Nil => Process::Nil,
        Process::PVar(y) => Process::PVar(y.clone()),
        Process::Select {
            chan,
            to,
            label,
            arg,
            cont,
        } => Process::Select {
            chan: subst_chan(chan, x, v),
            to: to.clone(),
            label: label.clone(),
            arg: subst_expr(arg, x, v),
            cont: Box::new(subst_value(cont, x, v)),
        },
        Process::Branch { chan, from, arms } => Process::Branch {
            chan: subst_chan(chan, x, v),
            from: from.clone(),
            arms: arms
                .iter()
                .map(|arm| {
                    if arm.binder == x {
                        arm.clone() // shadowed
                    } else {
                        BranchArm {
                            label: arm.label.clone(),
                            binder: arm.binder.clone(),
                            body: subst_value(&arm.body, x, v),
                        }
                    }
                })
                .collect(),
        },
        Process::Par(a, b) => Process::par(subst_value(a, x, v), subst_value(b, x, v)),
        Process::Res { session, ann, body } => {
            if let Value::Chan(e) = v {
                if e.session == *session {
                    // The delegated endpoint's session would be captured.
                    let mut used = body.free_sessions();
                    used.insert(e.session.clone());
                    let fresh = fresh_name(session, &used);
                    let body = rename_session(body, session, &fresh);
                    let ann = ann.as_ref().map(|c| rename_session_in_ctx(c, session, &fresh));
                    return Process::Res {
                        session: fresh,
                        ann,
                        body: Box::new(subst_value(&body, x, v)),
                    };
                }
            }
            Process::Res {
                session: session.clone(),
                ann: ann.clone(),
                body: Box::new(subst_value(body, x, v)),
            }
        }
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => Process::If {
            cond: subst_expr(cond, x, v),
            then_branch: Box::new(subst_value(then_branch, x, v)),
            else_branch: Box::new(subst_value(else_branch, x, v)),
        },
        Process::Mu { var, ann, body } => Process::Mu {
            var: var.clone(),
            ann: ann.clone(),
            body: Box::new(subst_value(body, x, v)),
        },
    }
}

fn subst_chan(c: &ChanRef, x: &str, v: &Value) -> ChanRef {
    match (c, v) {
        (ChanRef::Var(y), Value::Chan(e)) if y == x => ChanRef::Concrete(e.clone()),
        _ => c.clone(),
    }
}

fn subst_expr(e: &Expr, x: &str, v: &Value) -> Expr {
    match e {
        Expr::Var(y) if y == x => value_to_expr(v),
        Expr::Eq(a, b) => Expr::Eq(
            Box::new(subst_expr(a, x, v)),
            Box::new(subst_expr(b, x, v)),
        ),
        Expr::Lt(a, b) => Expr::Lt(
            Box::new(subst_expr(a, x, v)),
            Box::new(subst_expr(b, x, v)),
        ),
        other => other.clone(),
    }
}

/// Unfolds a recursion: substitutes the whole `mu` term for its variable.
/// The substituted term is a closed thread, so only shadowing matters.
fn subst_pvar(p: &Process, x: &str, with: &Process) -> Process {
    match p {
        Process::Nil => Process::Nil,
        Process::PVar(y) => {
            if y == x {
                with.clone()
            } else {
                p.clone()
            }
        }
        Process::Select {
            chan,
            to,
            label,
            arg,
            cont,
        } => Process::Select {
            chan: chan.clone(),
            to: to.clone(),
            label: label.clone(),
            arg: arg.clone(),
            cont: Box::new(subst_pvar(cont, x, with)),
        },
        Process::Branch { chan, from, arms } => Process::Branch {
            chan: chan.clone(),
            from: from.clone(),
            arms: arms
                .iter()
                .map(|arm| BranchArm {
                    label: arm.label.clone(),
                    binder: arm.binder.clone(),
                    body: subst_pvar(&arm.body, x, with),
                })
                .collect(),
        },
        Process::Par(a, b) => Process::par(subst_pvar(a, x, with), subst_pvar(b, x, with)),
        Process::Res { session, ann, body } => Process::Res {
            session: session.clone(),
            ann: ann.clone(),
            body: Box::new(subst_pvar(body, x, with)),
        },
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => Process::If {
            cond: cond.clone(),
            then_branch: Box::new(subst_pvar(then_branch, x, with)),
            else_branch: Box::new(subst_pvar(else_branch, x, with)),
        },
        Process::Mu { var, ann, body } => {
            if var == x {
                p.clone() // shadowed
            } else {
                Process::Mu {
                    var: var.clone(),
                    ann: ann.clone(),
                    body: Box::new(subst_pvar(body, x, with)),
                }
            }
        }
    }
}

// ---- the soup: binders and parallel threads ----

struct Soup {
    binders: Vec<(String, Option<TypingContext>)>,
    threads: Vec<Process>,
}

fn flatten(p: &Process) -> Soup {
    let mut soup = Soup {
        binders: Vec::new(),
        threads: Vec::new(),
    };
    collect(p, &mut soup);
    soup
}

fn collect(p: &Process, soup: &mut Soup) {
    match p {
        Process::Par(a, b) => {
            collect(a, soup);
            collect(b, soup);
        }
        Process::Res { session, ann, body } => {
            soup.binders.push((session.clone(), ann.clone()));
            collect(body, soup);
        }
        Process::Nil => {}
        other => soup.threads.push(other.clone()),
    }
}

fn rebuild(binders: &[(String, Option<TypingContext>)], threads: Vec<Process>) -> Process {
    let threads: Vec<Process> = threads
        .into_iter()
        .filter(|t| !matches!(t, Process::Nil))
        .collect();
    let mut free = BTreeSet::new();
    for t in &threads {
        free.extend(t.free_sessions());
    }
    let mut body = match threads.split_first() {
        None => Process::Nil,
        Some((first, rest)) => rest
            .iter()
            .fold(first.clone(), |acc, t| Process::par(acc, t.clone())),
    };
    for (session, ann) in binders.iter().rev() {
        if free.contains(session) {
            body = Process::Res {
                session: session.clone(),
                ann: ann.clone(),
                body: Box::new(body),
            };
        }
    }
    body
}

/// Canonical form under structural congruence: binders renamed apart and
/// hoisted, `0` threads dropped, unused restrictions collected, parallel
/// threads sorted.
pub fn normal_form(p: &Process) -> Process {
    let soup = flatten(&rename_apart(p));
    let mut threads = soup.threads;
    threads.sort();
    rebuild(&soup.binders, threads)
}

/// All one-step reducts of a closed process, with their actions.
///
/// Communication synchronises a `Select` with a matching `Branch` in
/// parallel; conditionals resolve by evaluating the guard; recursion
/// unfolds silently. When a communication happens on a restricted session
/// that carries a context annotation, the annotation is advanced by the
/// corresponding context reduction.
pub fn proc_step(p: &Process) -> Result<Vec<(ProcAction, Process)>, StuckExpr> {
    let soup = flatten(&rename_apart(p));
    let mut reducts = Vec::new();

    for (i, thread) in soup.threads.iter().enumerate() {
        match thread {
            Process::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let taken = match eval(cond)? {
                    Value::Bool(b) => b,
                    _ => return Err(StuckExpr::IllSorted(cond.to_string())),
                };
                let mut threads = soup.threads.clone();
                threads[i] = if taken {
                    (**then_branch).clone()
                } else {
                    (**else_branch).clone()
                };
                reducts.push((
                    ProcAction::IfBranch { taken },
                    rebuild(&soup.binders, threads),
                ));
            }
            Process::Mu { var, body, .. } => {
                let mut threads = soup.threads.clone();
                threads[i] = subst_pvar(body, var, thread);
                reducts.push((
                    ProcAction::MuUnfold { var: var.clone() },
                    rebuild(&soup.binders, threads),
                ));
            }
            Process::Select {
                chan: ChanRef::Concrete(sender),
                to,
                label,
                arg,
                cont,
            } => {
                for (j, other) in soup.threads.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let Process::Branch {
                        chan: ChanRef::Concrete(receiver),
                        from,
                        arms,
                    } = other
                    else {
                        continue;
                    };
                    if receiver.session != sender.session
                        || receiver.role != *to
                        || *from != sender.role
                    {
                        continue;
                    }
                    let Some(arm) = arms.iter().find(|a| a.label == *label) else {
                        continue;
                    };
                    let value = eval(arg)?;
                    let mut threads = soup.threads.clone();
                    threads[i] = (**cont).clone();
                    threads[j] = subst_value(&arm.body, &arm.binder, &value);
                    let action = ProcAction::Comm {
                        session: sender.session.clone(),
                        from: sender.role.clone(),
                        to: to.clone(),
                        label: label.clone(),
                        value,
                    };
                    let binders = advance_annotation(&soup.binders, &action);
                    reducts.push((action, rebuild(&binders, threads)));
                }
            }
            _ => {}
        }
    }
    Ok(reducts)
}

/// When a communication fires on an annotated restricted session, the
/// annotation follows the corresponding context reduction.
fn advance_annotation(
    binders: &[(String, Option<TypingContext>)],
    action: &ProcAction,
) -> Vec<(String, Option<TypingContext>)> {
    let ProcAction::Comm {
        session,
        from,
        to,
        label,
        ..
    } = action
    else {
        return binders.to_vec();
    };
    binders
        .iter()
        .map(|(name, ann)| {
            if name != session {
                return (name.clone(), ann.clone());
            }
            let advanced = ann.as_ref().map(|ctx| {
                let matching = semantics::enabled(ctx).into_iter().find(|a| {
                    a.session == *session && a.from == *from && a.to == *to && a.label == *label
                });
                match matching {
                    Some(a) => semantics::step(ctx, &a).unwrap_or_else(|_| ctx.clone()),
                    None => ctx.clone(),
                }
            });
            (name.clone(), advanced)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_process;

    #[test]
    fn nil_has_no_reducts() {
        assert!(proc_step(&Process::Nil).unwrap().is_empty());
    }

    #[test]
    fn unique_matching_redex() {
        let p = parse_process("s[p][q]!m1(42).0 | s[q][p]?{ m1(x). 0, stop(y). 0 }").unwrap();
        let reducts = proc_step(&p).unwrap();
        assert_eq!(reducts.len(), 1);
        let (action, reduct) = &reducts[0];
        assert_eq!(action.to_string(), "s: p->q: m1(42)");
        // 0 | 0 is structurally congruent to 0.
        assert_eq!(*reduct, Process::Nil);
    }

    #[test]
    fn conditional_resolves_by_guard() {
        let p = parse_process("if true then 0 else s[p][q]!l(1).0").unwrap();
        let reducts = proc_step(&p).unwrap();
        assert_eq!(reducts.len(), 1);
        assert_eq!(reducts[0].0, ProcAction::IfBranch { taken: true });
        assert_eq!(reducts[0].1, Process::Nil);

        let p = parse_process("if 1 == 2 then 0 else 0").unwrap();
        let reducts = proc_step(&p).unwrap();
        assert_eq!(reducts[0].0, ProcAction::IfBranch { taken: false });
    }

    #[test]
    fn label_must_match() {
        let p = parse_process("s[p][q]!other(42).0 | s[q][p]?{ m1(x). 0 }").unwrap();
        assert!(proc_step(&p).unwrap().is_empty());
    }

    #[test]
    fn value_substitutes_into_the_arm() {
        let p = parse_process(
            "s[p][q]!m1(7).0 | s[q][p]?{ m1(x). if x == 7 then 0 else s[q][r]!bad(1).0 }",
        )
        .unwrap();
        let reducts = proc_step(&p).unwrap();
        assert_eq!(reducts.len(), 1);
        let after = &reducts[0].1;
        let again = proc_step(after).unwrap();
        assert_eq!(again.len(), 1);
        assert_eq!(again[0].0, ProcAction::IfBranch { taken: true });
        assert_eq!(again[0].1, Process::Nil);
    }

    #[test]
    fn mu_unfolds_silently() {
        let p = parse_process("(mu X. s[p][q]!l(1). X) | s[q][p]?{ l(y). 0 }").unwrap();
        let reducts = proc_step(&p).unwrap();
        assert_eq!(reducts.len(), 1);
        assert!(matches!(reducts[0].0, ProcAction::MuUnfold { .. }));
        // After unfolding, the prefix communicates and folds back to the
        // recursion against the continuing receiver.
        let after = &reducts[0].1;
        let comms = proc_step(after).unwrap();
        assert_eq!(comms.len(), 1);
        assert!(comms[0].0.is_comm());
    }

    #[test]
    fn delegation_rebinds_the_channel_variable() {
        let p = parse_process(
            "s[p][q]!del(t[a]).0 | s[q][p]?{ del(x). x[b]!go(1).0 } | t[b][a]?{ go(z). 0 }",
        )
        .unwrap();
        let reducts = proc_step(&p).unwrap();
        assert_eq!(reducts.len(), 1);
        let after = &reducts[0].1;
        let next = proc_step(after).unwrap();
        assert_eq!(next.len(), 1);
        assert_eq!(next[0].0.to_string(), "t: a->b: go(1)");
        assert_eq!(next[0].1, Process::Nil);
    }

    #[test]
    fn restricted_sessions_reduce_under_the_binder() {
        let p = parse_process("(new u) (u[a][b]!go(1).0 | u[b][a]?{ go(x). 0 })").unwrap();
        let reducts = proc_step(&p).unwrap();
        assert_eq!(reducts.len(), 1);
        assert_eq!(reducts[0].0.to_string(), "u: a->b: go(1)");
        assert_eq!(reducts[0].1, Process::Nil);
    }

    #[test]
    fn scope_extrusion_renames_on_clash() {
        // Both components restrict `u`; flattening must keep them apart.
        let p = parse_process(
            "(new u) (u[a][b]!go(1).0 | u[b][a]?{ go(x). 0 }) \
             | (new u) (u[c][d]!hi(2).0 | u[d][c]?{ hi(y). 0 })",
        )
        .unwrap();
        let reducts = proc_step(&p).unwrap();
        assert_eq!(reducts.len(), 2);
        let sessions: BTreeSet<String> = reducts
            .iter()
            .map(|(a, _)| match a {
                ProcAction::Comm { session, .. } => session.clone(),
                _ => panic!("expected comm"),
            })
            .collect();
        assert_eq!(sessions.len(), 2);
    }

    #[test]
    fn normal_form_is_order_insensitive() {
        let a = parse_process("s[p][q]!l(1).0 | 0 | s[q][p]?{ l(x). 0 }").unwrap();
        let b = parse_process("s[q][p]?{ l(x). 0 } | s[p][q]!l(1).0").unwrap();
        assert_eq!(normal_form(&a), normal_form(&b));
    }

    #[test]
    fn stuck_guard_is_reported() {
        let p = Process::If {
            cond: Expr::Var("x".into()),
            then_branch: Box::new(Process::Nil),
            else_branch: Box::new(Process::Nil),
        };
        assert_eq!(
            proc_step(&p).unwrap_err(),
            StuckExpr::Unbound("x".to_string())
        );
    }
}
