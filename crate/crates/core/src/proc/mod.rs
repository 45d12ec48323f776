//! A small session π-calculus: process syntax, reduction semantics, the
//! rely/guarantee type checker, and an executable subject-reduction probe.

mod probe;
mod step;
mod typecheck;

pub use probe::{mirror_context, sr_probe, MirrorError, ProbeError, SRFailure, SRReport};
pub use step::{eval, normal_form, proc_step, ProcAction, StuckExpr, Value};
pub use typecheck::{check_system, typecheck, LivenessAt, TypeFailure, TypecheckOptions};

use std::fmt;

use crate::context::{Endpoint, TypingContext};
use crate::types::{Label, Role};

/// A channel reference: either a concrete endpoint `s[p]`, or a variable
/// bound by a branch binder of session sort (a received delegation).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChanRef {
    Concrete(Endpoint),
    Var(String),
}

impl fmt::Display for ChanRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChanRef::Concrete(e) => write!(f, "{}", e),
            ChanRef::Var(x) => f.write_str(x),
        }
    }
}

/// Expressions of the fixed micro-language: literals of each base sort,
/// variables, integer comparisons, and channel values for delegation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Int(i64),
    Str(String),
    Bool(bool),
    Unit,
    Var(String),
    Chan(Endpoint),
    Eq(Box<Expr>, Box<Expr>),
    Lt(Box<Expr>, Box<Expr>),
}

/// One arm of an external choice: `label(binder). body`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BranchArm {
    pub label: Label,
    pub binder: String,
    pub body: Process,
}

/// A session π-calculus term.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Process {
    /// Inaction, written `0`.
    Nil,
    /// `chan[to]!label(arg). cont` — select a label and send a value.
    Select {
        chan: ChanRef,
        to: Role,
        label: Label,
        arg: Expr,
        cont: Box<Process>,
    },
    /// `chan[from]?{ l(x). P, … }` — offer a set of labelled inputs.
    Branch {
        chan: ChanRef,
        from: Role,
        arms: Vec<BranchArm>,
    },
    Par(Box<Process>, Box<Process>),
    /// `(new s) body`, optionally annotated with the local types of the
    /// restricted session's endpoints: `(new s: s[p]: T, …) body`.
    Res {
        session: String,
        ann: Option<TypingContext>,
        body: Box<Process>,
    },
    If {
        cond: Expr,
        then_branch: Box<Process>,
        else_branch: Box<Process>,
    },
    /// `mu X[Δ]. body` — recursion, annotated with the typing context the
    /// body is checked against. The annotation is optional syntactically
    /// but required by the type checker.
    Mu {
        var: String,
        ann: Option<TypingContext>,
        body: Box<Process>,
    },
    PVar(String),
}

impl Process {
    pub fn par(a: Process, b: Process) -> Process {
        Process::Par(Box::new(a), Box::new(b))
    }

    /// Sessions occurring free in the term (in endpoints, annotations, and
    /// channel-valued expressions), excluding those bound by `Res`.
    pub fn free_sessions(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_free_sessions(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_sessions(
        &self,
        bound: &mut Vec<String>,
        out: &mut std::collections::BTreeSet<String>,
    ) {
        let record = |s: &str, bound: &Vec<String>, out: &mut std::collections::BTreeSet<String>| {
            if !bound.iter().any(|b| b == s) {
                out.insert(s.to_string());
            }
        };
        match self {
            Process::Nil | Process::PVar(_) => {}
            Process::Select { chan, arg, cont, .. } => {
                if let ChanRef::Concrete(e) = chan {
                    record(&e.session, bound, out);
                }
                collect_expr_sessions(arg, bound, out);
                cont.collect_free_sessions(bound, out);
            }
            Process::Branch { chan, arms, .. } => {
                if let ChanRef::Concrete(e) = chan {
                    record(&e.session, bound, out);
                }
                for arm in arms {
                    arm.body.collect_free_sessions(bound, out);
                }
            }
            Process::Par(a, b) => {
                a.collect_free_sessions(bound, out);
                b.collect_free_sessions(bound, out);
            }
            Process::Res { session, body, .. } => {
                bound.push(session.clone());
                body.collect_free_sessions(bound, out);
                bound.pop();
            }
            Process::If {
                cond,
                then_branch,
                else_branch,
            } => {
                collect_expr_sessions(cond, bound, out);
                then_branch.collect_free_sessions(bound, out);
                else_branch.collect_free_sessions(bound, out);
            }
            Process::Mu { ann, body, .. } => {
                if let Some(ctx) = ann {
                    for (e, _) in ctx.iter() {
                        record(&e.session, bound, out);
                    }
                }
                body.collect_free_sessions(bound, out);
            }
        }
    }
}

fn collect_expr_sessions(
    e: &Expr,
    bound: &mut Vec<String>,
    out: &mut std::collections::BTreeSet<String>,
) {
    match e {
        Expr::Chan(ep) => {
            if !bound.iter().any(|b| b == &ep.session) {
                out.insert(ep.session.clone());
            }
        }
        Expr::Eq(a, b) | Expr::Lt(a, b) => {
            collect_expr_sessions(a, bound, out);
            collect_expr_sessions(b, bound, out);
        }
        _ => {}
    }
}
