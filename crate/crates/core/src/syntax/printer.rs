//! Canonical pretty-printers. Output reparses to a structurally equal
//! AST; choices always print with braces, unit payloads are omitted.

use std::fmt;

use crate::proc::{Expr, Process};
use crate::types::{Branches, GlobalType, LocalType, Sort};

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => f.write_str("int"),
            Sort::Str => f.write_str("str"),
            Sort::Bool => f.write_str("bool"),
            Sort::Unit => f.write_str("unit"),
            Sort::Session(t) => write!(f, "<{}>", t),
        }
    }
}

fn write_branches<T: fmt::Display>(
    f: &mut fmt::Formatter<'_>,
    branches: &Branches<T>,
) -> fmt::Result {
    f.write_str("{ ")?;
    let mut first = true;
    for (label, sort, cont) in branches.iter() {
        if !first {
            f.write_str(", ")?;
        }
        write!(f, "{}", label)?;
        if *sort != Sort::Unit {
            write!(f, "({})", sort)?;
        }
        write!(f, ". {}", cont)?;
        first = false;
    }
    f.write_str(" }")
}

impl fmt::Display for GlobalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlobalType::Comm { from, to, branches } => {
                write!(f, "{}->{}", from, to)?;
                write_branches(f, branches)
            }
            GlobalType::Rec { var, body } => write!(f, "rec {}. {}", var, body),
            GlobalType::Var(x) => f.write_str(x),
            GlobalType::End => f.write_str("end"),
        }
    }
}

impl fmt::Display for LocalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalType::Select { peer, branches } => {
                write!(f, "{}!", peer)?;
                write_branches(f, branches)
            }
            LocalType::Branch { peer, branches } => {
                write!(f, "{}?", peer)?;
                write_branches(f, branches)
            }
            LocalType::Rec { var, body } => write!(f, "rec {}. {}", var, body),
            LocalType::Var(x) => f.write_str(x),
            LocalType::End => f.write_str("end"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(n) => write!(f, "{}", n),
            Expr::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        other => write!(f, "{}", other)?,
                    }
                }
                f.write_str("\"")
            }
            Expr::Bool(true) => f.write_str("true"),
            Expr::Bool(false) => f.write_str("false"),
            Expr::Unit => f.write_str("()"),
            Expr::Var(x) => f.write_str(x),
            Expr::Chan(e) => write!(f, "{}", e),
            Expr::Eq(a, b) => write!(f, "{} == {}", a, b),
            Expr::Lt(a, b) => write!(f, "{} < {}", a, b),
        }
    }
}

/// True when the term, printed as a non-final parallel operand, would
/// swallow a following `|` into a trailing greedy body.
fn swallows_pipe(p: &Process) -> bool {
    match p {
        Process::If { .. } | Process::Mu { .. } | Process::Res { .. } => true,
        Process::Select { cont, .. } => swallows_pipe(cont),
        _ => false,
    }
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Process::Nil => f.write_str("0"),
            Process::Select {
                chan,
                to,
                label,
                arg,
                cont,
            } => {
                write!(f, "{}[{}]!{}({}). ", chan, to, label, arg)?;
                // Continuations parse at prefix level, so a parallel
                // continuation keeps its parentheses.
                if matches!(**cont, Process::Par(..)) {
                    write!(f, "({})", cont)
                } else {
                    write!(f, "{}", cont)
                }
            }
            Process::Branch { chan, from, arms } => {
                write!(f, "{}[{}]?{{ ", chan, from)?;
                let mut first = true;
                for arm in arms {
                    if !first {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}({}). {}", arm.label, arm.binder, arm.body)?;
                    first = false;
                }
                f.write_str(" }")
            }
            Process::Par(a, b) => {
                // `|` parses left-associated: the left operand may itself
                // be a Par, the right one must keep its parentheses.
                if swallows_pipe(a) {
                    write!(f, "({})", a)?;
                } else {
                    write!(f, "{}", a)?;
                }
                f.write_str(" | ")?;
                if swallows_pipe(b) || matches!(**b, Process::Par(..)) {
                    write!(f, "({})", b)
                } else {
                    write!(f, "{}", b)
                }
            }
            Process::Res { session, ann, body } => {
                match ann {
                    Some(ctx) => write!(f, "(new {}: {}) {}", session, ctx, body),
                    None => write!(f, "(new {}) {}", session, body),
                }
            }
            Process::If {
                cond,
                then_branch,
                else_branch,
            } => write!(f, "if {} then {} else {}", cond, then_branch, else_branch),
            Process::Mu { var, ann, body } => match ann {
                Some(ctx) => write!(f, "mu {}[{}]. {}", var, ctx, body),
                None => write!(f, "mu {}. {}", var, body),
            },
            Process::PVar(x) => f.write_str(x),
        }
    }
}
