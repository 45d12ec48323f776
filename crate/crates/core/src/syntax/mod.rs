//! Concrete text syntax: parsers and pretty-printers for global types,
//! local types, typing contexts, and processes.
//!
//! Grammar (EBNF):
//!
//! ```text
//! global  := role "->" role branchesG | "rec" ID "." global | ID | "end"
//! branchesG := "{" branchG ("," branchG)* "}" | branchG
//! branchG := label payload? "." global
//! local   := role ("!" | "?") branchesL | "rec" ID "." local | ID | "end"
//! branchesL := "{" branchL ("," branchL)* "}" | branchL
//! branchL := label payload? "." local
//! payload := "(" sort ")" ;  sort := "int" | "str" | "bool" | "unit" | "<" local ">"
//! context := entry ("," entry)* | ""  ;  entry := ID "[" role "]" ":" local
//! process := "0" | chan "[" role "]" "!" label "(" expr ")" "." process
//!          | chan "[" role "]" "?" "{" pbranch ("," pbranch)* "}"
//!          | process "|" process | "(" "new" ID (":" entry ("," entry)*)? ")" process
//!          | "if" expr "then" process "else" process
//!          | "mu" ID ("[" entry ("," entry)* "]")? "." process | ID | "(" process ")"
//! pbranch := label "(" ID ")" "." process ;  chan := ID | ID "[" role "]"
//! expr    := atom (("==" | "<") atom)? ;
//! atom    := INT | STRING | "true" | "false" | "()" | ID | ID "[" role "]"
//! ```
//!
//! A payload defaults to `unit` when omitted. Single-branch choices may
//! drop the braces on input; the printer always emits them. Comments run
//! from `//` to end of line.

mod lexer;
mod parser;
mod printer;

use std::fmt;

use thiserror::Error;

use crate::context::{Endpoint, TypingContext};
use crate::proc::Process;
use crate::types::{GlobalType, LocalType, WellFormedness};

/// A byte range within a named input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub start: usize,
    pub end: usize,
}

/// A syntax error with the offending span, rendered as
/// `file:line:col: expected …, found …`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
    line: usize,
    col: usize,
}

impl ParseError {
    pub(crate) fn new(span: SourceSpan, expected: Vec<String>, found: String, src: &str) -> Self {
        let upto = &src[..span.start.min(src.len())];
        let line = upto.bytes().filter(|&b| b == b'\n').count() + 1;
        let col = upto.len() - upto.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
        ParseError {
            span,
            expected,
            found,
            line,
            col,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: expected {}, found {}",
            self.span.file,
            self.line,
            self.col,
            self.expected.join(" or "),
            self.found
        )
    }
}

impl std::error::Error for ParseError {}

/// Any error produced by the parsers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntaxError {
    #[error("{0}")]
    Parse(ParseError),
    #[error("{0}")]
    Invalid(#[from] WellFormedness),
    #[error("duplicate endpoint {0}")]
    DuplicateEndpoint(Endpoint),
    #[error("unbound variable {0}")]
    UnboundVariable(String),
}

/// Parses a global type; the result satisfies every structural invariant.
pub fn parse_global(src: &str) -> Result<GlobalType, SyntaxError> {
    parse_global_named("<input>", src)
}

pub fn parse_global_named(file: &str, src: &str) -> Result<GlobalType, SyntaxError> {
    let toks = lexer::tokenize(file, src)?;
    let mut p = parser::Parser::new(file, src, toks);
    let g = p.global()?;
    p.finish()?;
    g.validate()?;
    Ok(g)
}

/// Parses a local type (`!` = internal choice, `?` = external choice).
pub fn parse_local(src: &str) -> Result<LocalType, SyntaxError> {
    parse_local_named("<input>", src)
}

pub fn parse_local_named(file: &str, src: &str) -> Result<LocalType, SyntaxError> {
    let toks = lexer::tokenize(file, src)?;
    let mut p = parser::Parser::new(file, src, toks);
    let t = p.local()?;
    p.finish()?;
    t.validate()?;
    Ok(t)
}

/// Parses a typing context: `s[p]: T, s[q]: U, …` (empty input allowed).
pub fn parse_context(src: &str) -> Result<TypingContext, SyntaxError> {
    parse_context_named("<input>", src)
}

pub fn parse_context_named(file: &str, src: &str) -> Result<TypingContext, SyntaxError> {
    let toks = lexer::tokenize(file, src)?;
    let mut p = parser::Parser::new(file, src, toks);
    let ctx = p.context()?;
    p.finish()?;
    for (_, t) in ctx.iter() {
        t.validate()?;
    }
    Ok(ctx)
}

/// Parses a process and checks that it is well scoped: value and channel
/// variables bound by branch binders, process variables bound by `mu`.
pub fn parse_process(src: &str) -> Result<Process, SyntaxError> {
    parse_process_named("<input>", src)
}

pub fn parse_process_named(file: &str, src: &str) -> Result<Process, SyntaxError> {
    let toks = lexer::tokenize(file, src)?;
    let mut p = parser::Parser::new(file, src, toks);
    let proc = p.process()?;
    p.finish()?;
    parser::check_scopes(&proc)?;
    Ok(proc)
}

/// Canonical text for any printable syntax node; reparses to an equal AST.
pub fn pretty<T: fmt::Display>(x: &T) -> String {
    x.to_string()
}
