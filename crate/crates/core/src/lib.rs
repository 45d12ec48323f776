//! A verification workbench for multiparty session types.
//!
//! The crate covers the full pipeline from choreographies to processes:
//!
//! - [`types`] — global and local session type ASTs, recursion unfolding,
//!   and coinductive subtyping.
//! - [`context`] — typing contexts mapping session endpoints `s[p]` to
//!   local types, with disjoint composition.
//! - [`syntax`] — a concrete text syntax: parsers and pretty-printers for
//!   global types, local types, typing contexts, and processes.
//! - [`projection`] — projection of a global type onto each role,
//!   including the merge operator for non-participating roles.
//! - [`semantics`] — the typing-context reduction semantics and its
//!   reachable labelled transition system.
//! - [`safety`] — two safety notions over typing contexts: semantic
//!   *liveness* (every pending endpoint can eventually fire) and syntactic
//!   *consistency* (pairwise duality of partial projections), each with
//!   machine-checkable witnesses.
//! - [`proc`] — a small session π-calculus: reduction semantics, a
//!   rely/guarantee type checker, and an executable subject-reduction
//!   probe.

pub mod context;
pub mod proc;
pub mod projection;
pub mod safety;
pub mod semantics;
pub mod syntax;
pub mod types;

pub use context::{compose, ComposeError, Endpoint, Judgement, ProcessEnv, TypingContext};
pub use types::{subtype, GlobalType, Label, LocalType, Role, Sort, WellFormedness};
