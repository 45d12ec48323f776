//! Session type ASTs shared by every other module: global types
//! (choreographies), local types (per-role views), payload sorts, recursion
//! unfolding, and coinductive subtyping.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Violation of a structural invariant of a type or identifier.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormedness {
    #[error("invalid identifier {0:?}")]
    InvalidIdentifier(String),
    #[error("self-communication: role {0} sends to itself")]
    SelfCommunication(Role),
    #[error("duplicate label {0}")]
    DuplicateLabel(Label),
    #[error("empty choice")]
    EmptyChoice,
    #[error("unbound type variable {0}")]
    UnboundVar(String),
    #[error("non-contractive recursion on {0}")]
    NonContractive(String),
    #[error("recursion body of {0} unguarded")]
    UnguardedRecursion(String),
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A participant of a multiparty session, identified by name.
///
/// Roles are totally ordered (lexicographically) so that every iteration
/// over sets of roles is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Role(String);

impl Role {
    pub fn new(name: &str) -> Result<Self, WellFormedness> {
        if is_ident(name) {
            Ok(Role(name.to_string()))
        } else {
            Err(WellFormedness::InvalidIdentifier(name.to_string()))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A message label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(name: &str) -> Result<Self, WellFormedness> {
        if is_ident(name) {
            Ok(Label(name.to_string()))
        } else {
            Err(WellFormedness::InvalidIdentifier(name.to_string()))
        }
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Payload sort carried by a message.
///
/// `Unit` stands for messages that carry no value; `Session` payloads are
/// delegated session endpoints and must contain a closed local type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Str,
    Bool,
    Unit,
    Session(Box<LocalType>),
}

impl Sort {
    pub fn is_base(&self) -> bool {
        !matches!(self, Sort::Session(_))
    }
}

/// The branches of a directed choice: an ordered map from labels to
/// `(payload sort, continuation)`.
///
/// Source order is preserved for deterministic printing; semantic
/// operations treat the map as unordered. Labels are pairwise distinct and
/// the map is non-empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Branches<T>(Vec<(Label, Sort, T)>);

impl<T> Branches<T> {
    pub fn new(items: Vec<(Label, Sort, T)>) -> Result<Self, WellFormedness> {
        if items.is_empty() {
            return Err(WellFormedness::EmptyChoice);
        }
        let mut seen = HashSet::new();
        for (label, _, _) in &items {
            if !seen.insert(label.clone()) {
                return Err(WellFormedness::DuplicateLabel(label.clone()));
            }
        }
        Ok(Branches(items))
    }

    pub fn get(&self, label: &Label) -> Option<(&Sort, &T)> {
        self.0
            .iter()
            .find(|(l, _, _)| l == label)
            .map(|(_, s, t)| (s, t))
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.0.iter().any(|(l, _, _)| l == label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.0.iter().map(|(l, _, _)| l)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Label, Sort, T)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Branches<U> {
        Branches(
            self.0
                .iter()
                .map(|(l, s, t)| (l.clone(), s.clone(), f(t)))
                .collect(),
        )
    }

    pub fn try_map<U, E>(&self, mut f: impl FnMut(&Label, &T) -> Result<U, E>) -> Result<Branches<U>, E> {
        let mut out = Vec::with_capacity(self.0.len());
        for (l, s, t) in &self.0 {
            out.push((l.clone(), s.clone(), f(l, t)?));
        }
        Ok(Branches(out))
    }
}

/// A global type: the bird's-eye choreography of a protocol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GlobalType {
    /// A directed choice `from -> to { l_i(T_i). G_i }`.
    Comm {
        from: Role,
        to: Role,
        branches: Branches<GlobalType>,
    },
    /// `rec X. G`
    Rec { var: String, body: Box<GlobalType> },
    /// A recursion variable bound by an enclosing `Rec`.
    Var(String),
    /// Protocol termination.
    End,
}

impl GlobalType {
    /// Builds a communication, rejecting self-communication.
    pub fn comm(
        from: Role,
        to: Role,
        branches: Branches<GlobalType>,
    ) -> Result<Self, WellFormedness> {
        if from == to {
            return Err(WellFormedness::SelfCommunication(from));
        }
        Ok(GlobalType::Comm { from, to, branches })
    }

    /// Checks closedness, contractivity, and absence of self-communication
    /// throughout the term, including payload local types.
    pub fn validate(&self) -> Result<(), WellFormedness> {
        self.validate_in(&mut Vec::new())
    }

    fn validate_in(&self, bound: &mut Vec<String>) -> Result<(), WellFormedness> {
        match self {
            GlobalType::Comm { from, to, branches } => {
                if from == to {
                    return Err(WellFormedness::SelfCommunication(from.clone()));
                }
                for (_, sort, cont) in branches.iter() {
                    validate_sort(sort)?;
                    cont.validate_in(bound)?;
                }
                Ok(())
            }
            GlobalType::Rec { var, body } => {
                if rec_chain_head_is_var(body) {
                    return Err(WellFormedness::NonContractive(var.clone()));
                }
                bound.push(var.clone());
                let r = body.validate_in(bound);
                bound.pop();
                r
            }
            GlobalType::Var(x) => {
                if bound.iter().any(|v| v == x) {
                    Ok(())
                } else {
                    Err(WellFormedness::UnboundVar(x.clone()))
                }
            }
            GlobalType::End => Ok(()),
        }
    }
}

/// Head of a `Rec` chain: descends through nested `Rec` bodies only.
/// A `Var` at that position (of any binder) makes unfolding unproductive.
fn rec_chain_head_is_var(body: &GlobalType) -> bool {
    match body {
        GlobalType::Rec { body, .. } => rec_chain_head_is_var(body),
        GlobalType::Var(_) => true,
        _ => false,
    }
}

fn local_rec_chain_head_is_var(body: &LocalType) -> bool {
    match body {
        LocalType::Rec { body, .. } => local_rec_chain_head_is_var(body),
        LocalType::Var(_) => true,
        _ => false,
    }
}

fn validate_sort(sort: &Sort) -> Result<(), WellFormedness> {
    match sort {
        Sort::Session(s) => s.validate(),
        _ => Ok(()),
    }
}

/// A local type: one role's view of a protocol.
///
/// `Select` is an internal choice (output, written `peer!{…}`); `Branch`
/// is an external choice (input, written `peer?{…}`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LocalType {
    Select {
        peer: Role,
        branches: Branches<LocalType>,
    },
    Branch {
        peer: Role,
        branches: Branches<LocalType>,
    },
    Rec {
        var: String,
        body: Box<LocalType>,
    },
    Var(String),
    End,
}

impl LocalType {
    /// Checks closedness and contractivity throughout the term.
    pub fn validate(&self) -> Result<(), WellFormedness> {
        self.validate_in(&mut Vec::new())
    }

    fn validate_in(&self, bound: &mut Vec<String>) -> Result<(), WellFormedness> {
        match self {
            LocalType::Select { branches, .. } | LocalType::Branch { branches, .. } => {
                for (_, sort, cont) in branches.iter() {
                    validate_sort(sort)?;
                    cont.validate_in(bound)?;
                }
                Ok(())
            }
            LocalType::Rec { var, body } => {
                if local_rec_chain_head_is_var(body) {
                    return Err(WellFormedness::NonContractive(var.clone()));
                }
                bound.push(var.clone());
                let r = body.validate_in(bound);
                bound.pop();
                r
            }
            LocalType::Var(x) => {
                if bound.iter().any(|v| v == x) {
                    Ok(())
                } else {
                    Err(WellFormedness::UnboundVar(x.clone()))
                }
            }
            LocalType::End => Ok(()),
        }
    }

    /// One-step μ-unfolding: `rec X. B` becomes `B[X := rec X. B]`;
    /// any other term is returned unchanged.
    pub fn unfold(&self) -> LocalType {
        match self {
            LocalType::Rec { var, body } => body.substitute(var, self),
            other => other.clone(),
        }
    }

    /// Unfolds until the head constructor is not a `Rec`. Terminates on
    /// contractive types (each unfolding strips one leading binder and
    /// substituted occurrences are guarded).
    pub fn unfold_head(&self) -> LocalType {
        let mut t = self.clone();
        while matches!(t, LocalType::Rec { .. }) {
            t = t.unfold();
        }
        t
    }

    /// Capture-avoiding substitution of `Var(var)` by `with`. Only called
    /// with closed `with`, so binder renaming is never required; inner
    /// binders of the same name shadow as usual.
    fn substitute(&self, var: &str, with: &LocalType) -> LocalType {
        match self {
            LocalType::Select { peer, branches } => LocalType::Select {
                peer: peer.clone(),
                branches: branches.map(|t| t.substitute(var, with)),
            },
            LocalType::Branch { peer, branches } => LocalType::Branch {
                peer: peer.clone(),
                branches: branches.map(|t| t.substitute(var, with)),
            },
            LocalType::Rec { var: v, body } => {
                if v == var {
                    self.clone()
                } else {
                    LocalType::Rec {
                        var: v.clone(),
                        body: Box::new(body.substitute(var, with)),
                    }
                }
            }
            LocalType::Var(x) => {
                if x == var {
                    with.clone()
                } else {
                    self.clone()
                }
            }
            LocalType::End => LocalType::End,
        }
    }

    /// True iff the type unfolds to `End`.
    pub fn is_ended(&self) -> bool {
        match self {
            LocalType::End => true,
            LocalType::Select { .. } | LocalType::Branch { .. } | LocalType::Var(_) => false,
            LocalType::Rec { .. } => matches!(self.unfold_head(), LocalType::End),
        }
    }
}

/// Head of a type without copying when it is already a constructor.
fn head(t: &LocalType) -> std::borrow::Cow<'_, LocalType> {
    match t {
        LocalType::Rec { .. } => std::borrow::Cow::Owned(t.unfold_head()),
        other => std::borrow::Cow::Borrowed(other),
    }
}

/// Structural equality up to unfolding of recursion, decided coinductively
/// with a visited-pair set. Both inputs must be closed.
pub fn equiv(a: &LocalType, b: &LocalType) -> bool {
    equiv_inner(a, b, &mut HashSet::new())
}

fn equiv_inner(a: &LocalType, b: &LocalType, seen: &mut HashSet<(LocalType, LocalType)>) -> bool {
    if a == b {
        return true;
    }
    // The visited set is only needed where recursion can regress; plain
    // structural descent terminates on its own.
    if matches!(a, LocalType::Rec { .. }) || matches!(b, LocalType::Rec { .. }) {
        let key = (a.clone(), b.clone());
        if !seen.insert(key) {
            return true;
        }
    }
    let (ua, ub) = (head(a), head(b));
    match (&*ua, &*ub) {
        (LocalType::End, LocalType::End) => true,
        (
            LocalType::Select { peer: p1, branches: b1 },
            LocalType::Select { peer: p2, branches: b2 },
        )
        | (
            LocalType::Branch { peer: p1, branches: b1 },
            LocalType::Branch { peer: p2, branches: b2 },
        ) => {
            if p1 != p2 || b1.len() != b2.len() {
                return false;
            }
            b1.iter().all(|(l, s1, c1)| match b2.get(l) {
                Some((s2, c2)) => sort_equiv(s1, s2, seen) && equiv_inner(c1, c2, seen),
                None => false,
            })
        }
        _ => false,
    }
}

fn sort_equiv(a: &Sort, b: &Sort, seen: &mut HashSet<(LocalType, LocalType)>) -> bool {
    match (a, b) {
        (Sort::Session(x), Sort::Session(y)) => equiv_inner(x, y, seen),
        _ => a == b,
    }
}

/// Synchronous session subtyping, decided coinductively.
///
/// `a <= b` holds when `a` offers a subset of `b`'s output labels (`Select`
/// is covariant with label subset), accepts a superset of `b`'s input
/// labels (`Branch` is covariant with label superset), payload sorts are
/// invariant for base sorts and mutual subtypes for `Session` sorts, and
/// continuations are covariant throughout.
pub fn subtype(a: &LocalType, b: &LocalType) -> bool {
    subtype_inner(a, b, &mut HashSet::new())
}

fn subtype_inner(a: &LocalType, b: &LocalType, seen: &mut HashSet<(LocalType, LocalType)>) -> bool {
    if a == b {
        return true;
    }
    if matches!(a, LocalType::Rec { .. }) || matches!(b, LocalType::Rec { .. }) {
        let key = (a.clone(), b.clone());
        if !seen.insert(key) {
            return true;
        }
    }
    let (ua, ub) = (head(a), head(b));
    match (&*ua, &*ub) {
        (LocalType::End, LocalType::End) => true,
        (
            LocalType::Select { peer: p1, branches: b1 },
            LocalType::Select { peer: p2, branches: b2 },
        ) => {
            p1 == p2
                && b1.iter().all(|(l, s1, c1)| match b2.get(l) {
                    Some((s2, c2)) => sort_compatible(s1, s2, seen) && subtype_inner(c1, c2, seen),
                    None => false,
                })
        }
        (
            LocalType::Branch { peer: p1, branches: b1 },
            LocalType::Branch { peer: p2, branches: b2 },
        ) => {
            p1 == p2
                && b2.iter().all(|(l, s2, c2)| match b1.get(l) {
                    Some((s1, c1)) => sort_compatible(s1, s2, seen) && subtype_inner(c1, c2, seen),
                    None => false,
                })
        }
        _ => false,
    }
}

/// Sort agreement: exact for base sorts, mutual subtyping for sessions.
pub fn sorts_agree(a: &Sort, b: &Sort) -> bool {
    sort_compatible(a, b, &mut HashSet::new())
}

fn sort_compatible(a: &Sort, b: &Sort, seen: &mut HashSet<(LocalType, LocalType)>) -> bool {
    match (a, b) {
        (Sort::Session(x), Sort::Session(y)) => {
            subtype_inner(x, y, seen) && subtype_inner(y, x, seen)
        }
        _ => a == b,
    }
}
