//! Typing contexts: finite maps from session endpoints `s[p]` to local
//! types, plus the rely/guarantee judgement shape used by the process
//! type checker.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::proc::Process;
use crate::types::{equiv, LocalType, Role, Sort};

/// A session endpoint `s[p]`: the channel used to play role `p` on
/// session `s`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub session: String,
    pub role: Role,
}

impl Endpoint {
    pub fn new(session: impl Into<String>, role: Role) -> Self {
        Endpoint {
            session: session.into(),
            role,
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.session, self.role)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComposeError {
    #[error("overlapping endpoint {0}")]
    OverlappingEndpoint(Endpoint),
}

/// A typing context: a finite map from endpoints to local types, iterated
/// in endpoint order (session, then role) for determinism.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypingContext(BTreeMap<Endpoint, LocalType>);

impl TypingContext {
    pub fn new() -> Self {
        TypingContext(BTreeMap::new())
    }

    pub fn from_entries(
        entries: impl IntoIterator<Item = (Endpoint, LocalType)>,
    ) -> Result<Self, ComposeError> {
        let mut ctx = TypingContext::new();
        for (e, t) in entries {
            ctx.insert(e, t)?;
        }
        Ok(ctx)
    }

    /// Adds an entry; fails on a duplicate endpoint.
    pub fn insert(&mut self, endpoint: Endpoint, ty: LocalType) -> Result<(), ComposeError> {
        if self.0.contains_key(&endpoint) {
            return Err(ComposeError::OverlappingEndpoint(endpoint));
        }
        self.0.insert(endpoint, ty);
        Ok(())
    }

    pub fn get(&self, endpoint: &Endpoint) -> Option<&LocalType> {
        self.0.get(endpoint)
    }

    pub fn contains(&self, endpoint: &Endpoint) -> bool {
        self.0.contains_key(endpoint)
    }

    pub fn remove(&mut self, endpoint: &Endpoint) -> Option<LocalType> {
        self.0.remove(endpoint)
    }

    /// Replaces the type at an existing endpoint.
    pub fn update(&mut self, endpoint: &Endpoint, ty: LocalType) {
        if let Some(slot) = self.0.get_mut(endpoint) {
            *slot = ty;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Endpoint, &LocalType)> {
        self.0.iter()
    }

    pub fn endpoints(&self) -> impl Iterator<Item = &Endpoint> {
        self.0.keys()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All session names with at least one endpoint in the context.
    pub fn sessions(&self) -> impl Iterator<Item = &str> {
        let mut last: Option<&str> = None;
        self.0.keys().filter_map(move |e| {
            if last == Some(e.session.as_str()) {
                None
            } else {
                last = Some(e.session.as_str());
                Some(e.session.as_str())
            }
        })
    }

    /// The sub-context of entries belonging to one session.
    pub fn restrict_to_session(&self, session: &str) -> TypingContext {
        TypingContext(
            self.0
                .iter()
                .filter(|(e, _)| e.session == session)
                .map(|(e, t)| (e.clone(), t.clone()))
                .collect(),
        )
    }

    /// Semantic equality: entries that unfold to `End` are ignored and the
    /// remaining entries are compared up to unfolding.
    pub fn equivalent(&self, other: &TypingContext) -> bool {
        let live = |ctx: &TypingContext| -> Vec<(Endpoint, LocalType)> {
            ctx.iter()
                .filter(|(_, t)| !t.is_ended())
                .map(|(e, t)| (e.clone(), t.clone()))
                .collect()
        };
        let (a, b) = (live(self), live(other));
        a.len() == b.len()
            && a.iter()
                .zip(b.iter())
                .all(|((e1, t1), (e2, t2))| e1 == e2 && equiv(t1, t2))
    }
}

impl fmt::Display for TypingContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, t) in self.iter() {
            if !first {
                f.write_str(", ")?;
            }
            write!(f, "{}: {}", e, t)?;
            first = false;
        }
        Ok(())
    }
}

/// Disjoint union of two contexts; the composition `Δ₁ ∘ Δ₂`.
pub fn compose(a: &TypingContext, b: &TypingContext) -> Result<TypingContext, ComposeError> {
    let mut out = a.clone();
    for (e, t) in b.iter() {
        out.insert(e.clone(), t.clone())?;
    }
    Ok(out)
}

/// Declared signature of a process variable: parameter sorts (empty in the
/// concrete syntax) and the typing-context annotation at its binder.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcVarDecl {
    pub params: Vec<Sort>,
    pub ctx: TypingContext,
}

/// The environment Θ of the typing judgement: value variables with their
/// sorts and process variables with their declared signatures. The two
/// namespaces are disjoint maps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcessEnv {
    pub vals: BTreeMap<String, Sort>,
    pub procs: BTreeMap<String, ProcVarDecl>,
}

impl ProcessEnv {
    pub fn new() -> Self {
        Self::default()
    }
}

/// A rely/guarantee typing judgement `Θ ⊢ P : Δg / Δr`.
///
/// `guarantee` describes how the process uses its own channels; `rely`
/// describes how the rest of the system is expected to use the remaining
/// channels. The two domains are disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Judgement {
    pub theta: ProcessEnv,
    pub guarantee: TypingContext,
    pub rely: TypingContext,
    pub process: Process,
}

impl Judgement {
    pub fn new(
        theta: ProcessEnv,
        guarantee: TypingContext,
        rely: TypingContext,
        process: Process,
    ) -> Result<Self, ComposeError> {
        compose(&guarantee, &rely)?;
        Ok(Judgement {
            theta,
            guarantee,
            rely,
            process,
        })
    }
}
