//! Typing-context reduction semantics: synchronisations between a pending
//! output and a matching input, and the labelled transition system of all
//! contexts reachable from an initial one.

use std::collections::VecDeque;
use std::fmt;

use serde_json::json;
use thiserror::Error;

use crate::context::{Endpoint, TypingContext};
use crate::types::{equiv, sorts_agree, subtype, LocalType, Role, Sort};

/// One context reduction: on session `session`, role `from` sends label
/// `label` (carrying `payload`) to role `to`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CtxAction {
    pub session: String,
    pub from: Role,
    pub to: Role,
    pub label: crate::types::Label,
    pub payload: Sort,
}

impl fmt::Display for CtxAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}->{}: {}({})",
            self.session, self.from, self.to, self.label, self.payload
        )
    }
}

/// Exploration options for [`reachable`].
#[derive(Debug, Clone)]
pub struct SemConfig {
    /// Bound on the number of stored states.
    pub max_states: usize,
    /// Relax payload agreement at synchronisation from exact (mutual for
    /// session sorts) to one-way subtyping of the sender's sort.
    pub payload_subtyping: bool,
}

impl Default for SemConfig {
    fn default() -> Self {
        SemConfig {
            max_states: 1_000_000,
            payload_subtyping: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SemanticsError {
    #[error("action not enabled: {0}")]
    NotEnabled(CtxAction),
    #[error("state limit exceeded ({0} states)")]
    StateLimitExceeded(usize),
}

fn payload_ok(sender: &Sort, receiver: &Sort, cfg: &SemConfig) -> bool {
    if cfg.payload_subtyping {
        match (sender, receiver) {
            (Sort::Session(a), Sort::Session(b)) => subtype(a, b),
            _ => sender == receiver,
        }
    } else {
        sorts_agree(sender, receiver)
    }
}

/// All synchronisations enabled in a context, in action order.
///
/// An action exists when some endpoint `s[p]` unfolds to a `Select` toward
/// `q`, the endpoint `s[q]` is present and unfolds to a `Branch` from `p`,
/// the label is shared, and the payload sorts agree. A `Select` whose peer
/// endpoint is absent simply contributes no action.
pub fn enabled(ctx: &TypingContext) -> Vec<CtxAction> {
    enabled_with(ctx, &SemConfig::default())
}

pub fn enabled_with(ctx: &TypingContext, cfg: &SemConfig) -> Vec<CtxAction> {
    let mut actions = Vec::new();
    for (sender_ep, sender_ty) in ctx.iter() {
        let LocalType::Select { peer, branches: outs } = sender_ty.unfold_head() else {
            continue;
        };
        let receiver_ep = Endpoint::new(sender_ep.session.clone(), peer.clone());
        let Some(receiver_ty) = ctx.get(&receiver_ep) else {
            continue;
        };
        let LocalType::Branch { peer: origin, branches: ins } = receiver_ty.unfold_head() else {
            continue;
        };
        if origin != sender_ep.role {
            continue;
        }
        for (label, sort, _) in outs.iter() {
            if let Some((in_sort, _)) = ins.get(label) {
                if payload_ok(sort, in_sort, cfg) {
                    actions.push(CtxAction {
                        session: sender_ep.session.clone(),
                        from: sender_ep.role.clone(),
                        to: peer.clone(),
                        label: label.clone(),
                        payload: sort.clone(),
                    });
                }
            }
        }
    }
    actions.sort();
    actions
}

/// Fires one enabled synchronisation: the two endpoints named by the
/// action move to the continuations of the chosen label, everything else
/// is unchanged.
pub fn step(ctx: &TypingContext, action: &CtxAction) -> Result<TypingContext, SemanticsError> {
    let found = enabled(ctx).into_iter().any(|a| {
        a.session == action.session
            && a.from == action.from
            && a.to == action.to
            && a.label == action.label
            && sorts_agree(&a.payload, &action.payload)
    });
    if !found {
        return Err(SemanticsError::NotEnabled(action.clone()));
    }
    Ok(step_unchecked(ctx, action))
}

fn step_unchecked(ctx: &TypingContext, action: &CtxAction) -> TypingContext {
    let sender_ep = Endpoint::new(action.session.clone(), action.from.clone());
    let receiver_ep = Endpoint::new(action.session.clone(), action.to.clone());
    let mut next = ctx.clone();
    if let LocalType::Select { branches, .. } = ctx.get(&sender_ep).expect("sender").unfold_head()
    {
        let (_, cont) = branches.get(&action.label).expect("label");
        next.update(&sender_ep, cont.clone());
    }
    if let LocalType::Branch { branches, .. } =
        ctx.get(&receiver_ep).expect("receiver").unfold_head()
    {
        let (_, cont) = branches.get(&action.label).expect("label");
        next.update(&receiver_ep, cont.clone());
    }
    next
}

/// True iff every entry of the context unfolds to `End`.
pub fn is_final(ctx: &TypingContext) -> bool {
    ctx.iter().all(|(_, t)| t.is_ended())
}

/// Interns types by their unfolding-equivalence class, so that context
/// comparison is insensitive to folding. Each class keeps one
/// representative and its (single) head unfolding.
struct Canonicalizer {
    reps: Vec<LocalType>,
    heads: Vec<LocalType>,
    memo: std::collections::HashMap<LocalType, Option<usize>>,
}

/// A context with interned entries; ended entries are dropped.
type RepCtx = std::collections::BTreeMap<Endpoint, usize>;

impl Canonicalizer {
    fn new() -> Self {
        Canonicalizer {
            reps: Vec::new(),
            heads: Vec::new(),
            memo: std::collections::HashMap::new(),
        }
    }

    fn intern(&mut self, t: &LocalType) -> Option<usize> {
        if let Some(&slot) = self.memo.get(t) {
            return slot;
        }
        // Compare head unfoldings: equivalence is insensitive to the
        // leading unfolding, and this keeps recursive representatives
        // from being re-unfolded on every scan.
        let head = t.unfold_head();
        let slot = if matches!(head, LocalType::End) {
            None
        } else {
            match self.heads.iter().position(|h| equiv(h, &head)) {
                Some(i) => Some(i),
                None => {
                    self.reps.push(t.clone());
                    self.heads.push(head);
                    Some(self.reps.len() - 1)
                }
            }
        };
        self.memo.insert(t.clone(), slot);
        slot
    }

    fn intern_ctx(&mut self, ctx: &TypingContext) -> RepCtx {
        let mut out = RepCtx::new();
        for (e, t) in ctx.iter() {
            if let Some(id) = self.intern(t) {
                out.insert(e.clone(), id);
            }
        }
        out
    }

    fn externalize(&self, ctx: &RepCtx) -> TypingContext {
        let mut out = TypingContext::new();
        for (e, id) in ctx {
            out.insert(e.clone(), self.reps[*id].clone())
                .expect("distinct endpoints");
        }
        out
    }

    /// Enabled actions of an interned context, using the precomputed head
    /// unfoldings.
    fn enabled_ids(&self, ctx: &RepCtx, cfg: &SemConfig) -> Vec<CtxAction> {
        let mut actions = Vec::new();
        for (sender_ep, id) in ctx {
            let LocalType::Select { peer, branches: outs } = &self.heads[*id] else {
                continue;
            };
            let receiver_ep = Endpoint::new(sender_ep.session.clone(), peer.clone());
            let Some(recv_id) = ctx.get(&receiver_ep) else {
                continue;
            };
            let LocalType::Branch { peer: origin, branches: ins } = &self.heads[*recv_id] else {
                continue;
            };
            if *origin != sender_ep.role {
                continue;
            }
            for (label, sort, _) in outs.iter() {
                if let Some((in_sort, _)) = ins.get(label) {
                    if payload_ok(sort, in_sort, cfg) {
                        actions.push(CtxAction {
                            session: sender_ep.session.clone(),
                            from: sender_ep.role.clone(),
                            to: peer.clone(),
                            label: label.clone(),
                            payload: sort.clone(),
                        });
                    }
                }
            }
        }
        actions.sort();
        actions
    }

    /// Fires an action on an interned context.
    fn step_ids(&mut self, ctx: &RepCtx, action: &CtxAction) -> RepCtx {
        let sender_ep = Endpoint::new(action.session.clone(), action.from.clone());
        let receiver_ep = Endpoint::new(action.session.clone(), action.to.clone());
        let mut next = ctx.clone();
        for ep in [&sender_ep, &receiver_ep] {
            let id = ctx[ep];
            let branches = match &self.heads[id] {
                LocalType::Select { branches, .. } | LocalType::Branch { branches, .. } => {
                    branches
                }
                _ => unreachable!("enabled action addresses a choice"),
            };
            let (_, cont) = branches.get(&action.label).expect("label enabled");
            let cont = cont.clone();
            match self.intern(&cont) {
                Some(new_id) => {
                    next.insert(ep.clone(), new_id);
                }
                None => {
                    next.remove(ep);
                }
            }
        }
        next
    }
}

/// The reachable labelled transition system of a context.
///
/// States are canonical contexts. Exploration folds a successor onto an
/// ancestor of the current path when the two are equivalent (which closes
/// recursion into back-edges) and otherwise allocates a fresh state, so
/// acyclic protocols unroll into a tree.
#[derive(Debug, Clone)]
pub struct CtxLTS {
    /// Canonical contexts; indices are state ids, the initial state is 0.
    pub states: Vec<TypingContext>,
    pub initial: usize,
    pub edges: Vec<(usize, CtxAction, usize)>,
    parents: Vec<Option<(usize, CtxAction)>>,
}

impl CtxLTS {
    /// The action sequence of the tree path from the initial state.
    pub fn path_to(&self, state: usize) -> Vec<CtxAction> {
        let mut trace = Vec::new();
        let mut cur = state;
        while let Some((parent, action)) = &self.parents[cur] {
            trace.push(action.clone());
            cur = *parent;
        }
        trace.reverse();
        trace
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph lts {\n  rankdir=LR;\n");
        for (i, ctx) in self.states.iter().enumerate() {
            let label = if ctx.is_empty() {
                "(end)".to_string()
            } else {
                ctx.to_string()
            };
            out.push_str(&format!(
                "  s{} [label=\"{}\"{}];\n",
                i,
                label.replace('"', "\\\""),
                if i == self.initial { ", shape=box" } else { "" }
            ));
        }
        for (src, action, dst) in &self.edges {
            out.push_str(&format!(
                "  s{} -> s{} [label=\"{}\"];\n",
                src,
                dst,
                action.to_string().replace('"', "\\\"")
            ));
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "initial": self.initial,
            "states": self.states.iter().enumerate().map(|(i, ctx)| json!({
                "id": i,
                "context": ctx.to_string(),
            })).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|(src, action, dst)| json!({
                "src": src,
                "action": action.to_string(),
                "dst": dst,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Breadth-first closure of a context under [`step`].
pub fn reachable(ctx: &TypingContext, cfg: &SemConfig) -> Result<CtxLTS, SemanticsError> {
    let mut canon = Canonicalizer::new();
    let initial = canon.intern_ctx(ctx);
    let mut states = vec![initial];
    let mut parents: Vec<Option<(usize, CtxAction)>> = vec![None];
    let mut edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);

    while let Some(i) = queue.pop_front() {
        let here = states[i].clone();
        for action in canon.enabled_ids(&here, cfg) {
            let next = canon.step_ids(&here, &action);
            // Fold onto an equivalent ancestor if there is one.
            let mut target = None;
            let mut cursor = Some(i);
            while let Some(j) = cursor {
                if states[j] == next {
                    target = Some(j);
                    break;
                }
                cursor = parents[j].as_ref().map(|(p, _)| *p);
            }
            match target {
                Some(j) => edges.push((i, action, j)),
                None => {
                    states.push(next);
                    parents.push(Some((i, action.clone())));
                    let id = states.len() - 1;
                    edges.push((i, action, id));
                    queue.push_back(id);
                    if states.len() > cfg.max_states {
                        return Err(SemanticsError::StateLimitExceeded(cfg.max_states));
                    }
                }
            }
        }
    }

    Ok(CtxLTS {
        states: states.iter().map(|s| canon.externalize(s)).collect(),
        initial: 0,
        edges,
        parents,
    })
}
