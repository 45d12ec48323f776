//! Two safety notions over typing contexts, each with machine-checkable
//! witnesses: semantic *liveness* (at every reachable context, every
//! pending endpoint can eventually fire) and classical syntactic
//! *consistency* (pairwise duality of partial projections).

use std::collections::HashSet;
use std::fmt;

use serde_json::json;
use thiserror::Error;

use crate::context::{Endpoint, TypingContext};
use crate::semantics::{reachable, CtxAction, SemConfig, SemanticsError};
use crate::types::{Branches, Label, LocalType, Role, Sort};

/// Result of a safety check: either the property holds, or it fails with
/// a replayable witness.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub holds: bool,
    pub witness: Option<Witness>,
    /// States explored by semantic checks; 0 for purely syntactic ones.
    pub states_explored: usize,
}

impl Verdict {
    pub fn holds(states_explored: usize) -> Self {
        Verdict {
            holds: true,
            witness: None,
            states_explored,
        }
    }

    pub fn fails(witness: Witness, states_explored: usize) -> Self {
        Verdict {
            holds: false,
            witness: Some(witness),
            states_explored,
        }
    }

    pub fn to_json(&self, property: &str) -> serde_json::Value {
        json!({
            "property": property,
            "holds": self.holds,
            "witness": self.witness.as_ref().map(Witness::to_json),
            "states_explored": self.states_explored,
        })
    }
}

/// A counterexample. Traces replay from the initial context via
/// [`crate::semantics::step`].
#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// A reachable state in which the named endpoint is pending but no
    /// continuation of the run can ever fire it.
    Stuck {
        state: TypingContext,
        endpoint: Endpoint,
        trace: Vec<CtxAction>,
    },
    /// A reachable non-final state with no outgoing reduction.
    Deadlock {
        state: TypingContext,
        trace: Vec<CtxAction>,
    },
    /// A pair of endpoints whose partial projections fail to be dual.
    Inconsistent {
        left: Endpoint,
        right: Endpoint,
        reason: ConsistencyFailure,
    },
    /// A failed typing rule instance (produced by the process checker).
    IllTyped {
        rule: String,
        path: String,
        error: String,
    },
}

impl Witness {
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Witness::Stuck {
                state,
                endpoint,
                trace,
            } => json!({
                "kind": "stuck-endpoint",
                "state": state.to_string(),
                "endpoint": endpoint.to_string(),
                "trace": trace.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            }),
            Witness::Deadlock { state, trace } => json!({
                "kind": "deadlock",
                "state": state.to_string(),
                "trace": trace.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            }),
            Witness::Inconsistent {
                left,
                right,
                reason,
            } => json!({
                "kind": "inconsistent-pair",
                "left": left.to_string(),
                "right": right.to_string(),
                "reason": reason.to_string(),
            }),
            Witness::IllTyped { rule, path, error } => json!({
                "kind": "ill-typed",
                "rule": rule,
                "path": path,
                "error": error,
            }),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Stuck {
                state,
                endpoint,
                trace,
            } => {
                write!(f, "endpoint {} can never fire in state `{}`", endpoint, state)?;
                if trace.is_empty() {
                    write!(f, " (initial state)")
                } else {
                    write!(
                        f,
                        " reached by: {}",
                        trace
                            .iter()
                            .map(|a| a.to_string())
                            .collect::<Vec<_>>()
                            .join("; ")
                    )
                }
            }
            Witness::Deadlock { state, trace } => {
                write!(f, "deadlocked state `{}`", state)?;
                if trace.is_empty() {
                    write!(f, " (initial state)")
                } else {
                    write!(
                        f,
                        " reached by: {}",
                        trace
                            .iter()
                            .map(|a| a.to_string())
                            .collect::<Vec<_>>()
                            .join("; ")
                    )
                }
            }
            Witness::Inconsistent {
                left,
                right,
                reason,
            } => write!(f, "pair ({}, {}): {}", left, right, reason),
            Witness::IllTyped { rule, path, error } => {
                write!(f, "rule {} fails at {}: {}", rule, path, error)
            }
        }
    }
}

/// Why a pair of endpoints is inconsistent.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConsistencyFailure {
    #[error("partial projection of {endpoint} onto {onto} undefined: {reason}")]
    Undefined {
        endpoint: Endpoint,
        onto: Role,
        reason: PartialUndefined,
    },
    #[error("partial projections are not dual: `{0}` vs `{1}`")]
    NotDual(PartialLocalType, PartialLocalType),
}

/// A local type restricted to the interactions with a single peer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PartialLocalType {
    Out(Branches<PartialLocalType>),
    In(Branches<PartialLocalType>),
    Rec {
        var: String,
        body: Box<PartialLocalType>,
    },
    Var(String),
    End,
}

impl fmt::Display for PartialLocalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_branches = |f: &mut fmt::Formatter<'_>,
                              branches: &Branches<PartialLocalType>|
         -> fmt::Result {
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
        };
        match self {
            PartialLocalType::Out(b) => {
                f.write_str("!")?;
                write_branches(f, b)
            }
            PartialLocalType::In(b) => {
                f.write_str("?")?;
                write_branches(f, b)
            }
            PartialLocalType::Rec { var, body } => write!(f, "rec {}. {}", var, body),
            PartialLocalType::Var(x) => f.write_str(x),
            PartialLocalType::End => f.write_str("end"),
        }
    }
}

/// Failure of partial projection: two sibling branches project onto the
/// target peer differently, so the per-peer view is ambiguous.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("sibling branches differ at [{path}]: `{left}` vs `{right}`")]
pub struct PartialUndefined {
    pub path: String,
    pub left: PartialLocalType,
    pub right: PartialLocalType,
}

/// Restricts a local type to the actions whose peer is `onto`.
///
/// Actions with other peers are erased; when erasing a choice, all sibling
/// branches must project to syntactically identical partial types (plain
/// merge). A recursion whose body never mentions `onto` projects to `End`.
pub fn partial_project(
    s: &LocalType,
    onto: &Role,
) -> Result<PartialLocalType, PartialUndefined> {
    partial_at(s, onto, &mut Vec::new())
}

fn mentions_peer(s: &LocalType, peer: &Role) -> bool {
    match s {
        LocalType::Select { peer: p, branches } | LocalType::Branch { peer: p, branches } => {
            p == peer || branches.iter().any(|(_, _, c)| mentions_peer(c, peer))
        }
        LocalType::Rec { body, .. } => mentions_peer(body, peer),
        LocalType::Var(_) | LocalType::End => false,
    }
}

fn partial_at(
    s: &LocalType,
    onto: &Role,
    path: &mut Vec<Label>,
) -> Result<PartialLocalType, PartialUndefined> {
    match s {
        LocalType::End => Ok(PartialLocalType::End),
        LocalType::Var(x) => Ok(PartialLocalType::Var(x.clone())),
        LocalType::Rec { var, body } => {
            if mentions_peer(body, onto) {
                Ok(PartialLocalType::Rec {
                    var: var.clone(),
                    body: Box::new(partial_at(body, onto, path)?),
                })
            } else {
                Ok(PartialLocalType::End)
            }
        }
        LocalType::Select { peer, branches } | LocalType::Branch { peer, branches } => {
            if peer == onto {
                let projected = branches.try_map(|l, cont| {
                    path.push(l.clone());
                    let r = partial_at(cont, onto, path);
                    path.pop();
                    r
                })?;
                Ok(match s {
                    LocalType::Select { .. } => PartialLocalType::Out(projected),
                    _ => PartialLocalType::In(projected),
                })
            } else {
                // Erased choice: all siblings must agree.
                let mut acc: Option<PartialLocalType> = None;
                for (l, _, cont) in branches.iter() {
                    path.push(l.clone());
                    let projected = partial_at(cont, onto, path);
                    path.pop();
                    let projected = projected?;
                    match &acc {
                        None => acc = Some(projected),
                        Some(prev) => {
                            if *prev != projected {
                                return Err(PartialUndefined {
                                    path: path
                                        .iter()
                                        .map(|l| l.name().to_string())
                                        .collect::<Vec<_>>()
                                        .join("."),
                                    left: prev.clone(),
                                    right: projected,
                                });
                            }
                        }
                    }
                }
                Ok(acc.expect("non-empty branches"))
            }
        }
    }
}

fn partial_unfold_head(t: &PartialLocalType) -> PartialLocalType {
    let mut cur = t.clone();
    while let PartialLocalType::Rec { var, body } = cur.clone() {
        cur = partial_substitute(&body, &var, &cur);
    }
    cur
}

fn partial_substitute(
    t: &PartialLocalType,
    var: &str,
    with: &PartialLocalType,
) -> PartialLocalType {
    match t {
        PartialLocalType::Out(b) => {
            PartialLocalType::Out(b.map(|c| partial_substitute(c, var, with)))
        }
        PartialLocalType::In(b) => PartialLocalType::In(b.map(|c| partial_substitute(c, var, with))),
        PartialLocalType::Rec { var: v, body } => {
            if v == var {
                t.clone()
            } else {
                PartialLocalType::Rec {
                    var: v.clone(),
                    body: Box::new(partial_substitute(body, var, with)),
                }
            }
        }
        PartialLocalType::Var(x) => {
            if x == var {
                with.clone()
            } else {
                t.clone()
            }
        }
        PartialLocalType::End => PartialLocalType::End,
    }
}

/// Exact duality of two partial types: `!` against `?` with identical
/// label sets and sorts and dual continuations, `end` self-dual, decided
/// coinductively through recursion.
pub fn dual(a: &PartialLocalType, b: &PartialLocalType) -> bool {
    dual_inner(a, b, &mut HashSet::new())
}

fn dual_inner(
    a: &PartialLocalType,
    b: &PartialLocalType,
    seen: &mut HashSet<(PartialLocalType, PartialLocalType)>,
) -> bool {
    let through_rec =
        matches!(a, PartialLocalType::Rec { .. }) || matches!(b, PartialLocalType::Rec { .. });
    if through_rec && !seen.insert((a.clone(), b.clone())) {
        return true;
    }
    match (partial_unfold_head(a), partial_unfold_head(b)) {
        (PartialLocalType::End, PartialLocalType::End) => true,
        (PartialLocalType::Out(xs), PartialLocalType::In(ys))
        | (PartialLocalType::In(ys), PartialLocalType::Out(xs)) => {
            xs.len() == ys.len()
                && xs.iter().all(|(l, s, c)| match ys.get(l) {
                    Some((s2, c2)) => s == s2 && dual_inner(c, c2, seen),
                    None => false,
                })
        }
        _ => false,
    }
}

/// Classical syntactic consistency: for every session and every pair of
/// its endpoints, both partial projections are defined and dual. The
/// witness names the first failing pair in endpoint order.
pub fn is_consistent(ctx: &TypingContext) -> Verdict {
    let endpoints: Vec<&Endpoint> = ctx.endpoints().collect();
    for (i, left) in endpoints.iter().enumerate() {
        for right in endpoints.iter().skip(i + 1) {
            if left.session != right.session {
                continue;
            }
            let lp = match partial_project(ctx.get(left).unwrap(), &right.role) {
                Ok(p) => p,
                Err(reason) => {
                    return Verdict::fails(
                        Witness::Inconsistent {
                            left: (*left).clone(),
                            right: (*right).clone(),
                            reason: ConsistencyFailure::Undefined {
                                endpoint: (*left).clone(),
                                onto: right.role.clone(),
                                reason,
                            },
                        },
                        0,
                    )
                }
            };
            let rp = match partial_project(ctx.get(right).unwrap(), &left.role) {
                Ok(p) => p,
                Err(reason) => {
                    return Verdict::fails(
                        Witness::Inconsistent {
                            left: (*left).clone(),
                            right: (*right).clone(),
                            reason: ConsistencyFailure::Undefined {
                                endpoint: (*right).clone(),
                                onto: left.role.clone(),
                                reason,
                            },
                        },
                        0,
                    )
                }
            };
            if !dual(&lp, &rp) {
                return Verdict::fails(
                    Witness::Inconsistent {
                        left: (*left).clone(),
                        right: (*right).clone(),
                        reason: ConsistencyFailure::NotDual(lp, rp),
                    },
                    0,
                );
            }
        }
    }
    Verdict::holds(0)
}

/// Semantic liveness: at every reachable state, every pending endpoint has
/// some continuation of the run containing a reduction it participates in.
/// This subsumes deadlock-freedom.
///
/// Computed over the reachable LTS by one backward closure per endpoint:
/// a state is good for endpoint `e` iff it can reach (forwards) some state
/// with an outgoing edge firing `e`.
pub fn is_live(ctx: &TypingContext, cfg: &SemConfig) -> Result<Verdict, SemanticsError> {
    let lts = reachable(ctx, cfg)?;
    let n = lts.states.len();

    // Reverse adjacency once.
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (src, _, dst) in &lts.edges {
        rev[*dst].push(*src);
    }

    // Endpoints pending anywhere.
    let mut endpoints: Vec<Endpoint> = Vec::new();
    for state in &lts.states {
        for e in state.endpoints() {
            if !endpoints.contains(e) {
                endpoints.push(e.clone());
            }
        }
    }
    endpoints.sort();

    for endpoint in &endpoints {
        // Seed: states with an outgoing edge that fires this endpoint.
        let mut good = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        for (src, action, _) in &lts.edges {
            let fires = action.session == endpoint.session
                && (action.from == endpoint.role || action.to == endpoint.role);
            if fires && !good[*src] {
                good[*src] = true;
                stack.push(*src);
            }
        }
        while let Some(s) = stack.pop() {
            for &p in &rev[s] {
                if !good[p] {
                    good[p] = true;
                    stack.push(p);
                }
            }
        }
        for (id, state) in lts.states.iter().enumerate() {
            if state.contains(endpoint) && !good[id] {
                return Ok(Verdict::fails(
                    Witness::Stuck {
                        state: state.clone(),
                        endpoint: endpoint.clone(),
                        trace: lts.path_to(id),
                    },
                    n,
                ));
            }
        }
    }
    Ok(Verdict::holds(n))
}

/// Deadlock-freedom alone: every reachable state is final or can reduce.
pub fn is_deadlock_free(ctx: &TypingContext, cfg: &SemConfig) -> Result<Verdict, SemanticsError> {
    let lts = reachable(ctx, cfg)?;
    let mut has_out = vec![false; lts.states.len()];
    for (src, _, _) in &lts.edges {
        has_out[*src] = true;
    }
    for (id, state) in lts.states.iter().enumerate() {
        // Canonical states drop ended entries, so final means empty.
        if !state.is_empty() && !has_out[id] {
            return Ok(Verdict::fails(
                Witness::Deadlock {
                    state: state.clone(),
                    trace: lts.path_to(id),
                },
                lts.states.len(),
            ));
        }
    }
    Ok(Verdict::holds(lts.states.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_context, parse_local};
    use crate::types::Role;

    fn paper_ctx() -> TypingContext {
        parse_context(
            "s[p]: q!{ m1(int). r?{ m3(bool). end }, stop. end }, \
             s[q]: p?{ m1(int). r!{ m2(str). end }, stop. r!{ quit. end } }, \
             s[r]: q?{ m2(str). p!{ m3(bool). end }, quit. end }",
        )
        .unwrap()
    }

    fn cyclic_ctx() -> TypingContext {
        parse_context(
            "s[p]: r?{ c. q!{ a. end } }, \
             s[q]: p?{ a. r!{ b. end } }, \
             s[r]: q?{ b. p!{ c. end } }",
        )
        .unwrap()
    }

    fn r(name: &str) -> Role {
        Role::new(name).unwrap()
    }

    #[test]
    fn partial_projection_keeps_only_the_target_peer() {
        let t = parse_local("q!{ m(int). end }").unwrap();
        assert_eq!(
            partial_project(&t, &r("q")).unwrap().to_string(),
            "!{ m(int). end }"
        );
        assert_eq!(partial_project(&t, &r("r")).unwrap(), PartialLocalType::End);
    }

    #[test]
    fn partial_projection_undefined_on_the_inter_role_dependency() {
        let s_p = parse_local("q!{ m1(int). r?{ m3(bool). end }, stop. end }").unwrap();
        let err = partial_project(&s_p, &r("r")).unwrap_err();
        assert_eq!(err.left.to_string(), "?{ m3(bool). end }");
        assert_eq!(err.right.to_string(), "end");
    }

    #[test]
    fn duality_examples() {
        assert!(dual(&PartialLocalType::End, &PartialLocalType::End));
        let out = partial_project(&parse_local("q!{ m(int). end }").unwrap(), &r("q")).unwrap();
        let inp = partial_project(&parse_local("p?{ m(int). end }").unwrap(), &r("p")).unwrap();
        assert!(dual(&out, &inp));
        assert!(dual(&inp, &out));
        let wrong = partial_project(&parse_local("p?{ m(str). end }").unwrap(), &r("p")).unwrap();
        assert!(!dual(&out, &wrong));
    }

    #[test]
    fn duality_through_recursion() {
        let a = partial_project(&parse_local("rec X. q!{ m(int). X }").unwrap(), &r("q")).unwrap();
        let b = partial_project(&parse_local("rec X. p?{ m(int). X }").unwrap(), &r("p")).unwrap();
        assert!(dual(&a, &b));
    }

    #[test]
    fn the_three_party_choice_is_not_consistent() {
        let verdict = is_consistent(&paper_ctx());
        assert!(!verdict.holds);
        match verdict.witness.unwrap() {
            Witness::Inconsistent { left, right, .. } => {
                assert_eq!(left.to_string(), "s[p]");
                assert_eq!(right.to_string(), "s[r]");
            }
            other => panic!("unexpected witness {:?}", other),
        }
    }

    #[test]
    fn dual_pair_is_consistent() {
        let ctx = parse_context("s[p]: q!{ m(int). end }, s[q]: p?{ m(int). end }").unwrap();
        assert!(is_consistent(&ctx).holds);
    }

    #[test]
    fn cyclic_wait_is_consistent_but_not_live() {
        let ctx = cyclic_ctx();
        assert!(is_consistent(&ctx).holds);
        let live = is_live(&ctx, &SemConfig::default()).unwrap();
        assert!(!live.holds);
        let dead = is_deadlock_free(&ctx, &SemConfig::default()).unwrap();
        assert!(!dead.holds);
        match dead.witness.unwrap() {
            Witness::Deadlock { trace, .. } => assert!(trace.is_empty()),
            other => panic!("unexpected witness {:?}", other),
        }
    }

    #[test]
    fn the_three_party_choice_is_live() {
        let verdict = is_live(&paper_ctx(), &SemConfig::default()).unwrap();
        assert!(verdict.holds);
        assert_eq!(verdict.states_explored, 6);
        assert!(is_deadlock_free(&paper_ctx(), &SemConfig::default())
            .unwrap()
            .holds);
    }

    #[test]
    fn two_pending_inputs_are_not_live() {
        let ctx = parse_context("s[p]: q?{ m. end }, s[q]: p?{ m. end }").unwrap();
        let verdict = is_live(&ctx, &SemConfig::default()).unwrap();
        assert!(!verdict.holds);
        match verdict.witness.unwrap() {
            Witness::Stuck {
                endpoint, trace, ..
            } => {
                assert_eq!(endpoint.to_string(), "s[p]");
                assert!(trace.is_empty());
            }
            other => panic!("unexpected witness {:?}", other),
        }
    }

    #[test]
    fn empty_context_is_live_and_deadlock_free() {
        let ctx = TypingContext::new();
        assert!(is_live(&ctx, &SemConfig::default()).unwrap().holds);
        assert!(is_deadlock_free(&ctx, &SemConfig::default()).unwrap().holds);
        assert!(is_consistent(&ctx).holds);
    }

    #[test]
    fn open_select_is_not_live_but_vacuously_consistent() {
        let ctx = parse_context("s[p]: q!{ m. end }").unwrap();
        assert!(!is_live(&ctx, &SemConfig::default()).unwrap().holds);
        assert!(is_consistent(&ctx).holds);
    }

    #[test]
    fn stuck_witness_replays() {
        let ctx = parse_context(
            "s[p]: q!{ go. r?{ never(int). end } }, s[q]: p?{ go. end }, \
             s[r]: q?{ other. end }",
        )
        .unwrap();
        let verdict = is_live(&ctx, &SemConfig::default()).unwrap();
        assert!(!verdict.holds);
        let Some(Witness::Stuck { state, trace, .. }) = verdict.witness else {
            panic!("expected stuck witness");
        };
        let mut replayed = ctx.clone();
        for action in &trace {
            replayed = crate::semantics::step(&replayed, action).unwrap();
        }
        assert!(replayed.equivalent(&state));
    }
}
