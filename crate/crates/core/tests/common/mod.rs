//! Seeded generators and independent oracles shared by the integration
//! suites. Everything here is deterministic in the seed.

#![allow(dead_code)]

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use mpst_core::context::TypingContext;
use mpst_core::proc::{BranchArm, ChanRef, Expr, Process};
use mpst_core::semantics::{reachable, CtxLTS, SemConfig, SemanticsError};
use mpst_core::types::{Branches, GlobalType, Label, LocalType, Role, Sort};
use mpst_core::Endpoint;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn role(name: &str) -> Role {
    Role::new(name).unwrap()
}

pub fn label(name: &str) -> Label {
    Label::new(name).unwrap()
}

const ROLE_POOL: [&str; 4] = ["a", "b", "c", "d"];
const LABEL_POOL: [&str; 6] = ["l1", "l2", "l3", "go", "stop", "ack"];

#[derive(Clone, Copy)]
pub struct GlobalGenCfg {
    pub max_roles: usize,
    pub max_branches: usize,
    pub max_depth: usize,
    pub allow_rec: bool,
    pub session_payloads: bool,
}

impl Default for GlobalGenCfg {
    fn default() -> Self {
        GlobalGenCfg {
            max_roles: 4,
            max_branches: 3,
            max_depth: 5,
            allow_rec: true,
            session_payloads: false,
        }
    }
}

fn gen_sort(rng: &mut ChaCha8Rng, session_payloads: bool) -> Sort {
    if session_payloads && rng.gen_bool(0.08) {
        // A small closed payload type; inert for the reduction semantics.
        let peer = role(ROLE_POOL[rng.gen_range(0..ROLE_POOL.len())]);
        let l = label(LABEL_POOL[rng.gen_range(0..LABEL_POOL.len())]);
        let branches = Branches::new(vec![(l, Sort::Int, LocalType::End)]).unwrap();
        let t = if rng.gen_bool(0.5) {
            LocalType::Select { peer, branches }
        } else {
            LocalType::Branch { peer, branches }
        };
        return Sort::Session(Box::new(t));
    }
    match rng.gen_range(0..4) {
        0 => Sort::Int,
        1 => Sort::Str,
        2 => Sort::Bool,
        _ => Sort::Unit,
    }
}

fn distinct_labels(rng: &mut ChaCha8Rng, n: usize) -> Vec<Label> {
    let mut pool: Vec<&str> = LABEL_POOL.to_vec();
    pool.shuffle(rng);
    pool.into_iter().take(n).map(label).collect()
}

fn gen_global_inner(
    rng: &mut ChaCha8Rng,
    cfg: &GlobalGenCfg,
    roles: &[Role],
    depth: usize,
    rec_var: Option<&str>,
) -> GlobalType {
    let stop_p = match depth {
        0 => 1.0,
        1 => 0.45,
        _ => 0.18,
    };
    if rng.gen_bool(stop_p) {
        if let Some(var) = rec_var {
            if rng.gen_bool(0.6) {
                return GlobalType::Var(var.to_string());
            }
        }
        return GlobalType::End;
    }
    let from = roles[rng.gen_range(0..roles.len())].clone();
    let to = loop {
        let r = roles[rng.gen_range(0..roles.len())].clone();
        if r != from {
            break r;
        }
    };
    let n = rng.gen_range(1..=cfg.max_branches.min(3));
    let labels = distinct_labels(rng, n);
    let items = labels
        .into_iter()
        .map(|l| {
            let sort = gen_sort(rng, cfg.session_payloads);
            let cont = gen_global_inner(rng, cfg, roles, depth - 1, rec_var);
            (l, sort, cont)
        })
        .collect();
    GlobalType::comm(from, to, Branches::new(items).unwrap()).unwrap()
}

/// A random closed, well-formed global type within the configured bounds
/// (at most one recursion binder, placed at the root).
pub fn gen_global(rng: &mut ChaCha8Rng, cfg: &GlobalGenCfg) -> GlobalType {
    let n_roles = rng.gen_range(2..=cfg.max_roles.max(2).min(ROLE_POOL.len()));
    let roles: Vec<Role> = ROLE_POOL[..n_roles].iter().map(|r| role(r)).collect();
    let depth = rng.gen_range(1..=cfg.max_depth.max(1));
    let g = if cfg.allow_rec && rng.gen_bool(0.35) {
        // Recursion at the root; the body's head must be a communication
        // so that every variable occurrence is guarded.
        match gen_global_inner(rng, cfg, &roles, depth.max(1), Some("X")) {
            body @ GlobalType::Comm { .. } => GlobalType::Rec {
                var: "X".to_string(),
                body: Box::new(body),
            },
            _ => gen_global_inner(rng, cfg, &roles, depth, None),
        }
    } else {
        gen_global_inner(rng, cfg, &roles, depth, None)
    };
    g.validate().expect("generated global type is well-formed");
    g
}

/// A random closed local type (used for subtyping and random contexts).
pub fn gen_local(rng: &mut ChaCha8Rng, depth: usize, rec_var: Option<&str>) -> LocalType {
    let stop_p = match depth {
        0 => 1.0,
        1 => 0.4,
        _ => 0.15,
    };
    if rng.gen_bool(stop_p) {
        if let Some(var) = rec_var {
            if rng.gen_bool(0.5) {
                return LocalType::Var(var.to_string());
            }
        }
        return LocalType::End;
    }
    if rec_var.is_none() && rng.gen_bool(0.2) {
        let body = loop {
            let b = gen_local(rng, depth.saturating_sub(1).max(1), Some("X"));
            if matches!(b, LocalType::Select { .. } | LocalType::Branch { .. }) {
                break b;
            }
        };
        return LocalType::Rec {
            var: "X".to_string(),
            body: Box::new(body),
        };
    }
    let peer = role(ROLE_POOL[rng.gen_range(0..ROLE_POOL.len())]);
    let n = rng.gen_range(1..=3);
    let items = distinct_labels(rng, n)
        .into_iter()
        .map(|l| {
            let sort = gen_sort(rng, false);
            (l, sort, gen_local(rng, depth - 1, rec_var))
        })
        .collect();
    let branches = Branches::new(items).unwrap();
    if rng.gen_bool(0.5) {
        LocalType::Select { peer, branches }
    } else {
        LocalType::Branch { peer, branches }
    }
}

/// A random typing context over 2–4 endpoints of one session; no
/// liveness guarantees whatsoever.
pub fn gen_context(rng: &mut ChaCha8Rng, depth: usize) -> TypingContext {
    let n = rng.gen_range(2..=4);
    let mut ctx = TypingContext::new();
    for name in ROLE_POOL.iter().take(n) {
        let t = gen_local(rng, depth, None);
        t.validate().expect("generated local type is well-formed");
        ctx.insert(Endpoint::new("s", role(name)), t).unwrap();
    }
    ctx
}

fn literal_of(sort: &Sort, rng: &mut ChaCha8Rng) -> Expr {
    match sort {
        Sort::Int => Expr::Int(rng.gen_range(0..100)),
        Sort::Str => Expr::Str("msg".to_string()),
        Sort::Bool => Expr::Bool(rng.gen_bool(0.5)),
        Sort::Unit => Expr::Unit,
        Sort::Session(_) => panic!("no literals of session sort"),
    }
}

/// Builds a process implementing one role's local type: selections pick a
/// random label (occasionally via a conditional over two labels), inputs
/// cover every branch, recursion carries its context annotation.
pub fn synth_process(
    rng: &mut ChaCha8Rng,
    session: &str,
    who: &Role,
    local: &LocalType,
) -> Process {
    let mut counter = 0usize;
    synth(rng, session, who, local, &mut counter)
}

fn synth(
    rng: &mut ChaCha8Rng,
    session: &str,
    who: &Role,
    local: &LocalType,
    counter: &mut usize,
) -> Process {
    let chan = || ChanRef::Concrete(Endpoint::new(session, who.clone()));
    match local {
        LocalType::End => Process::Nil,
        LocalType::Var(x) => Process::PVar(x.clone()),
        LocalType::Rec { var, body } => {
            let mut ann = TypingContext::new();
            ann.insert(Endpoint::new(session, who.clone()), local.clone())
                .unwrap();
            Process::Mu {
                var: var.clone(),
                ann: Some(ann),
                body: Box::new(synth(rng, session, who, body, counter)),
            }
        }
        LocalType::Select { peer, branches } => {
            let items: Vec<_> = branches.iter().collect();
            let pick = |rng: &mut ChaCha8Rng, idx: usize, counter: &mut usize| {
                let (l, sort, cont) = items[idx];
                Process::Select {
                    chan: chan(),
                    to: peer.clone(),
                    label: l.clone(),
                    arg: literal_of(sort, rng),
                    cont: Box::new(synth(rng, session, who, cont, counter)),
                }
            };
            if items.len() >= 2 && rng.gen_bool(0.25) {
                // A conditional choosing between two arms of the same
                // internal choice; both must check against one context.
                let i = rng.gen_range(0..items.len());
                let j = loop {
                    let j = rng.gen_range(0..items.len());
                    if j != i {
                        break j;
                    }
                };
                let (x, y) = (rng.gen_range(0..10i64), rng.gen_range(0..10i64));
                Process::If {
                    cond: Expr::Lt(Box::new(Expr::Int(x)), Box::new(Expr::Int(y))),
                    then_branch: Box::new(pick(rng, i, counter)),
                    else_branch: Box::new(pick(rng, j, counter)),
                }
            } else {
                let i = rng.gen_range(0..items.len());
                pick(rng, i, counter)
            }
        }
        LocalType::Branch { peer, branches } => {
            let arms = branches
                .iter()
                .map(|(l, _sort, cont)| {
                    *counter += 1;
                    BranchArm {
                        label: l.clone(),
                        binder: format!("v{}", counter),
                        body: synth(rng, session, who, cont, counter),
                    }
                })
                .collect();
            Process::Branch {
                chan: chan(),
                from: peer.clone(),
                arms,
            }
        }
    }
}

/// A whole system for a projected context: one synthesized process per
/// endpoint, in parallel.
pub fn synth_system(rng: &mut ChaCha8Rng, ctx: &TypingContext) -> Process {
    let mut parts: Vec<Process> = ctx
        .iter()
        .map(|(e, t)| synth_process(rng, &e.session, &e.role, t))
        .collect();
    match parts.len() {
        0 => Process::Nil,
        _ => {
            let first = parts.remove(0);
            parts.into_iter().fold(first, Process::par)
        }
    }
}

/// Independent liveness oracle: for every state and every pending
/// endpoint, search for a reachable edge firing that endpoint by a fresh
/// forward breadth-first search over the LTS.
pub fn naive_is_live(ctx: &TypingContext, cfg: &SemConfig) -> Result<bool, SemanticsError> {
    let lts = reachable(ctx, cfg)?;
    Ok(naive_is_live_on(&lts))
}

pub fn naive_is_live_on(lts: &CtxLTS) -> bool {
    let n = lts.states.len();
    let mut fwd: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (idx, (src, _, dst)) in lts.edges.iter().enumerate() {
        fwd[*src].push((idx, *dst));
    }
    for (id, state) in lts.states.iter().enumerate() {
        for endpoint in state.endpoints() {
            // Fresh BFS from this state looking for an edge that fires
            // this endpoint.
            let mut seen = vec![false; n];
            let mut queue = std::collections::VecDeque::from([id]);
            seen[id] = true;
            let mut found = false;
            'search: while let Some(s) = queue.pop_front() {
                for &(edge_idx, dst) in &fwd[s] {
                    let action = &lts.edges[edge_idx].1;
                    if action.session == endpoint.session
                        && (action.from == endpoint.role || action.to == endpoint.role)
                    {
                        found = true;
                        break 'search;
                    }
                    if !seen[dst] {
                        seen[dst] = true;
                        queue.push_back(dst);
                    }
                }
            }
            if !found {
                return false;
            }
        }
    }
    true
}

/// Widens a local type to a strict supertype when possible: adds an
/// output label or drops one of several input labels.
pub fn widen(rng: &mut ChaCha8Rng, t: &LocalType) -> Option<LocalType> {
    match t {
        LocalType::End | LocalType::Var(_) => None,
        LocalType::Rec { var, body } => Some(LocalType::Rec {
            var: var.clone(),
            body: Box::new(widen(rng, body)?),
        }),
        LocalType::Select { peer, branches } => {
            if rng.gen_bool(0.6) {
                // Add a fresh output label.
                let unused: Vec<&str> = LABEL_POOL
                    .iter()
                    .filter(|l| !branches.contains(&label(l)))
                    .copied()
                    .collect();
                if unused.is_empty() {
                    return None;
                }
                let mut items: Vec<_> = branches
                    .iter()
                    .map(|(l, s, c)| (l.clone(), s.clone(), c.clone()))
                    .collect();
                items.push((
                    label(unused[rng.gen_range(0..unused.len())]),
                    Sort::Unit,
                    LocalType::End,
                ));
                Some(LocalType::Select {
                    peer: peer.clone(),
                    branches: Branches::new(items).unwrap(),
                })
            } else {
                // Widen one continuation.
                let idx = rng.gen_range(0..branches.len());
                let mut items: Vec<_> = branches
                    .iter()
                    .map(|(l, s, c)| (l.clone(), s.clone(), c.clone()))
                    .collect();
                items[idx].2 = widen(rng, &items[idx].2)?;
                Some(LocalType::Select {
                    peer: peer.clone(),
                    branches: Branches::new(items).unwrap(),
                })
            }
        }
        LocalType::Branch { peer, branches } => {
            if branches.len() >= 2 && rng.gen_bool(0.6) {
                // Drop one input label.
                let drop = rng.gen_range(0..branches.len());
                let items: Vec<_> = branches
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, (l, s, c))| (l.clone(), s.clone(), c.clone()))
                    .collect();
                Some(LocalType::Branch {
                    peer: peer.clone(),
                    branches: Branches::new(items).unwrap(),
                })
            } else {
                let idx = rng.gen_range(0..branches.len());
                let mut items: Vec<_> = branches
                    .iter()
                    .map(|(l, s, c)| (l.clone(), s.clone(), c.clone()))
                    .collect();
                items[idx].2 = widen(rng, &items[idx].2)?;
                Some(LocalType::Branch {
                    peer: peer.clone(),
                    branches: Branches::new(items).unwrap(),
                })
            }
        }
    }
}
