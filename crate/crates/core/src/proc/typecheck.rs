//! The rely/guarantee type checker for judgements `Θ ⊢ P : Δg / Δr`.
//!
//! The guarantee context records how the process itself uses channels;
//! the rely context records how the rest of the system is expected to use
//! the remaining channels. Parallel composition splits the guarantee and
//! moves each child's sibling share into that child's rely context, and
//! restriction demands liveness of the composed contexts for the
//! restricted session.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::context::{compose, Endpoint, Judgement, ProcessEnv, TypingContext};
use crate::proc::{BranchArm, ChanRef, Expr, Process};
use crate::safety::{is_live, Verdict, Witness};
use crate::semantics::{SemConfig, SemanticsError};
use crate::types::{subtype, Label, LocalType, Sort};

/// Where the liveness side condition is enforced inside the checker.
/// The top-level check of [`check_system`] is always performed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LivenessAt {
    /// At every restriction (the default).
    #[default]
    Res,
    /// Only at the top level.
    Top,
    /// At every judgement node.
    All,
}

#[derive(Debug, Clone, Default)]
pub struct TypecheckOptions {
    pub liveness_at: LivenessAt,
    pub sem: SemConfig,
}

/// Why a typing rule failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeFailure {
    #[error("unknown endpoint {0}")]
    UnknownEndpoint(String),
    #[error("label {0} not in the channel's type")]
    LabelNotInType(Label),
    #[error("sort mismatch: expected {expected}, found {found}")]
    SortMismatch { expected: String, found: String },
    #[error("composed context is not live: {0}")]
    ContextNotLive(String),
    #[error("no valid split of the guarantee context")]
    SplitNotFound,
    #[error("channel {0} is not used up (type does not end)")]
    NotEnded(String),
    #[error("type shape mismatch: expected {expected}, found `{found}`")]
    ShapeMismatch { expected: String, found: String },
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("recursion {0} lacks a context annotation")]
    MissingAnnotation(String),
    #[error("branch does not cover labels: {}", .missing.iter().map(|l| l.name().to_string()).collect::<Vec<_>>().join(", "))]
    BranchNotCovering { missing: Vec<Label> },
    #[error("binder {0} shadows a live channel")]
    ShadowedChannel(String),
    #[error("annotation for {endpoint}: declared `{declared}` does not subsume required `{required}`")]
    AnnotationMismatch {
        endpoint: String,
        declared: String,
        required: String,
    },
    #[error("annotation endpoint {found} does not belong to session {expected}")]
    AnnotationSession { expected: String, found: String },
    #[error("endpoint {0} already bound in the contexts")]
    OverlappingEndpoint(String),
}

/// Internal context key: a concrete endpoint or a delegation binder.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum ChanKey {
    Ep(Endpoint),
    Var(String),
}

impl fmt::Display for ChanKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChanKey::Ep(e) => write!(f, "{}", e),
            ChanKey::Var(x) => f.write_str(x),
        }
    }
}

type ChanCtx = BTreeMap<ChanKey, LocalType>;

fn chan_ctx_of(ctx: &TypingContext) -> ChanCtx {
    ctx.iter()
        .map(|(e, t)| (ChanKey::Ep(e.clone()), t.clone()))
        .collect()
}

/// The concrete (endpoint-keyed) part of an internal context; delegation
/// binders have no session identity and are excluded from liveness checks.
fn concrete_part(ctx: &ChanCtx) -> TypingContext {
    let mut out = TypingContext::new();
    for (k, t) in ctx {
        if let ChanKey::Ep(e) = k {
            out.insert(e.clone(), t.clone()).expect("distinct keys");
        }
    }
    out
}

#[derive(Debug, Clone)]
struct Env {
    vals: BTreeMap<String, Sort>,
    procs: BTreeMap<String, TypingContext>,
    guarantee: ChanCtx,
    rely: ChanCtx,
}

#[derive(Debug, Clone)]
struct Failure {
    rule: &'static str,
    path: String,
    error: TypeFailure,
}

enum CheckErr {
    Fail(Failure),
    Limit(SemanticsError),
}

impl From<Failure> for CheckErr {
    fn from(f: Failure) -> Self {
        CheckErr::Fail(f)
    }
}

struct Checker<'a> {
    opts: &'a TypecheckOptions,
    states_explored: usize,
}

impl<'a> Checker<'a> {
    fn fail(rule: &'static str, path: &str, error: TypeFailure) -> CheckErr {
        CheckErr::Fail(Failure {
            rule,
            path: path.to_string(),
            error,
        })
    }

    /// The side condition: `Δg ∘ Δr` (restricted to one session, if given)
    /// must be live.
    fn live_side(
        &mut self,
        env: &Env,
        session: Option<&str>,
        rule: &'static str,
        path: &str,
    ) -> Result<(), CheckErr> {
        let g = concrete_part(&env.guarantee);
        let r = concrete_part(&env.rely);
        let combined = compose(&g, &r).map_err(|e| {
            Self::fail(rule, path, TypeFailure::OverlappingEndpoint(e.to_string()))
        })?;
        let target = match session {
            Some(s) => combined.restrict_to_session(s),
            None => combined,
        };
        let verdict = is_live(&target, &self.opts.sem).map_err(CheckErr::Limit)?;
        self.states_explored += verdict.states_explored;
        if verdict.holds {
            Ok(())
        } else {
            let reason = verdict
                .witness
                .map(|w| w.to_string())
                .unwrap_or_else(|| "not live".to_string());
            Err(Self::fail(rule, path, TypeFailure::ContextNotLive(reason)))
        }
    }

    fn check(&mut self, env: &Env, p: &Process, path: &str) -> Result<(), CheckErr> {
        if self.opts.liveness_at == LivenessAt::All {
            self.live_side(env, None, "LIVE", path)?;
        }
        match p {
            Process::Nil => self.check_nil(env, path),
            Process::Select {
                chan,
                to,
                label,
                arg,
                cont,
            } => self.check_select(env, chan, to, label, arg, cont, path),
            Process::Branch { chan, from, arms } => self.check_branch(env, chan, from, arms, path),
            Process::Par(a, b) => self.check_par(env, a, b, path),
            Process::Res { session, ann, body } => self.check_res(env, session, ann, body, path),
            Process::If {
                cond,
                then_branch,
                else_branch,
            } => self.check_if(env, cond, then_branch, else_branch, path),
            Process::Mu { var, ann, body } => self.check_mu(env, var, ann, body, path),
            Process::PVar(x) => self.check_pvar(env, x, path),
        }
    }

    fn check_nil(&mut self, env: &Env, path: &str) -> Result<(), CheckErr> {
        for (k, t) in &env.guarantee {
            if !t.is_ended() {
                return Err(Self::fail(
                    "T-NIL",
                    path,
                    TypeFailure::NotEnded(k.to_string()),
                ));
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn check_select(
        &mut self,
        env: &Env,
        chan: &ChanRef,
        to: &crate::types::Role,
        label: &Label,
        arg: &Expr,
        cont: &Process,
        path: &str,
    ) -> Result<(), CheckErr> {
        const RULE: &str = "T-SEL";
        let key = chan_key(chan);
        let ty = env
            .guarantee
            .get(&key)
            .ok_or_else(|| Self::fail(RULE, path, TypeFailure::UnknownEndpoint(key.to_string())))?;
        let LocalType::Select { peer, branches } = ty.unfold_head() else {
            return Err(Self::fail(
                RULE,
                path,
                TypeFailure::ShapeMismatch {
                    expected: format!("an internal choice toward {}", to),
                    found: ty.to_string(),
                },
            ));
        };
        if peer != *to {
            return Err(Self::fail(
                RULE,
                path,
                TypeFailure::ShapeMismatch {
                    expected: format!("an internal choice toward {}", to),
                    found: ty.to_string(),
                },
            ));
        }
        let Some((declared, next)) = branches.get(label) else {
            return Err(Self::fail(
                RULE,
                path,
                TypeFailure::LabelNotInType(label.clone()),
            ));
        };
        let mut env2 = env.clone();
        match declared {
            Sort::Session(expected) => {
                // Delegation: the argument must be a channel whose type is
                // interchangeable with the declared payload type; it is
                // consumed from the guarantee and travels in the message.
                let arg_key = match arg {
                    Expr::Chan(e) => ChanKey::Ep(e.clone()),
                    Expr::Var(x) if env.guarantee.contains_key(&ChanKey::Var(x.clone())) => {
                        ChanKey::Var(x.clone())
                    }
                    other => {
                        let found = self
                            .sort_of_expr(env, other)
                            .map(|s| s.to_string())
                            .unwrap_or_else(|_| other.to_string());
                        return Err(Self::fail(
                            RULE,
                            path,
                            TypeFailure::SortMismatch {
                                expected: declared.to_string(),
                                found,
                            },
                        ));
                    }
                };
                let actual = env.guarantee.get(&arg_key).ok_or_else(|| {
                    Self::fail(RULE, path, TypeFailure::UnknownEndpoint(arg_key.to_string()))
                })?;
                if !(subtype(actual, expected) && subtype(expected, actual)) {
                    return Err(Self::fail(
                        RULE,
                        path,
                        TypeFailure::SortMismatch {
                            expected: declared.to_string(),
                            found: format!("<{}>", actual),
                        },
                    ));
                }
                env2.guarantee.remove(&arg_key);
            }
            base => {
                let actual = self
                    .sort_of_expr(env, arg)
                    .map_err(|e| Self::fail(RULE, path, e))?;
                if actual != *base {
                    return Err(Self::fail(
                        RULE,
                        path,
                        TypeFailure::SortMismatch {
                            expected: base.to_string(),
                            found: actual.to_string(),
                        },
                    ));
                }
            }
        }
        env2.guarantee.insert(key, next.clone());
        let inner = format!("{}/!{}", path, label);
        self.check(&env2, cont, &inner)
    }

    fn check_branch(
        &mut self,
        env: &Env,
        chan: &ChanRef,
        from: &crate::types::Role,
        arms: &[BranchArm],
        path: &str,
    ) -> Result<(), CheckErr> {
        const RULE: &str = "T-BRA";
        let key = chan_key(chan);
        let ty = env
            .guarantee
            .get(&key)
            .ok_or_else(|| Self::fail(RULE, path, TypeFailure::UnknownEndpoint(key.to_string())))?;
        let LocalType::Branch { peer, branches } = ty.unfold_head() else {
            return Err(Self::fail(
                RULE,
                path,
                TypeFailure::ShapeMismatch {
                    expected: format!("an external choice from {}", from),
                    found: ty.to_string(),
                },
            ));
        };
        if peer != *from {
            return Err(Self::fail(
                RULE,
                path,
                TypeFailure::ShapeMismatch {
                    expected: format!("an external choice from {}", from),
                    found: ty.to_string(),
                },
            ));
        }
        let missing: Vec<Label> = branches
            .labels()
            .filter(|l| !arms.iter().any(|a| a.label == **l))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Self::fail(
                RULE,
                path,
                TypeFailure::BranchNotCovering { missing },
            ));
        }
        for arm in arms {
            let Some((sort, next)) = branches.get(&arm.label) else {
                return Err(Self::fail(
                    RULE,
                    path,
                    TypeFailure::LabelNotInType(arm.label.clone()),
                ));
            };
            let mut env2 = env.clone();
            env2.guarantee.insert(key.clone(), next.clone());
            match sort {
                Sort::Session(payload) => {
                    let var_key = ChanKey::Var(arm.binder.clone());
                    if env2.guarantee.contains_key(&var_key) {
                        return Err(Self::fail(
                            RULE,
                            path,
                            TypeFailure::ShadowedChannel(arm.binder.clone()),
                        ));
                    }
                    env2.vals.remove(&arm.binder);
                    env2.guarantee.insert(var_key, (**payload).clone());
                }
                base => {
                    if env2
                        .guarantee
                        .contains_key(&ChanKey::Var(arm.binder.clone()))
                    {
                        return Err(Self::fail(
                            RULE,
                            path,
                            TypeFailure::ShadowedChannel(arm.binder.clone()),
                        ));
                    }
                    env2.vals.insert(arm.binder.clone(), base.clone());
                }
            }
            let inner = format!("{}/?{}", path, arm.label);
            self.check(&env2, &arm.body, &inner)?;
        }
        Ok(())
    }

    fn check_par(
        &mut self,
        env: &Env,
        left: &Process,
        right: &Process,
        path: &str,
    ) -> Result<(), CheckErr> {
        const RULE: &str = "T-PAR";
        let used_left = used_chan_keys(left, &env.procs);
        let used_right = used_chan_keys(right, &env.procs);

        let keys: Vec<ChanKey> = env.guarantee.keys().cloned().collect();
        let mut forced_left = Vec::new();
        let mut forced_right = Vec::new();
        let mut rest = Vec::new();
        for k in &keys {
            let l = used_left.contains(k);
            let r = used_right.contains(k);
            match (l, r) {
                (true, true) => {
                    // An endpoint cannot be owned by both children.
                    return Err(Self::fail(RULE, path, TypeFailure::SplitNotFound));
                }
                (true, false) => forced_left.push(k.clone()),
                (false, true) => forced_right.push(k.clone()),
                (false, false) => rest.push(k.clone()),
            }
        }

        let mut first_failure: Option<CheckErr> = None;
        let trials = 1usize << rest.len();
        for mask in 0..trials {
            let mut g_left: ChanCtx = BTreeMap::new();
            let mut g_right: ChanCtx = BTreeMap::new();
            for k in &forced_left {
                g_left.insert(k.clone(), env.guarantee[k].clone());
            }
            for k in &forced_right {
                g_right.insert(k.clone(), env.guarantee[k].clone());
            }
            for (i, k) in rest.iter().enumerate() {
                let target = if mask & (1 << i) == 0 {
                    &mut g_left
                } else {
                    &mut g_right
                };
                target.insert(k.clone(), env.guarantee[k].clone());
            }

            let mut rely_left = env.rely.clone();
            rely_left.extend(g_right.clone());
            let mut rely_right = env.rely.clone();
            rely_right.extend(g_left.clone());

            let env_left = Env {
                vals: env.vals.clone(),
                procs: env.procs.clone(),
                guarantee: g_left,
                rely: rely_left,
            };
            let env_right = Env {
                vals: env.vals.clone(),
                procs: env.procs.clone(),
                guarantee: g_right,
                rely: rely_right,
            };

            let attempt = self
                .check(&env_left, left, &format!("{}/par.L", path))
                .and_then(|_| self.check(&env_right, right, &format!("{}/par.R", path)));
            match attempt {
                Ok(()) => return Ok(()),
                Err(CheckErr::Limit(e)) => return Err(CheckErr::Limit(e)),
                Err(fail) => {
                    if first_failure.is_none() {
                        first_failure = Some(fail);
                    }
                }
            }
        }
        if trials == 1 {
            // A single candidate split: its failure is the real reason.
            Err(first_failure.expect("one attempt made"))
        } else {
            Err(Self::fail(RULE, path, TypeFailure::SplitNotFound))
        }
    }

    fn check_res(
        &mut self,
        env: &Env,
        session: &str,
        ann: &Option<TypingContext>,
        body: &Process,
        path: &str,
    ) -> Result<(), CheckErr> {
        const RULE: &str = "T-RES";
        let mut env2 = env.clone();
        if let Some(ctx) = ann {
            for (e, t) in ctx.iter() {
                if e.session != session {
                    return Err(Self::fail(
                        RULE,
                        path,
                        TypeFailure::AnnotationSession {
                            expected: session.to_string(),
                            found: e.to_string(),
                        },
                    ));
                }
                let key = ChanKey::Ep(e.clone());
                if env2.guarantee.contains_key(&key) || env2.rely.contains_key(&key) {
                    return Err(Self::fail(
                        RULE,
                        path,
                        TypeFailure::OverlappingEndpoint(e.to_string()),
                    ));
                }
                env2.guarantee.insert(key, t.clone());
            }
        }
        if matches!(self.opts.liveness_at, LivenessAt::Res | LivenessAt::All) {
            self.live_side(&env2, Some(session), RULE, path)?;
        }
        let inner = format!("{}/new {}", path, session);
        self.check(&env2, body, &inner)
    }

    fn check_if(
        &mut self,
        env: &Env,
        cond: &Expr,
        then_branch: &Process,
        else_branch: &Process,
        path: &str,
    ) -> Result<(), CheckErr> {
        const RULE: &str = "T-IF";
        let sort = self
            .sort_of_expr(env, cond)
            .map_err(|e| Self::fail(RULE, path, e))?;
        if sort != Sort::Bool {
            return Err(Self::fail(
                RULE,
                path,
                TypeFailure::SortMismatch {
                    expected: Sort::Bool.to_string(),
                    found: sort.to_string(),
                },
            ));
        }
        self.check(env, then_branch, &format!("{}/if.then", path))?;
        self.check(env, else_branch, &format!("{}/if.else", path))
    }

    fn check_mu(
        &mut self,
        env: &Env,
        var: &str,
        ann: &Option<TypingContext>,
        body: &Process,
        path: &str,
    ) -> Result<(), CheckErr> {
        const RULE: &str = "T-MU";
        let Some(ann) = ann else {
            return Err(Self::fail(
                RULE,
                path,
                TypeFailure::MissingAnnotation(var.to_string()),
            ));
        };
        self.annotation_covers(env, ann, RULE, path)?;
        let mut env2 = env.clone();
        env2.procs.insert(var.to_string(), ann.clone());
        env2.guarantee = chan_ctx_of(ann);
        let inner = format!("{}/mu {}", path, var);
        self.check(&env2, body, &inner)
    }

    fn check_pvar(&mut self, env: &Env, x: &str, path: &str) -> Result<(), CheckErr> {
        const RULE: &str = "T-VAR";
        let Some(decl) = env.procs.get(x) else {
            return Err(Self::fail(
                RULE,
                path,
                TypeFailure::UnboundVariable(x.to_string()),
            ));
        };
        let decl = decl.clone();
        self.annotation_covers(env, &decl, RULE, path)
    }

    /// The declared annotation must subsume the current guarantee: every
    /// annotated endpoint's declared type is a subtype of the required
    /// one, and every other obligation has already ended.
    fn annotation_covers(
        &mut self,
        env: &Env,
        ann: &TypingContext,
        rule: &'static str,
        path: &str,
    ) -> Result<(), CheckErr> {
        for (e, _) in ann.iter() {
            if !env.guarantee.contains_key(&ChanKey::Ep(e.clone())) {
                return Err(Self::fail(
                    rule,
                    path,
                    TypeFailure::UnknownEndpoint(e.to_string()),
                ));
            }
        }
        for (k, required) in &env.guarantee {
            let declared = match k {
                ChanKey::Ep(e) => ann.get(e),
                ChanKey::Var(_) => None,
            };
            match declared {
                Some(declared) => {
                    if !subtype(declared, required) {
                        return Err(Self::fail(
                            rule,
                            path,
                            TypeFailure::AnnotationMismatch {
                                endpoint: k.to_string(),
                                declared: declared.to_string(),
                                required: required.to_string(),
                            },
                        ));
                    }
                }
                None => {
                    if !required.is_ended() {
                        return Err(Self::fail(
                            rule,
                            path,
                            TypeFailure::NotEnded(k.to_string()),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn sort_of_expr(&self, env: &Env, e: &Expr) -> Result<Sort, TypeFailure> {
        match e {
            Expr::Int(_) => Ok(Sort::Int),
            Expr::Str(_) => Ok(Sort::Str),
            Expr::Bool(_) => Ok(Sort::Bool),
            Expr::Unit => Ok(Sort::Unit),
            Expr::Var(x) => {
                if let Some(sort) = env.vals.get(x) {
                    Ok(sort.clone())
                } else if let Some(t) = env.guarantee.get(&ChanKey::Var(x.clone())) {
                    Ok(Sort::Session(Box::new(t.clone())))
                } else {
                    Err(TypeFailure::UnboundVariable(x.clone()))
                }
            }
            Expr::Chan(ep) => match env.guarantee.get(&ChanKey::Ep(ep.clone())) {
                Some(t) => Ok(Sort::Session(Box::new(t.clone()))),
                None => Err(TypeFailure::UnknownEndpoint(ep.to_string())),
            },
            Expr::Eq(a, b) | Expr::Lt(a, b) => {
                let (sa, sb) = (self.sort_of_expr(env, a)?, self.sort_of_expr(env, b)?);
                if sa == Sort::Int && sb == Sort::Int {
                    Ok(Sort::Bool)
                } else {
                    Err(TypeFailure::SortMismatch {
                        expected: "int operands".to_string(),
                        found: format!("{} and {}", sa, sb),
                    })
                }
            }
        }
    }
}

fn chan_key(c: &ChanRef) -> ChanKey {
    match c {
        ChanRef::Concrete(e) => ChanKey::Ep(e.clone()),
        ChanRef::Var(x) => ChanKey::Var(x.clone()),
    }
}

/// Channel keys a process can use: concrete endpoints and free channel
/// variables occurring anywhere, plus the declared domains of the process
/// variables it references.
fn used_chan_keys(p: &Process, procs: &BTreeMap<String, TypingContext>) -> BTreeSet<ChanKey> {
    let mut out = BTreeSet::new();
    collect_keys(
        p,
        procs,
        &mut Vec::new(),
        &mut Vec::new(),
        &mut out,
    );
    out
}

fn collect_keys(
    p: &Process,
    procs: &BTreeMap<String, TypingContext>,
    bound_vars: &mut Vec<String>,
    bound_sessions: &mut Vec<String>,
    out: &mut BTreeSet<ChanKey>,
) {
    let chan = |c: &ChanRef, bound_vars: &Vec<String>, bound_sessions: &Vec<String>, out: &mut BTreeSet<ChanKey>| match c {
        ChanRef::Concrete(e) => {
            if !bound_sessions.iter().any(|s| s == &e.session) {
                out.insert(ChanKey::Ep(e.clone()));
            }
        }
        ChanRef::Var(x) => {
            if !bound_vars.iter().any(|v| v == x) {
                out.insert(ChanKey::Var(x.clone()));
            }
        }
    };
    match p {
        Process::Nil => {}
        Process::PVar(x) => {
            if let Some(decl) = procs.get(x) {
                for (e, _) in decl.iter() {
                    if !bound_sessions.iter().any(|s| s == &e.session) {
                        out.insert(ChanKey::Ep(e.clone()));
                    }
                }
            }
        }
        Process::Select { chan: c, arg, cont, .. } => {
            chan(c, bound_vars, bound_sessions, out);
            collect_expr_keys(arg, bound_vars, bound_sessions, out);
            collect_keys(cont, procs, bound_vars, bound_sessions, out);
        }
        Process::Branch { chan: c, arms, .. } => {
            chan(c, bound_vars, bound_sessions, out);
            for arm in arms {
                bound_vars.push(arm.binder.clone());
                collect_keys(&arm.body, procs, bound_vars, bound_sessions, out);
                bound_vars.pop();
            }
        }
        Process::Par(a, b) => {
            collect_keys(a, procs, bound_vars, bound_sessions, out);
            collect_keys(b, procs, bound_vars, bound_sessions, out);
        }
        Process::Res { session, body, .. } => {
            bound_sessions.push(session.clone());
            collect_keys(body, procs, bound_vars, bound_sessions, out);
            bound_sessions.pop();
        }
        Process::If {
            cond,
            then_branch,
            else_branch,
        } => {
            collect_expr_keys(cond, bound_vars, bound_sessions, out);
            collect_keys(then_branch, procs, bound_vars, bound_sessions, out);
            collect_keys(else_branch, procs, bound_vars, bound_sessions, out);
        }
        Process::Mu { ann, body, .. } => {
            if let Some(ctx) = ann {
                for (e, _) in ctx.iter() {
                    if !bound_sessions.iter().any(|s| s == &e.session) {
                        out.insert(ChanKey::Ep(e.clone()));
                    }
                }
            }
            collect_keys(body, procs, bound_vars, bound_sessions, out);
        }
    }
}

fn collect_expr_keys(
    e: &Expr,
    bound_vars: &[String],
    bound_sessions: &[String],
    out: &mut BTreeSet<ChanKey>,
) {
    match e {
        Expr::Chan(ep) => {
            if !bound_sessions.iter().any(|s| s == &ep.session) {
                out.insert(ChanKey::Ep(ep.clone()));
            }
        }
        Expr::Var(x) => {
            if !bound_vars.iter().any(|v| v == x) {
                out.insert(ChanKey::Var(x.clone()));
            }
        }
        Expr::Eq(a, b) | Expr::Lt(a, b) => {
            collect_expr_keys(a, bound_vars, bound_sessions, out);
            collect_expr_keys(b, bound_vars, bound_sessions, out);
        }
        _ => {}
    }
}

/// Checks a rely/guarantee judgement. Type failures are reported in the
/// verdict's witness; only resource exhaustion is an error.
pub fn typecheck(
    j: &Judgement,
    opts: &TypecheckOptions,
) -> Result<Verdict, SemanticsError> {
    if let Err(e) = compose(&j.guarantee, &j.rely) {
        return Ok(Verdict::fails(
            Witness::IllTyped {
                rule: "JUDGEMENT".to_string(),
                path: String::new(),
                error: e.to_string(),
            },
            0,
        ));
    }
    let env = Env {
        vals: j.theta.vals.clone(),
        procs: j
            .theta
            .procs
            .iter()
            .map(|(k, d)| (k.clone(), d.ctx.clone()))
            .collect(),
        guarantee: chan_ctx_of(&j.guarantee),
        rely: chan_ctx_of(&j.rely),
    };
    let mut checker = Checker {
        opts,
        states_explored: 0,
    };
    match checker.check(&env, &j.process, "") {
        Ok(()) => Ok(Verdict::holds(checker.states_explored)),
        Err(CheckErr::Fail(f)) => Ok(Verdict::fails(
            Witness::IllTyped {
                rule: f.rule.to_string(),
                path: if f.path.is_empty() {
                    "/".to_string()
                } else {
                    f.path
                },
                error: f.error.to_string(),
            },
            checker.states_explored,
        )),
        Err(CheckErr::Limit(e)) => Err(e),
    }
}

/// The top-level entry point: `⊢ P : Δ / ∅` plus the global side
/// condition that `Δ` itself is live.
pub fn check_system(
    p: &Process,
    ctx: &TypingContext,
    opts: &TypecheckOptions,
) -> Result<Verdict, SemanticsError> {
    let judgement = Judgement {
        theta: ProcessEnv::new(),
        guarantee: ctx.clone(),
        rely: TypingContext::new(),
        process: p.clone(),
    };
    let typing = typecheck(&judgement, opts)?;
    if !typing.holds {
        return Ok(typing);
    }
    let live = is_live(ctx, &opts.sem)?;
    let explored = typing.states_explored + live.states_explored;
    if live.holds {
        Ok(Verdict::holds(explored))
    } else {
        Ok(Verdict {
            holds: false,
            witness: live.witness,
            states_explored: explored,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_context, parse_process};

    const S_P: &str = "q!{ m1(int). r?{ m3(bool). end }, stop. end }";
    const S_Q: &str = "p?{ m1(int). r!{ m2(str). end }, stop. r!{ quit. end } }";
    const S_R: &str = "q?{ m2(str). p!{ m3(bool). end }, quit. end }";

    fn paper_ctx() -> TypingContext {
        parse_context(&format!("s[p]: {}, s[q]: {}, s[r]: {}", S_P, S_Q, S_R)).unwrap()
    }

    fn paper_system() -> Process {
        parse_process(
            "s[p][q]!m1(42). s[p][r]?{ m3(b). 0 } \
             | s[q][p]?{ m1(x). s[q][r]!m2(\"hello\"). 0, stop(y). s[q][r]!quit(()). 0 } \
             | s[r][q]?{ m2(z). s[r][p]!m3(true). 0, quit(w). 0 }",
        )
        .unwrap()
    }

    fn opts() -> TypecheckOptions {
        TypecheckOptions::default()
    }

    #[test]
    fn nil_types_against_ended_context() {
        let v = check_system(&Process::Nil, &parse_context("s[p]: end").unwrap(), &opts())
            .unwrap();
        assert!(v.holds);
        let v = check_system(&Process::Nil, &TypingContext::new(), &opts()).unwrap();
        assert!(v.holds);
    }

    #[test]
    fn nil_fails_against_pending_context() {
        let v = check_system(
            &Process::Nil,
            &parse_context("s[p]: q!{ m. end }").unwrap(),
            &opts(),
        )
        .unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn selection_of_one_arm_via_the_wider_choice() {
        let j = Judgement::new(
            ProcessEnv::new(),
            parse_context(&format!("s[p]: {}", S_P)).unwrap(),
            parse_context(&format!("s[q]: {}, s[r]: {}", S_Q, S_R)).unwrap(),
            parse_process("s[p][q]!m1(42). s[p][r]?{ m3(b). 0 }").unwrap(),
        )
        .unwrap();
        let v = typecheck(&j, &opts()).unwrap();
        assert!(v.holds, "witness: {:?}", v.witness);
    }

    #[test]
    fn unknown_label_is_rejected() {
        let j = Judgement::new(
            ProcessEnv::new(),
            parse_context(&format!("s[p]: {}", S_P)).unwrap(),
            parse_context(&format!("s[q]: {}, s[r]: {}", S_Q, S_R)).unwrap(),
            parse_process("s[p][q]!bad(1). 0").unwrap(),
        )
        .unwrap();
        let v = typecheck(&j, &opts()).unwrap();
        assert!(!v.holds);
        match v.witness.unwrap() {
            Witness::IllTyped { rule, error, .. } => {
                assert_eq!(rule, "T-SEL");
                assert!(error.contains("bad"), "error: {}", error);
            }
            other => panic!("unexpected witness {:?}", other),
        }
    }

    #[test]
    fn argument_sorts_are_checked() {
        let j = Judgement::new(
            ProcessEnv::new(),
            parse_context("s[p]: q!{ m1(int). end }").unwrap(),
            TypingContext::new(),
            parse_process("s[p][q]!m1(\"nope\"). 0").unwrap(),
        )
        .unwrap();
        let v = typecheck(&j, &opts()).unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn the_full_paper_system_checks() {
        let v = check_system(&paper_system(), &paper_ctx(), &opts()).unwrap();
        assert!(v.holds, "witness: {:?}", v.witness);
    }

    #[test]
    fn omitting_an_endpoint_breaks_liveness() {
        let ctx = parse_context(&format!("s[p]: {}, s[q]: {}", S_P, S_Q)).unwrap();
        let system = parse_process(
            "s[p][q]!m1(42). s[p][r]?{ m3(b). 0 } \
             | s[q][p]?{ m1(x). s[q][r]!m2(\"hello\"). 0, stop(y). s[q][r]!quit(()). 0 }",
        )
        .unwrap();
        let v = check_system(&system, &ctx, &opts()).unwrap();
        assert!(!v.holds);
        assert!(matches!(v.witness, Some(Witness::Stuck { .. })));
    }

    #[test]
    fn branch_must_cover_all_type_labels() {
        let j = Judgement::new(
            ProcessEnv::new(),
            parse_context(&format!("s[q]: {}", S_Q)).unwrap(),
            parse_context(&format!("s[p]: {}, s[r]: {}", S_P, S_R)).unwrap(),
            parse_process("s[q][p]?{ m1(x). s[q][r]!m2(\"hi\"). 0 }").unwrap(),
        )
        .unwrap();
        let v = typecheck(&j, &opts()).unwrap();
        assert!(!v.holds);
        match v.witness.unwrap() {
            Witness::IllTyped { rule, error, .. } => {
                assert_eq!(rule, "T-BRA");
                assert!(error.contains("stop"));
            }
            other => panic!("unexpected witness {:?}", other),
        }
    }

    #[test]
    fn par_split_is_found_and_symmetric() {
        let ctx = parse_context(
            "s[a]: b!{ go(int). end }, s[b]: a?{ go(int). end }",
        )
        .unwrap();
        let p1 = parse_process("s[a][b]!go(1). 0 | s[b][a]?{ go(x). 0 }").unwrap();
        let p2 = parse_process("s[b][a]?{ go(x). 0 } | s[a][b]!go(1). 0").unwrap();
        assert!(check_system(&p1, &ctx, &opts()).unwrap().holds);
        assert!(check_system(&p2, &ctx, &opts()).unwrap().holds);
    }

    #[test]
    fn shared_endpoint_use_has_no_split() {
        let ctx = parse_context(
            "s[a]: b!{ go(int). b!{ go2(int). end } }, \
             s[b]: a?{ go(int). a?{ go2(int). end } }",
        )
        .unwrap();
        // Both children use s[a]: no partition of the guarantee works.
        let p = parse_process("s[a][b]!go(1). 0 | s[a][b]!go2(2). 0").unwrap();
        let v = typecheck(
            &Judgement::new(ProcessEnv::new(), ctx, TypingContext::new(), p).unwrap(),
            &opts(),
        )
        .unwrap();
        assert!(!v.holds);
        match v.witness.unwrap() {
            Witness::IllTyped { error, .. } => assert!(error.contains("split")),
            other => panic!("unexpected witness {:?}", other),
        }
    }

    #[test]
    fn recursion_requires_annotation_and_checks_with_it() {
        let ctx = parse_context(
            "s[a]: rec X. b!{ l(int). X }, s[b]: rec X. a?{ l(int). X }",
        )
        .unwrap();
        let annotated = parse_process(
            "(mu X[s[a]: rec X. b!{ l(int). X }]. s[a][b]!l(1). X) \
             | mu Y[s[b]: rec X. a?{ l(int). X }]. s[b][a]?{ l(z). Y }",
        )
        .unwrap();
        let v = check_system(&annotated, &ctx, &opts()).unwrap();
        assert!(v.holds, "witness: {:?}", v.witness);

        let unannotated = parse_process(
            "(mu X. s[a][b]!l(1). X) | mu Y. s[b][a]?{ l(z). Y }",
        )
        .unwrap();
        let v = check_system(&unannotated, &ctx, &opts()).unwrap();
        assert!(!v.holds);
    }

    #[test]
    fn conditional_arms_check_against_identical_contexts() {
        let ctx = parse_context(&format!("s[p]: {}, s[q]: {}, s[r]: {}", S_P, S_Q, S_R)).unwrap();
        let system = parse_process(
            "(if 1 < 2 then s[p][q]!m1(42). s[p][r]?{ m3(b). 0 } else s[p][q]!stop(()). 0) \
             | s[q][p]?{ m1(x). s[q][r]!m2(\"hello\"). 0, stop(y). s[q][r]!quit(()). 0 } \
             | s[r][q]?{ m2(z). s[r][p]!m3(true). 0, quit(w). 0 }",
        )
        .unwrap();
        let v = check_system(&system, &ctx, &opts()).unwrap();
        assert!(v.holds, "witness: {:?}", v.witness);
    }

    #[test]
    fn delegation_send_and_receive() {
        // a delegates its end of t to b, which then uses it toward c.
        let ctx = parse_context(
            "s[a]: b!{ del(<c!{ go(int). end }>). end }, \
             s[b]: a?{ del(<c!{ go(int). end }>). end }, \
             t[x]: c!{ go(int). end }, \
             t[c]: x?{ go(int). end }",
        )
        .unwrap();
        let system = parse_process(
            "s[a][b]!del(t[x]). 0 \
             | s[b][a]?{ del(k). k[c]!go(7). 0 } \
             | t[c][x]?{ go(v). 0 }",
        )
        .unwrap();
        let v = check_system(&system, &ctx, &opts()).unwrap();
        assert!(v.holds, "witness: {:?}", v.witness);
    }

    #[test]
    fn restricted_session_demands_liveness() {
        // The annotated restricted session deadlocks: two pending inputs.
        // The body fulfils both types, so only the side condition fails.
        let dead = parse_process(
            "(new u: u[a]: b?{ m(int). end }, u[b]: a?{ m(int). end }) \
             (u[a][b]?{ m(x). 0 } | u[b][a]?{ m(y). 0 })",
        )
        .unwrap();
        let v = check_system(&dead, &TypingContext::new(), &opts()).unwrap();
        assert!(!v.holds);
        match v.witness.unwrap() {
            Witness::IllTyped { rule, error, .. } => {
                assert_eq!(rule, "T-RES");
                assert!(error.contains("live"));
            }
            other => panic!("unexpected witness {:?}", other),
        }

        let fine = parse_process(
            "(new u: u[a]: b!{ m(int). end }, u[b]: a?{ m(int). end }) \
             (u[a][b]!m(5). 0 | u[b][a]?{ m(x). 0 })",
        )
        .unwrap();
        let v = check_system(&fine, &TypingContext::new(), &opts()).unwrap();
        assert!(v.holds, "witness: {:?}", v.witness);
    }

    #[test]
    fn theta_supplies_value_and_process_variables() {
        use crate::context::ProcVarDecl;
        use crate::proc::{ChanRef, Expr};
        use crate::types::{Label, Role, Sort};

        // A free value variable typed by Θ.
        let mut theta = ProcessEnv::new();
        theta.vals.insert("x".to_string(), Sort::Int);
        let open_select = Process::Select {
            chan: ChanRef::Concrete(crate::context::Endpoint::new(
                "s",
                Role::new("p").unwrap(),
            )),
            to: Role::new("q").unwrap(),
            label: Label::new("m").unwrap(),
            arg: Expr::Var("x".to_string()),
            cont: Box::new(Process::Nil),
        };
        let j = Judgement::new(
            theta,
            parse_context("s[p]: q!{ m(int). end }").unwrap(),
            TypingContext::new(),
            open_select,
        )
        .unwrap();
        assert!(typecheck(&j, &opts()).unwrap().holds);

        // A free process variable typed by its declared annotation.
        let mut theta = ProcessEnv::new();
        theta.procs.insert(
            "X".to_string(),
            ProcVarDecl {
                params: Vec::new(),
                ctx: parse_context("s[p]: rec X. q!{ l(int). X }").unwrap(),
            },
        );
        let j = Judgement::new(
            theta,
            parse_context("s[p]: rec X. q!{ l(int). X }").unwrap(),
            TypingContext::new(),
            Process::PVar("X".to_string()),
        )
        .unwrap();
        assert!(typecheck(&j, &opts()).unwrap().holds);
    }

    #[test]
    fn liveness_at_top_skips_res_side_conditions() {
        let dead = parse_process(
            "(new u: u[a]: b?{ m(int). end }, u[b]: a?{ m(int). end }) \
             (u[a][b]?{ m(x). 0 } | u[b][a]?{ m(y). 0 })",
        )
        .unwrap();
        let lax = TypecheckOptions {
            liveness_at: LivenessAt::Top,
            ..TypecheckOptions::default()
        };
        // The dead restricted session is no longer checked; both inputs
        // type against their annotations and the (empty) top-level
        // context is trivially live.
        let v = check_system(&dead, &TypingContext::new(), &lax).unwrap();
        assert!(v.holds, "witness: {:?}", v.witness);
        assert!(!check_system(&dead, &TypingContext::new(), &opts())
            .unwrap()
            .holds);
    }
}
