//! The subject-reduction probe: exhaustively reduces a typed system,
//! mirrors every communication on the typing context, and re-checks the
//! reduct against the reduced context. An empty failure list means
//! typability was preserved along every explored sequence.

use std::collections::VecDeque;
use std::fmt;

use serde_json::json;
use thiserror::Error;

use crate::context::TypingContext;
use crate::proc::step::{normal_form, proc_step, ProcAction};
use crate::proc::typecheck::{check_system, TypecheckOptions};
use crate::proc::Process;
use crate::semantics::{self, SemanticsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MirrorError {
    #[error("no matching context action for {0}")]
    NoMatchingCtxAction(Box<ProcAction>),
}

/// Mirrors one process action on the typing context.
///
/// A communication steps the context by the corresponding context action;
/// conditionals and recursion unfoldings are administrative and leave the
/// context unchanged, as do communications on sessions the context does
/// not track (restricted sessions). A tracked session that cannot fire
/// the action is a subject-reduction violation.
pub fn mirror_context(
    ctx: &TypingContext,
    action: &ProcAction,
) -> Result<TypingContext, MirrorError> {
    let ProcAction::Comm {
        session,
        from,
        to,
        label,
        ..
    } = action
    else {
        return Ok(ctx.clone());
    };
    if !ctx.sessions().any(|s| s == session) {
        return Ok(ctx.clone());
    }
    let matching = semantics::enabled(ctx).into_iter().find(|a| {
        a.session == *session && a.from == *from && a.to == *to && a.label == *label
    });
    match matching {
        Some(a) => Ok(semantics::step(ctx, &a).expect("enabled action steps")),
        None => Err(MirrorError::NoMatchingCtxAction(Box::new(action.clone()))),
    }
}

/// One violation found by the probe.
#[derive(Debug, Clone, PartialEq)]
pub struct SRFailure {
    /// The reduction sequence from the initial system to the violation.
    pub trace: Vec<ProcAction>,
    pub error: String,
}

impl fmt::Display for SRFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "after [{}]: {}",
            self.trace
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join("; "),
            self.error
        )
    }
}

/// Outcome of a probe run over the bounded reduction graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SRReport {
    /// Distinct configurations (process, context) explored.
    pub configurations: usize,
    /// Reduction edges explored.
    pub reductions: usize,
    pub failures: Vec<SRFailure>,
    /// True when the depth bound cut off unexplored reductions.
    pub truncated: bool,
}

impl SRReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "explored": self.configurations,
            "reductions": self.reductions,
            "failures": self.failures.iter().map(|f| json!({
                "trace": f.trace.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                "error": f.error,
            })).collect::<Vec<_>>(),
            "truncated": self.truncated,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("initial system is not well typed: {0}")]
    InitialUntyped(String),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Exhaustively explores all reduction sequences of length at most
/// `depth`, re-running the full check after every step. Requires the
/// initial system to pass [`check_system`].
pub fn sr_probe(
    p: &Process,
    ctx: &TypingContext,
    depth: usize,
    opts: &TypecheckOptions,
) -> Result<SRReport, ProbeError> {
    let initial = check_system(p, ctx, opts)?;
    if !initial.holds {
        let reason = initial
            .witness
            .map(|w| w.to_string())
            .unwrap_or_else(|| "check failed".to_string());
        return Err(ProbeError::InitialUntyped(reason));
    }

    struct Config {
        process: Process,
        ctx: TypingContext,
        trace: Vec<ProcAction>,
    }

    let mut configs = vec![Config {
        process: normal_form(p),
        ctx: ctx.clone(),
        trace: Vec::new(),
    }];
    let mut queue: VecDeque<(usize, usize)> = VecDeque::from([(0, 0)]);
    let mut reductions = 0;
    let mut failures = Vec::new();
    let mut truncated = false;

    while let Some((id, d)) = queue.pop_front() {
        let (process, cur_ctx, trace) = {
            let c = &configs[id];
            (c.process.clone(), c.ctx.clone(), c.trace.clone())
        };
        let steps = match proc_step(&process) {
            Ok(steps) => steps,
            Err(stuck) => {
                failures.push(SRFailure {
                    trace,
                    error: format!("stuck: {}", stuck),
                });
                continue;
            }
        };
        if d == depth {
            if !steps.is_empty() {
                truncated = true;
            }
            continue;
        }
        for (action, reduct) in steps {
            reductions += 1;
            let mut next_trace = trace.clone();
            next_trace.push(action.clone());
            let next_ctx = match mirror_context(&cur_ctx, &action) {
                Ok(c) => c,
                Err(e) => {
                    failures.push(SRFailure {
                        trace: next_trace,
                        error: e.to_string(),
                    });
                    continue;
                }
            };
            let verdict = check_system(&reduct, &next_ctx, opts)?;
            if !verdict.holds {
                let reason = verdict
                    .witness
                    .map(|w| w.to_string())
                    .unwrap_or_else(|| "check failed".to_string());
                failures.push(SRFailure {
                    trace: next_trace,
                    error: format!("reduct no longer checks: {}", reason),
                });
                continue;
            }
            let next_nf = normal_form(&reduct);
            let known = configs
                .iter()
                .position(|c| c.process == next_nf && c.ctx.equivalent(&next_ctx));
            if known.is_none() {
                configs.push(Config {
                    process: next_nf,
                    ctx: next_ctx,
                    trace: next_trace,
                });
                queue.push_back((configs.len() - 1, d + 1));
            }
        }
    }

    Ok(SRReport {
        configurations: configs.len(),
        reductions,
        failures,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_context, parse_process};

    fn paper_ctx() -> TypingContext {
        parse_context(
            "s[p]: q!{ m1(int). r?{ m3(bool). end }, stop. end }, \
             s[q]: p?{ m1(int). r!{ m2(str). end }, stop. r!{ quit. end } }, \
             s[r]: q?{ m2(str). p!{ m3(bool). end }, quit. end }",
        )
        .unwrap()
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
    fn mirror_follows_the_context_reduction() {
        let ctx = paper_ctx();
        let action = ProcAction::Comm {
            session: "s".into(),
            from: crate::types::Role::new("p").unwrap(),
            to: crate::types::Role::new("q").unwrap(),
            label: crate::types::Label::new("m1").unwrap(),
            value: crate::proc::Value::Int(42),
        };
        let next = mirror_context(&ctx, &action).unwrap();
        let expected = parse_context(
            "s[p]: r?{ m3(bool). end }, s[q]: r!{ m2(str). end }, \
             s[r]: q?{ m2(str). p!{ m3(bool). end }, quit. end }",
        )
        .unwrap();
        assert_eq!(next, expected);
    }

    #[test]
    fn mirror_leaves_context_alone_on_administrative_actions() {
        let ctx = paper_ctx();
        assert_eq!(
            mirror_context(&ctx, &ProcAction::IfBranch { taken: true }).unwrap(),
            ctx
        );
        assert_eq!(
            mirror_context(&ctx, &ProcAction::MuUnfold { var: "X".into() }).unwrap(),
            ctx
        );
    }

    #[test]
    fn mirror_rejects_unenabled_comms_on_tracked_sessions() {
        let ctx = parse_context("s[p]: end").unwrap();
        let action = ProcAction::Comm {
            session: "s".into(),
            from: crate::types::Role::new("p").unwrap(),
            to: crate::types::Role::new("q").unwrap(),
            label: crate::types::Label::new("m").unwrap(),
            value: crate::proc::Value::Unit,
        };
        assert!(matches!(
            mirror_context(&ctx, &action),
            Err(MirrorError::NoMatchingCtxAction(_))
        ));
    }

    #[test]
    fn probe_on_the_paper_system() {
        let report = sr_probe(&paper_system(), &paper_ctx(), 10, &opts()).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);
        // One deterministic path: m1, then m2, then m3.
        assert_eq!(report.reductions, 3);
        assert_eq!(report.configurations, 4);
        assert!(!report.truncated);
    }

    #[test]
    fn probe_on_the_stop_path() {
        let system = parse_process(
            "(if 2 < 1 then s[p][q]!m1(42). s[p][r]?{ m3(b). 0 } else s[p][q]!stop(()). 0) \
             | s[q][p]?{ m1(x). s[q][r]!m2(\"hello\"). 0, stop(y). s[q][r]!quit(()). 0 } \
             | s[r][q]?{ m2(z). s[r][p]!m3(true). 0, quit(w). 0 }",
        )
        .unwrap();
        let report = sr_probe(&system, &paper_ctx(), 10, &opts()).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);
        // if, then stop, then quit.
        assert_eq!(report.reductions, 3);
        assert!(!report.truncated);
    }

    #[test]
    fn probe_of_nil_is_trivial() {
        let report = sr_probe(&Process::Nil, &TypingContext::new(), 10, &opts()).unwrap();
        assert!(report.passed());
        assert_eq!(report.reductions, 0);
        assert_eq!(report.configurations, 1);
    }

    #[test]
    fn probe_rejects_untyped_initial_systems() {
        let p = parse_process("s[p][q]!bad(1). 0").unwrap();
        let err = sr_probe(&p, &paper_ctx(), 10, &opts()).unwrap_err();
        assert!(matches!(err, ProbeError::InitialUntyped(_)));
    }

    #[test]
    fn depth_zero_explores_nothing() {
        let report = sr_probe(&paper_system(), &paper_ctx(), 0, &opts()).unwrap();
        assert!(report.passed());
        assert_eq!(report.reductions, 0);
        assert!(report.truncated);
    }

    #[test]
    fn recursive_system_folds_back_to_itself() {
        let ctx = parse_context(
            "s[a]: rec X. b!{ l(int). X }, s[b]: rec X. a?{ l(int). X }",
        )
        .unwrap();
        let system = parse_process(
            "(mu X[s[a]: rec X. b!{ l(int). X }]. s[a][b]!l(1). X) \
             | mu Y[s[b]: rec X. a?{ l(int). X }]. s[b][a]?{ l(z). Y }",
        )
        .unwrap();
        let report = sr_probe(&system, &ctx, 12, &opts()).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);
        // The configuration graph is a finite loop, not a depth-12 tree.
        assert!(report.configurations <= 6);
        assert!(!report.failures.iter().any(|f| f.error.contains("NoMatching")));
    }
}
