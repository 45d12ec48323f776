//! `mpst` — command-line front end for the session type workbench.
//!
//! Exit codes are a stable contract: 0 success/holds, 1 parse error,
//! 2 projection failure, 3 failed verdict or type error, 4 resource limit.

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use mpst_core::proc::{check_system, sr_probe, LivenessAt, ProbeError, TypecheckOptions};
use mpst_core::projection::{project, project_all, MergeMode, ProjectionError};
use mpst_core::safety::{is_consistent, is_deadlock_free, is_live, Verdict};
use mpst_core::semantics::{reachable, SemConfig, SemanticsError};
use mpst_core::syntax::{
    parse_context_named, parse_global_named, parse_process_named, pretty,
};
use mpst_core::types::Role;

const EXIT_OK: u8 = 0;
const EXIT_PARSE: u8 = 1;
const EXIT_PROJECTION: u8 = 2;
const EXIT_FAIL: u8 = 3;
const EXIT_LIMIT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "mpst",
    version,
    about = "Multiparty session types: projection, context reduction, safety checking, and process typing"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum MergeArg {
    Full,
    Plain,
}

impl From<MergeArg> for MergeMode {
    fn from(m: MergeArg) -> Self {
        match m {
            MergeArg::Full => MergeMode::Full,
            MergeArg::Plain => MergeMode::Plain,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum LivenessAtArg {
    #[default]
    Res,
    Top,
    All,
}

impl From<LivenessAtArg> for LivenessAt {
    fn from(l: LivenessAtArg) -> Self {
        match l {
            LivenessAtArg::Res => LivenessAt::Res,
            LivenessAtArg::Top => LivenessAt::Top,
            LivenessAtArg::All => LivenessAt::All,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Project a global type onto its roles.
    Project {
        /// Global type file (`-` for stdin).
        file: String,
        /// Project onto a single role instead of all of them.
        #[arg(long)]
        role: Option<String>,
        /// Session name used for the projected endpoints.
        #[arg(long, default_value = "s")]
        session: String,
        /// Merge mode for roles not involved in a choice.
        #[arg(long, value_enum, default_value = "full")]
        merge: MergeArg,
        #[arg(long)]
        json: bool,
    },
    /// Check a safety property of a typing context.
    #[command(group(
        ArgGroup::new("property")
            .required(true)
            .args(["liveness", "consistency", "deadlock"]),
    ))]
    Check {
        /// Typing context file (`-` for stdin).
        file: String,
        /// Semantic liveness over context reductions.
        #[arg(long)]
        liveness: bool,
        /// Classical syntactic consistency (pairwise duality).
        #[arg(long)]
        consistency: bool,
        /// Deadlock-freedom of the reduction system.
        #[arg(long)]
        deadlock: bool,
        #[arg(long)]
        json: bool,
        /// Also write the reachable LTS in DOT format to this file.
        #[arg(long)]
        dot: Option<PathBuf>,
        /// State bound for exploration (or env MPST_MAX_STATES).
        #[arg(long)]
        max_states: Option<usize>,
        /// Relax payload agreement at synchronisation to subtyping.
        #[arg(long)]
        payload_sub: bool,
    },
    /// Type-check a process against a guarantee (and optional rely) context.
    Typecheck {
        /// Process file (`-` for stdin).
        file: String,
        /// Guarantee typing context file.
        #[arg(long)]
        ctx: String,
        /// Rely typing context file (defaults to empty).
        #[arg(long)]
        rely: Option<String>,
        /// Where the liveness side condition is enforced.
        #[arg(long, value_enum, default_value = "res")]
        liveness_at: LivenessAtArg,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        max_states: Option<usize>,
    },
    /// Run the subject-reduction probe on a typed system.
    Sr {
        /// Process file (`-` for stdin).
        file: String,
        /// Typing context file.
        #[arg(long)]
        ctx: String,
        /// Exhaustive exploration depth.
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        max_states: Option<usize>,
    },
    /// Dump the reachable labelled transition system of a context.
    Lts {
        /// Typing context file (`-` for stdin).
        file: String,
        /// Emit DOT instead of a summary.
        #[arg(long)]
        dot: bool,
        /// Emit JSON instead of a summary.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long)]
        payload_sub: bool,
    },
}

fn read_input(path: &str) -> Result<(String, String), String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("<stdin>: {}", e))?;
        Ok(("<stdin>".to_string(), buf))
    } else {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {}", path, e))?;
        Ok((path.to_string(), text))
    }
}

fn sem_config(max_states: Option<usize>, payload_sub: bool) -> SemConfig {
    let from_env = std::env::var("MPST_MAX_STATES")
        .ok()
        .and_then(|v| v.parse().ok());
    SemConfig {
        max_states: max_states.or(from_env).unwrap_or(1_000_000),
        payload_subtyping: payload_sub,
    }
}

fn parse_fail(message: impl std::fmt::Display) -> u8 {
    eprintln!("error: {}", message);
    EXIT_PARSE
}

fn load_context(path: &str) -> Result<mpst_core::TypingContext, u8> {
    let (name, text) = read_input(path).map_err(parse_fail)?;
    parse_context_named(&name, &text).map_err(parse_fail)
}

fn verdict_exit(v: &Verdict) -> u8 {
    if v.holds {
        EXIT_OK
    } else {
        EXIT_FAIL
    }
}

fn print_verdict(property: &str, v: &Verdict, json: bool) {
    if json {
        println!("{}", v.to_json(property));
    } else if v.holds {
        println!("{}: holds ({} states explored)", property, v.states_explored);
    } else {
        let witness = v
            .witness
            .as_ref()
            .map(|w| w.to_string())
            .unwrap_or_else(|| "no witness".to_string());
        println!("{}: FAILS — {}", property, witness);
    }
}

fn semantics_exit(e: &SemanticsError) -> u8 {
    eprintln!("error: {}", e);
    match e {
        SemanticsError::StateLimitExceeded(_) => EXIT_LIMIT,
        SemanticsError::NotEnabled(_) => EXIT_FAIL,
    }
}

fn cmd_project(
    file: &str,
    role: Option<String>,
    session: &str,
    merge: MergeMode,
    json: bool,
) -> u8 {
    let (name, text) = match read_input(file) {
        Ok(x) => x,
        Err(e) => return parse_fail(e),
    };
    let global = match parse_global_named(&name, &text) {
        Ok(g) => g,
        Err(e) => return parse_fail(e),
    };
    let projection_fail = |e: &ProjectionError| -> u8 {
        eprintln!("error: {}", e);
        EXIT_PROJECTION
    };
    match role {
        Some(role_name) => {
            let role = match Role::new(&role_name) {
                Ok(r) => r,
                Err(e) => return parse_fail(e),
            };
            match project(&global, &role, merge) {
                Ok(local) => {
                    if json {
                        println!(
                            "{}",
                            serde_json::json!({
                                "session": session,
                                "entries": [{
                                    "endpoint": format!("{}[{}]", session, role),
                                    "type": pretty(&local),
                                }],
                            })
                        );
                    } else {
                        println!("{}", pretty(&local));
                    }
                    EXIT_OK
                }
                Err(e) => projection_fail(&e),
            }
        }
        None => match project_all(&global, session, merge) {
            Ok(ctx) => {
                if json {
                    println!(
                        "{}",
                        serde_json::json!({
                            "session": session,
                            "entries": ctx.iter().map(|(e, t)| serde_json::json!({
                                "endpoint": e.to_string(),
                                "type": pretty(t),
                            })).collect::<Vec<_>>(),
                        })
                    );
                } else {
                    let lines: Vec<String> = ctx
                        .iter()
                        .map(|(e, t)| format!("{}: {}", e, pretty(t)))
                        .collect();
                    println!("{}", lines.join(",\n"));
                }
                EXIT_OK
            }
            Err(e) => projection_fail(&e),
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    file: &str,
    liveness: bool,
    consistency: bool,
    json: bool,
    dot: Option<PathBuf>,
    cfg: &SemConfig,
) -> u8 {
    let ctx = match load_context(file) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(dot_path) = &dot {
        match reachable(&ctx, cfg) {
            Ok(lts) => {
                if let Err(e) = fs::write(dot_path, lts.to_dot()) {
                    eprintln!("error: {}: {}", dot_path.display(), e);
                    return EXIT_PARSE;
                }
            }
            Err(e) => return semantics_exit(&e),
        }
    }
    let (property, verdict) = if consistency {
        ("consistency", Ok(is_consistent(&ctx)))
    } else if liveness {
        ("liveness", is_live(&ctx, cfg))
    } else {
        ("deadlock-freedom", is_deadlock_free(&ctx, cfg))
    };
    match verdict {
        Ok(v) => {
            print_verdict(property, &v, json);
            verdict_exit(&v)
        }
        Err(e) => semantics_exit(&e),
    }
}

fn cmd_typecheck(
    file: &str,
    ctx_file: &str,
    rely_file: Option<String>,
    opts: &TypecheckOptions,
    json: bool,
) -> u8 {
    let (name, text) = match read_input(file) {
        Ok(x) => x,
        Err(e) => return parse_fail(e),
    };
    let process = match parse_process_named(&name, &text) {
        Ok(p) => p,
        Err(e) => return parse_fail(e),
    };
    let guarantee = match load_context(ctx_file) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let verdict = match rely_file {
        None => check_system(&process, &guarantee, opts),
        Some(rely_path) => {
            let rely = match load_context(&rely_path) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let judgement = match mpst_core::Judgement::new(
                mpst_core::ProcessEnv::new(),
                guarantee,
                rely,
                process,
            ) {
                Ok(j) => j,
                Err(e) => return parse_fail(e),
            };
            // With an explicit rely context the judgement itself is
            // checked; the live pair Δg ∘ Δr side condition applies.
            match mpst_core::proc::typecheck(&judgement, opts) {
                Ok(v) if v.holds => {
                    let combined =
                        mpst_core::compose(&judgement.guarantee, &judgement.rely).expect("disjoint");
                    is_live(&combined, &opts.sem).map(|live| {
                        if live.holds {
                            Verdict {
                                states_explored: v.states_explored + live.states_explored,
                                ..v
                            }
                        } else {
                            Verdict {
                                holds: false,
                                witness: live.witness,
                                states_explored: v.states_explored + live.states_explored,
                            }
                        }
                    })
                }
                other => other,
            }
        }
    };
    match verdict {
        Ok(v) => {
            print_verdict("typecheck", &v, json);
            verdict_exit(&v)
        }
        Err(e) => semantics_exit(&e),
    }
}

fn cmd_sr(file: &str, ctx_file: &str, depth: usize, opts: &TypecheckOptions, json: bool) -> u8 {
    let (name, text) = match read_input(file) {
        Ok(x) => x,
        Err(e) => return parse_fail(e),
    };
    let process = match parse_process_named(&name, &text) {
        Ok(p) => p,
        Err(e) => return parse_fail(e),
    };
    let ctx = match load_context(ctx_file) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match sr_probe(&process, &ctx, depth, opts) {
        Ok(report) => {
            if json {
                println!("{}", report.to_json());
            } else {
                println!(
                    "explored {} configurations, {} reductions{}",
                    report.configurations,
                    report.reductions,
                    if report.truncated {
                        " (truncated at depth bound)"
                    } else {
                        ""
                    }
                );
                if report.passed() {
                    println!("subject reduction: no failures");
                } else {
                    println!("subject reduction: {} failures", report.failures.len());
                    for f in &report.failures {
                        println!("  {}", f);
                    }
                }
            }
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(ProbeError::InitialUntyped(reason)) => {
            eprintln!("error: initial system fails the check: {}", reason);
            EXIT_FAIL
        }
        Err(ProbeError::Semantics(e)) => semantics_exit(&e),
    }
}

fn cmd_lts(file: &str, dot: bool, json: bool, cfg: &SemConfig) -> u8 {
    let ctx = match load_context(file) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match reachable(&ctx, cfg) {
        Ok(lts) => {
            if dot {
                print!("{}", lts.to_dot());
            } else if json {
                println!("{}", lts.to_json());
            } else {
                println!("{} states, {} edges", lts.states.len(), lts.edges.len());
                for (i, state) in lts.states.iter().enumerate() {
                    let marker = if i == lts.initial { "*" } else { " " };
                    let text = if state.is_empty() {
                        "(end)".to_string()
                    } else {
                        state.to_string()
                    };
                    println!("{} s{}: {}", marker, i, text);
                }
                for (src, action, dst) in &lts.edges {
                    println!("  s{} --[{}]--> s{}", src, action, dst);
                }
            }
            EXIT_OK
        }
        Err(e) => semantics_exit(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Project {
            file,
            role,
            session,
            merge,
            json,
        } => cmd_project(&file, role, &session, merge.into(), json),
        Cmd::Check {
            file,
            liveness,
            consistency,
            deadlock: _,
            json,
            dot,
            max_states,
            payload_sub,
        } => cmd_check(
            &file,
            liveness,
            consistency,
            json,
            dot,
            &sem_config(max_states, payload_sub),
        ),
        Cmd::Typecheck {
            file,
            ctx,
            rely,
            liveness_at,
            json,
            max_states,
        } => {
            let opts = TypecheckOptions {
                liveness_at: liveness_at.into(),
                sem: sem_config(max_states, false),
            };
            cmd_typecheck(&file, &ctx, rely, &opts, json)
        }
        Cmd::Sr {
            file,
            ctx,
            depth,
            json,
            max_states,
        } => {
            let opts = TypecheckOptions {
                liveness_at: LivenessAt::Res,
                sem: sem_config(max_states, false),
            };
            cmd_sr(&file, &ctx, depth, &opts, json)
        }
        Cmd::Lts {
            file,
            dot,
            json,
            max_states,
            payload_sub,
        } => cmd_lts(&file, dot, json, &sem_config(max_states, payload_sub)),
    };
    ExitCode::from(code)
}
