//! Projection of a global type onto each of its roles, with the merge
//! operator that combines the views a non-participating role has of the
//! branches of a choice.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::context::{ComposeError, Endpoint, TypingContext};
use crate::types::{GlobalType, Label, LocalType, Role};

/// How the projections of sibling branches are combined for a role not
/// involved in the choice.
///
/// `Full` unions external choices with distinct labels; `Plain` requires
/// the projections to be syntactically identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeMode {
    #[default]
    Full,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MergeError {
    #[error("cannot merge `{0}` with `{1}`")]
    Unmergeable(Box<LocalType>, Box<LocalType>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectionError {
    #[error("projection of role {role} undefined at branch path [{}]: {reason}", path_text(.path))]
    Undefined {
        role: Role,
        path: Vec<Label>,
        reason: MergeError,
    },
    #[error("{0}")]
    Compose(#[from] ComposeError),
}

fn path_text(path: &[Label]) -> String {
    path.iter()
        .map(|l| l.name().to_string())
        .collect::<Vec<_>>()
        .join(".")
}

/// All roles occurring as sender or receiver anywhere in the type.
pub fn roles(g: &GlobalType) -> BTreeSet<Role> {
    let mut out = BTreeSet::new();
    collect_roles(g, &mut out);
    out
}

fn collect_roles(g: &GlobalType, out: &mut BTreeSet<Role>) {
    match g {
        GlobalType::Comm { from, to, branches } => {
            out.insert(from.clone());
            out.insert(to.clone());
            for (_, _, cont) in branches.iter() {
                collect_roles(cont, out);
            }
        }
        GlobalType::Rec { body, .. } => collect_roles(body, out),
        GlobalType::Var(_) | GlobalType::End => {}
    }
}

fn involved(g: &GlobalType, role: &Role) -> bool {
    match g {
        GlobalType::Comm { from, to, branches } => {
            from == role || to == role || branches.iter().any(|(_, _, c)| involved(c, role))
        }
        GlobalType::Rec { body, .. } => involved(body, role),
        GlobalType::Var(_) | GlobalType::End => false,
    }
}

/// Projects a closed, well-formed global type onto one role.
pub fn project(g: &GlobalType, role: &Role, mode: MergeMode) -> Result<LocalType, ProjectionError> {
    project_at(g, role, mode, &mut Vec::new())
}

fn project_at(
    g: &GlobalType,
    role: &Role,
    mode: MergeMode,
    path: &mut Vec<Label>,
) -> Result<LocalType, ProjectionError> {
    match g {
        GlobalType::Comm { from, to, branches } => {
            if role == from {
                let branches = branches.try_map(|l, cont| {
                    path.push(l.clone());
                    let r = project_at(cont, role, mode, path);
                    path.pop();
                    r
                })?;
                Ok(LocalType::Select {
                    peer: to.clone(),
                    branches,
                })
            } else if role == to {
                let branches = branches.try_map(|l, cont| {
                    path.push(l.clone());
                    let r = project_at(cont, role, mode, path);
                    path.pop();
                    r
                })?;
                Ok(LocalType::Branch {
                    peer: from.clone(),
                    branches,
                })
            } else {
                let mut acc: Option<LocalType> = None;
                for (l, _, cont) in branches.iter() {
                    path.push(l.clone());
                    let projected = project_at(cont, role, mode, path);
                    path.pop();
                    let projected = projected?;
                    acc = Some(match acc {
                        None => projected,
                        Some(prev) => {
                            merge(&prev, &projected, mode).map_err(|reason| {
                                ProjectionError::Undefined {
                                    role: role.clone(),
                                    path: path.clone(),
                                    reason,
                                }
                            })?
                        }
                    });
                }
                // Branches are non-empty, so the accumulator is set.
                Ok(acc.expect("non-empty branches"))
            }
        }
        GlobalType::Rec { var, body } => {
            if involved(body, role) {
                Ok(LocalType::Rec {
                    var: var.clone(),
                    body: Box::new(project_at(body, role, mode, path)?),
                })
            } else {
                Ok(LocalType::End)
            }
        }
        GlobalType::Var(x) => Ok(LocalType::Var(x.clone())),
        GlobalType::End => Ok(LocalType::End),
    }
}

/// Merges two local types.
///
/// Under `Full` merge, external choices toward the same peer are unioned:
/// label-disjoint branches are kept side by side, shared labels need equal
/// payload sorts and recursively merged continuations. Internal choices
/// merge only when identical. `Plain` merge requires syntactic equality.
pub fn merge(a: &LocalType, b: &LocalType, mode: MergeMode) -> Result<LocalType, MergeError> {
    let unmergeable = || MergeError::Unmergeable(Box::new(a.clone()), Box::new(b.clone()));
    if let MergeMode::Plain = mode {
        return if a == b { Ok(a.clone()) } else { Err(unmergeable()) };
    }
    match (a, b) {
        (LocalType::End, LocalType::End) => Ok(LocalType::End),
        (LocalType::Var(x), LocalType::Var(y)) if x == y => Ok(a.clone()),
        (
            LocalType::Rec { var: x, body: ba },
            LocalType::Rec { var: y, body: bb },
        ) if x == y => Ok(LocalType::Rec {
            var: x.clone(),
            body: Box::new(merge(ba, bb, mode)?),
        }),
        (LocalType::Select { .. }, LocalType::Select { .. }) => {
            if a == b {
                Ok(a.clone())
            } else {
                Err(unmergeable())
            }
        }
        (
            LocalType::Branch { peer: p1, branches: b1 },
            LocalType::Branch { peer: p2, branches: b2 },
        ) if p1 == p2 => {
            let mut items: Vec<(Label, crate::types::Sort, LocalType)> = Vec::new();
            for (l, s, c) in b1.iter() {
                match b2.get(l) {
                    Some((s2, c2)) => {
                        if s != s2 {
                            return Err(unmergeable());
                        }
                        items.push((l.clone(), s.clone(), merge(c, c2, mode)?));
                    }
                    None => items.push((l.clone(), s.clone(), c.clone())),
                }
            }
            for (l, s, c) in b2.iter() {
                if !b1.contains(l) {
                    items.push((l.clone(), s.clone(), c.clone()));
                }
            }
            Ok(LocalType::Branch {
                peer: p1.clone(),
                branches: crate::types::Branches::new(items).expect("merged branches non-empty"),
            })
        }
        _ => Err(unmergeable()),
    }
}

/// Projects a global type onto every one of its roles, producing the
/// context `{ session[r] : G↾r | r ∈ roles(G) }`.
pub fn project_all(
    g: &GlobalType,
    session: &str,
    mode: MergeMode,
) -> Result<TypingContext, ProjectionError> {
    let mut ctx = TypingContext::new();
    for role in roles(g) {
        let local = project(g, &role, mode)?;
        ctx.insert(Endpoint::new(session, role), local)
            .map_err(ProjectionError::Compose)?;
    }
    Ok(ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_global, parse_local};

    const PAPER_G: &str = "p->q{ m1(int). q->r{ m2(str). r->p{ m3(bool). end } }, \
                           stop. q->r{ quit. end } }";
    const S_P: &str = "q!{ m1(int). r?{ m3(bool). end }, stop. end }";
    const S_Q: &str = "p?{ m1(int). r!{ m2(str). end }, stop. r!{ quit. end } }";
    const S_R: &str = "q?{ m2(str). p!{ m3(bool). end }, quit. end }";

    fn r(name: &str) -> Role {
        Role::new(name).unwrap()
    }

    #[test]
    fn roles_of_examples() {
        assert!(roles(&GlobalType::End).is_empty());
        let g = parse_global(PAPER_G).unwrap();
        let rs: Vec<String> = roles(&g).iter().map(|r| r.to_string()).collect();
        assert_eq!(rs, vec!["p", "q", "r"]);
        let g = parse_global("rec X. a->b{ l. X }").unwrap();
        let rs: Vec<String> = roles(&g).iter().map(|r| r.to_string()).collect();
        assert_eq!(rs, vec!["a", "b"]);
    }

    #[test]
    fn projects_each_role_of_the_three_party_choice() {
        let g = parse_global(PAPER_G).unwrap();
        assert_eq!(
            project(&g, &r("p"), MergeMode::Full).unwrap(),
            parse_local(S_P).unwrap()
        );
        assert_eq!(
            project(&g, &r("q"), MergeMode::Full).unwrap(),
            parse_local(S_Q).unwrap()
        );
        assert_eq!(
            project(&g, &r("r"), MergeMode::Full).unwrap(),
            parse_local(S_R).unwrap()
        );
    }

    #[test]
    fn project_end_is_end() {
        assert_eq!(
            project(&GlobalType::End, &r("p"), MergeMode::Full).unwrap(),
            LocalType::End
        );
    }

    #[test]
    fn merge_produces_the_unioned_external_choice() {
        let a = parse_local("q?{ m2(str). p!{ m3(bool). end } }").unwrap();
        let b = parse_local("q?{ quit. end }").unwrap();
        assert_eq!(
            merge(&a, &b, MergeMode::Full).unwrap(),
            parse_local(S_R).unwrap()
        );
    }

    #[test]
    fn merge_end_with_end() {
        assert_eq!(
            merge(&LocalType::End, &LocalType::End, MergeMode::Full).unwrap(),
            LocalType::End
        );
    }

    #[test]
    fn merge_rejects_distinct_selects() {
        let a = parse_local("q!{ a. end }").unwrap();
        let b = parse_local("q!{ b. end }").unwrap();
        assert!(matches!(
            merge(&a, &b, MergeMode::Full),
            Err(MergeError::Unmergeable(..))
        ));
    }

    #[test]
    fn merge_is_idempotent_and_commutative_on_branches() {
        let a = parse_local("q?{ m2(str). end, quit. end }").unwrap();
        assert_eq!(merge(&a, &a, MergeMode::Full).unwrap(), a);
        let b = parse_local("q?{ stop. end }").unwrap();
        let ab = merge(&a, &b, MergeMode::Full).unwrap();
        let ba = merge(&b, &a, MergeMode::Full).unwrap();
        // Union order follows the left operand; compare as unordered maps.
        assert!(crate::types::equiv(&ab, &ba));
    }

    #[test]
    fn project_all_yields_the_full_context() {
        let g = parse_global(PAPER_G).unwrap();
        let ctx = project_all(&g, "s", MergeMode::Full).unwrap();
        let expected = crate::syntax::parse_context(&format!(
            "s[p]: {}, s[q]: {}, s[r]: {}",
            S_P, S_Q, S_R
        ))
        .unwrap();
        assert_eq!(ctx, expected);
    }

    #[test]
    fn project_all_of_end_is_empty() {
        let ctx = project_all(&GlobalType::End, "s", MergeMode::Full).unwrap();
        assert!(ctx.is_empty());
    }

    #[test]
    fn project_all_ping_pong() {
        let g = parse_global("p->q{ a. q->p{ b. end } }").unwrap();
        let ctx = project_all(&g, "s", MergeMode::Full).unwrap();
        let expected = crate::syntax::parse_context(
            "s[p]: q!{ a. q?{ b. end } }, s[q]: p?{ a. p!{ b. end } }",
        )
        .unwrap();
        assert_eq!(ctx, expected);
    }

    #[test]
    fn plain_merge_rejects_the_three_party_choice() {
        let g = parse_global(PAPER_G).unwrap();
        let err = project(&g, &r("r"), MergeMode::Plain).unwrap_err();
        assert!(matches!(err, ProjectionError::Undefined { .. }));
        // Participants of every choice still project fine.
        assert!(project(&g, &r("p"), MergeMode::Plain).is_ok());
    }

    #[test]
    fn rec_projects_to_end_for_uninvolved_roles() {
        let g = parse_global("rec X. a->b{ l. X }").unwrap();
        assert_eq!(project(&g, &r("c"), MergeMode::Full).unwrap(), LocalType::End);
        assert_eq!(
            project(&g, &r("a"), MergeMode::Full).unwrap(),
            parse_local("rec X. b!{ l. X }").unwrap()
        );
    }
}
