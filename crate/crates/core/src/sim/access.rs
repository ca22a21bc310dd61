//! The two-level access decision.

use serde::{Deserialize, Serialize};

use super::model::{FaultKind, FaultSpec, Role, RoleCapabilityMatrix};
use super::state::WorkspaceState;
use crate::classifier::{Operation, PermissionLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Allow,
    DenyScope,
    DenyRole,
}

/// Who is acting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject<'a> {
    /// An add-on acting for the user who installed it.
    Addon { installer: &'a str, addon: &'a str },
    /// A human collaborator using the host application directly.
    User(&'a str),
}

impl Subject<'_> {
    pub fn user(&self) -> &str {
        match self {
            Subject::Addon { installer, .. } => installer,
            Subject::User(u) => u,
        }
    }
}

/// Which checks are enforced for one call. Faults switch checks off.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Enforcement {
    pub scope: bool,
    pub role: bool,
    pub sharing: bool,
}

impl Enforcement {
    pub const FULL: Enforcement = Enforcement {
        scope: true,
        role: true,
        sharing: true,
    };

    pub fn for_api<'a>(faults: impl IntoIterator<Item = &'a FaultSpec>, api_id: &str) -> Enforcement {
        let mut e = Enforcement::FULL;
        for f in faults.into_iter().filter(|f| f.matches(api_id)) {
            match f.kind {
                FaultKind::SkipScopeCheck => e.scope = false,
                FaultKind::SkipRoleCheck => e.role = false,
                FaultKind::AllowSharingMutation => e.sharing = false,
            }
        }
        e
    }
}

/// May `user` see through a hidden flag on `target`? Owners always can;
/// editors can unless a protection that excludes them covers the object.
pub fn unhide_privileged(state: &WorkspaceState, user: &str, role: Role, target: &str) -> bool {
    match role {
        Role::Owner => true,
        Role::Editor => state.effective_protection(target).is_none_or(|p| p.contains(user)),
        _ => false,
    }
}

/// Fault-free decision.
pub fn check_access(
    state: &WorkspaceState,
    matrix: &RoleCapabilityMatrix,
    subject: Subject<'_>,
    label: &PermissionLabel,
    target: Option<&str>,
) -> Decision {
    check_access_with(state, matrix, subject, label, target, Enforcement::FULL)
}

/// Decision for an operation on `target`, or on the host application
/// itself when `target` is `None` (only the scope is checked then).
pub fn check_access_with(
    state: &WorkspaceState,
    matrix: &RoleCapabilityMatrix,
    subject: Subject<'_>,
    label: &PermissionLabel,
    target: Option<&str>,
    enforce: Enforcement,
) -> Decision {
    let op = label.operation;
    if let Subject::Addon { installer, addon } = subject {
        if enforce.scope && !state.grant_of(installer, addon).covers(op) {
            return Decision::DenyScope;
        }
    }
    let Some(target) = target else {
        return Decision::Allow;
    };
    if !enforce.role {
        return Decision::Allow;
    }
    let user = subject.user();
    let Some(node) = state.node(target) else {
        return Decision::DenyRole;
    };
    let Some(role) = state.role_of(user, target) else {
        return Decision::DenyRole;
    };
    if !matrix.allows(role, op, &node.kind) {
        return Decision::DenyRole;
    }
    if enforce.sharing && label.touches_sharing && op != Operation::View && role != Role::Owner {
        return Decision::DenyRole;
    }
    if state.effectively_hidden(target) && !unhide_privileged(state, user, role, target) {
        return Decision::DenyRole;
    }
    if op != Operation::View && state.effective_protection(target).is_some_and(|p| !p.contains(user)) {
        return Decision::DenyRole;
    }
    Decision::Allow
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::sim::model::ScopeGrant;
    use crate::sim::state::Template;

    fn state_with(user_grant: ScopeGrant, user: &str) -> WorkspaceState {
        let mut st = WorkspaceState::from_template(&Template::bundled(), &bundled::workspace_catalog()).unwrap();
        st.set_grant(user, "addon", user_grant);
        st
    }

    fn label(op: Operation, kind: &str) -> PermissionLabel {
        PermissionLabel {
            operation: op,
            object_kind: kind.into(),
            touches_sharing: false,
        }
    }

    const OWNER: &str = "olivia@corp.example";
    const EDITOR: &str = "eddie@corp.example";
    const VIEWER: &str = "victor@corp.example";

    fn addon(u: &str) -> Subject<'_> {
        Subject::Addon {
            installer: u,
            addon: "addon",
        }
    }

    #[test]
    fn viewer_full_grant_cannot_modify_text() {
        let st = state_with(ScopeGrant::full(), VIEWER);
        let m = RoleCapabilityMatrix::bundled();
        let d = check_access(&st, &m, addon(VIEWER), &label(Operation::Modify, "Text"), Some("doc-roadmap-text"));
        assert_eq!(d, Decision::DenyRole);
    }

    #[test]
    fn owner_read_grant_cannot_modify_body() {
        let st = state_with(ScopeGrant::read(), OWNER);
        let m = RoleCapabilityMatrix::bundled();
        let d = check_access(&st, &m, addon(OWNER), &label(Operation::Modify, "Body"), Some("doc-roadmap-body"));
        assert_eq!(d, Decision::DenyScope);
    }

    #[test]
    fn owner_views_visible_cell() {
        let m = RoleCapabilityMatrix::bundled();
        for g in ScopeGrant::ladder().into_iter().skip(1) {
            let st = state_with(g, OWNER);
            assert_eq!(
                check_access(&st, &m, addon(OWNER), &label(Operation::View, "Cell"), Some("cell-a2")),
                Decision::Allow
            );
        }
    }

    #[test]
    fn hidden_and_protected_objects() {
        let st = state_with(ScopeGrant::full(), EDITOR);
        let m = RoleCapabilityMatrix::bundled();
        // hidden cell under a range that excludes the editor
        assert_eq!(
            check_access(&st, &m, addon(EDITOR), &label(Operation::View, "Cell"), Some("cell-c2")),
            Decision::DenyRole
        );
        // protected range: view fine, edits denied
        assert_eq!(
            check_access(&st, &m, addon(EDITOR), &label(Operation::View, "Range"), Some("range-payroll")),
            Decision::Allow
        );
        assert_eq!(
            check_access(&st, &m, addon(EDITOR), &label(Operation::Modify, "Range"), Some("range-payroll")),
            Decision::DenyRole
        );
        // hidden column outside the protection: editors may see it
        assert_eq!(
            check_access(&st, &m, addon(EDITOR), &label(Operation::View, "Column"), Some("col-salary")),
            Decision::Allow
        );
    }

    #[test]
    fn sharing_mutation_is_owner_only() {
        let st = state_with(ScopeGrant::full(), EDITOR);
        let m = RoleCapabilityMatrix::bundled();
        let l = PermissionLabel {
            operation: Operation::Modify,
            object_kind: "File".into(),
            touches_sharing: true,
        };
        assert_eq!(check_access(&st, &m, addon(EDITOR), &l, Some("file-report")), Decision::DenyRole);
        let relaxed = Enforcement {
            sharing: false,
            ..Enforcement::FULL
        };
        assert_eq!(
            check_access_with(&st, &m, addon(EDITOR), &l, Some("file-report"), relaxed),
            Decision::Allow
        );
    }

    #[test]
    fn humans_skip_the_scope_check() {
        let st = state_with(ScopeGrant::none(), OWNER);
        let m = RoleCapabilityMatrix::bundled();
        let l = label(Operation::Delete, "Row");
        assert_eq!(check_access(&st, &m, Subject::User(OWNER), &l, Some("row-1")), Decision::Allow);
        assert_eq!(check_access(&st, &m, addon(OWNER), &l, Some("row-1")), Decision::DenyScope);
    }

    #[test]
    fn unknown_user_denied() {
        let st = state_with(ScopeGrant::full(), "stranger@else.example");
        let m = RoleCapabilityMatrix::bundled();
        let d = check_access(
            &st,
            &m,
            addon("stranger@else.example"),
            &label(Operation::View, "Document"),
            Some("doc-roadmap"),
        );
        assert_eq!(d, Decision::DenyRole);
    }
}
