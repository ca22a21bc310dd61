//! Roles, OAuth scopes, the capability matrix and fault specs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::Operation;

/// A collaborator's role on a shared resource.
///
/// Ordered by capability: `Viewer < Commenter < Editor < Owner`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Viewer,
    Commenter,
    Editor,
    Owner,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Viewer, Role::Commenter, Role::Editor, Role::Owner];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Viewer => "viewer",
            Role::Commenter => "commenter",
            Role::Editor => "editor",
            Role::Owner => "owner",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Read,
    Edit,
    Delete,
}

impl Scope {
    /// Scope class an operation needs.
    pub fn required_for(op: Operation) -> Scope {
        match op {
            Operation::View => Scope::Read,
            Operation::Create | Operation::Comment | Operation::Modify => Scope::Edit,
            Operation::Delete => Scope::Delete,
        }
    }
}

/// OAuth scopes granted to an add-on. Always a rung of the lattice
/// `{} < {Read} < {Read,Edit} < {Read,Edit,Delete}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Scope>", into = "Vec<Scope>")]
pub struct ScopeGrant(BTreeSet<Scope>);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("scope set {0:?} is not on the lattice (edit needs read, delete needs edit)")]
pub struct NotALatticeRung(pub Vec<Scope>);

impl ScopeGrant {
    pub fn new(scopes: impl IntoIterator<Item = Scope>) -> Result<Self, NotALatticeRung> {
        let set: BTreeSet<Scope> = scopes.into_iter().collect();
        let ok = (!set.contains(&Scope::Edit) || set.contains(&Scope::Read))
            && (!set.contains(&Scope::Delete) || set.contains(&Scope::Edit));
        if ok {
            Ok(ScopeGrant(set))
        } else {
            Err(NotALatticeRung(set.into_iter().collect()))
        }
    }

    pub fn none() -> Self {
        ScopeGrant(BTreeSet::new())
    }

    pub fn read() -> Self {
        ScopeGrant(BTreeSet::from([Scope::Read]))
    }

    pub fn read_edit() -> Self {
        ScopeGrant(BTreeSet::from([Scope::Read, Scope::Edit]))
    }

    pub fn full() -> Self {
        ScopeGrant(BTreeSet::from([Scope::Read, Scope::Edit, Scope::Delete]))
    }

    /// Every rung, smallest first.
    pub fn ladder() -> [ScopeGrant; 4] {
        [Self::none(), Self::read(), Self::read_edit(), Self::full()]
    }

    pub fn contains(&self, scope: Scope) -> bool {
        self.0.contains(&scope)
    }

    pub fn covers(&self, op: Operation) -> bool {
        self.contains(Scope::required_for(op))
    }

    pub fn scopes(&self) -> impl Iterator<Item = Scope> + '_ {
        self.0.iter().copied()
    }
}

impl TryFrom<Vec<Scope>> for ScopeGrant {
    type Error = NotALatticeRung;

    fn try_from(v: Vec<Scope>) -> Result<Self, Self::Error> {
        ScopeGrant::new(v)
    }
}

impl From<ScopeGrant> for Vec<Scope> {
    fn from(g: ScopeGrant) -> Self {
        g.0.into_iter().collect()
    }
}

impl fmt::Display for ScopeGrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self
            .0
            .iter()
            .map(|s| match s {
                Scope::Read => "read",
                Scope::Edit => "edit",
                Scope::Delete => "delete",
            })
            .collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

/// Wildcard key for the object-kind column of the matrix.
pub const ANY_KIND: &str = "*";

/// `(role, operation, kind) -> allowed`, stored as role -> kind -> ops with
/// a `*` row per role as the default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleCapabilityMatrix {
    roles: BTreeMap<Role, BTreeMap<String, BTreeSet<Operation>>>,
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("malformed capability matrix: {0}")]
    Malformed(String),
    #[error("capability matrix has no row for role `{0}`")]
    MissingRole(Role),
}

/// A place where the matrix grants a lower role more than a higher one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonotonicityViolation {
    pub lower: Role,
    pub higher: Role,
    pub operation: Operation,
    pub kind: String,
}

impl RoleCapabilityMatrix {
    pub fn from_json(text: &str) -> Result<Self, MatrixError> {
        let m: RoleCapabilityMatrix = serde_json::from_str(text).map_err(|e| MatrixError::Malformed(e.to_string()))?;
        if let Some(r) = Role::ALL.into_iter().find(|r| !m.roles.contains_key(r)) {
            return Err(MatrixError::MissingRole(r));
        }
        Ok(m)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, MatrixError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| MatrixError::Malformed(e.to_string()))?;
        Self::from_json(&text)
    }

    pub fn bundled() -> Self {
        Self::from_json(crate::bundled::MATRIX).expect("bundled matrix is valid")
    }

    pub fn allows(&self, role: Role, op: Operation, kind: &str) -> bool {
        self.roles
            .get(&role)
            .and_then(|row| row.get(kind).or_else(|| row.get(ANY_KIND)))
            .is_some_and(|ops| ops.contains(&op))
    }

    /// Kinds with an explicit row anywhere in the matrix.
    pub fn explicit_kinds(&self) -> BTreeSet<String> {
        self.roles
            .values()
            .flat_map(|row| row.keys().filter(|k| *k != ANY_KIND).cloned())
            .collect()
    }

    /// Checks `allowed(r) => allowed(r')` for every `r <= r'` over the given
    /// kinds plus every kind named in the matrix.
    pub fn monotonicity_violations<'a>(&self, kinds: impl IntoIterator<Item = &'a str>) -> Vec<MonotonicityViolation> {
        let mut all: BTreeSet<String> = kinds.into_iter().map(str::to_string).collect();
        all.extend(self.explicit_kinds());
        all.insert(ANY_KIND.to_string());
        let mut out = Vec::new();
        for kind in &all {
            for op in Operation::ALL {
                for (i, &lo) in Role::ALL.iter().enumerate() {
                    for &hi in &Role::ALL[i + 1..] {
                        if self.allows(lo, op, kind) && !self.allows(hi, op, kind) {
                            out.push(MonotonicityViolation {
                                lower: lo,
                                higher: hi,
                                operation: op,
                                kind: kind.clone(),
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// `(operation, kind)` pairs the owner row does not allow.
    pub fn owner_gaps<'a>(&self, kinds: impl IntoIterator<Item = &'a str>) -> Vec<(Operation, String)> {
        kinds
            .into_iter()
            .flat_map(|k| Operation::ALL.into_iter().map(move |op| (op, k)))
            .filter(|(op, k)| !self.allows(Role::Owner, *op, k))
            .map(|(op, k)| (op, k.to_string()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// Level 1 is not enforced.
    SkipScopeCheck,
    /// Level 2 (role and object constraints) is not enforced.
    SkipRoleCheck,
    /// Only the owner-only rule for sharing changes is not enforced.
    AllowSharingMutation,
}

/// A deliberate enforcement gap applied to APIs matching `api_pattern`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub api_pattern: String,
    #[serde(default)]
    pub note: String,
}

impl FaultSpec {
    pub fn new(kind: FaultKind, api_pattern: impl Into<String>) -> Self {
        FaultSpec {
            kind,
            api_pattern: api_pattern.into(),
            note: String::new(),
        }
    }

    pub fn matches(&self, api_id: &str) -> bool {
        glob::Pattern::new(&self.api_pattern).is_ok_and(|p| p.matches(api_id))
    }
}

pub fn parse_faults(text: &str) -> Result<Vec<FaultSpec>, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_rungs() {
        assert!(ScopeGrant::new([Scope::Edit]).is_err());
        assert!(ScopeGrant::new([Scope::Read, Scope::Delete]).is_err());
        assert_eq!(ScopeGrant::new([Scope::Edit, Scope::Read]).unwrap(), ScopeGrant::read_edit());
        let json = serde_json::to_string(&ScopeGrant::full()).unwrap();
        assert_eq!(json, r#"["read","edit","delete"]"#);
        assert!(serde_json::from_str::<ScopeGrant>(r#"["delete"]"#).is_err());
    }

    #[test]
    fn scope_classes() {
        assert!(ScopeGrant::read().covers(Operation::View));
        assert!(!ScopeGrant::read().covers(Operation::Comment));
        assert!(ScopeGrant::read_edit().covers(Operation::Create));
        assert!(!ScopeGrant::read_edit().covers(Operation::Delete));
        assert!(ScopeGrant::full().covers(Operation::Delete));
    }

    #[test]
    fn bundled_matrix_is_monotone_with_full_owner_row() {
        let m = RoleCapabilityMatrix::bundled();
        assert!(m.monotonicity_violations(["Cell", "Document"]).is_empty());
        assert!(m.owner_gaps(["Cell", "Document"]).is_empty());
        assert!(m.allows(Role::Commenter, Operation::Comment, "Body"));
        assert!(!m.allows(Role::Viewer, Operation::Modify, "Text"));
    }

    #[test]
    fn explicit_rows_override_wildcard() {
        let m = RoleCapabilityMatrix::from_json(
            r#"{"roles":{"owner":{"*":["view"]},"editor":{"*":["view"]},"commenter":{"*":["view"]},
               "viewer":{"*":["view"],"File":[]}}}"#,
        )
        .unwrap();
        assert!(!m.allows(Role::Viewer, Operation::View, "File"));
        assert!(m.allows(Role::Viewer, Operation::View, "Folder"));
        assert!(m.monotonicity_violations(std::iter::empty()).is_empty());
    }

    #[test]
    fn non_monotone_matrix_is_reported() {
        let m = RoleCapabilityMatrix::from_json(
            r#"{"roles":{"owner":{"*":["view"]},"editor":{"*":[]},"commenter":{"*":["view"]},"viewer":{"*":[]}}}"#,
        )
        .unwrap();
        let v = m.monotonicity_violations(std::iter::empty());
        assert!(v.iter().any(|x| x.lower == Role::Commenter && x.higher == Role::Editor));
    }

    #[test]
    fn missing_role_rejected() {
        assert!(matches!(
            RoleCapabilityMatrix::from_json(r#"{"roles":{"owner":{"*":[]}}}"#),
            Err(MatrixError::MissingRole(_))
        ));
    }

    #[test]
    fn fault_globs() {
        let f = FaultSpec::new(FaultKind::AllowSharingMutation, "*.addEditor");
        assert!(f.matches("File.addEditor"));
        assert!(!f.matches("File.addViewer"));
        let bundled = parse_faults(crate::bundled::FAULTS).unwrap();
        assert_eq!(bundled.len(), 12);
    }
}
