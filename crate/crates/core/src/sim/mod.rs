//! Reference workspace with a two-level access-control model and fault
//! injection.

pub mod access;
pub mod invoke;
pub mod model;
pub mod state;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use access::{check_access, check_access_with, Decision, Enforcement, Subject};
pub use invoke::{invoke_host_api, AddonCtx, Invocation, InvokeError, ObjectRef, PERMISSION_MESSAGE};
pub use model::{FaultKind, FaultSpec, RoleCapabilityMatrix, Role, Scope, ScopeGrant};
pub use state::{instantiate_template, ObjectNode, SharingConfig, SimError, Template, WorkspaceState};

use crate::attrs::AttrRole;
use crate::catalog::Catalog;
use crate::classifier::{classify_catalog, labels_only, ClassifierConfig, PermissionLabel};
use crate::executor::{Backend, BackendError, Session};
use crate::value::Value;

/// Name the simulated add-on is installed under.
pub const ADDON_ID: &str = "scopeprobe-addon";

/// Immutable inputs shared by every session.
#[derive(Debug, Clone)]
pub struct SimEnv {
    pub catalog: Arc<Catalog>,
    /// The operation each API performs, as enforced by the platform.
    pub labels: Arc<BTreeMap<String, PermissionLabel>>,
    pub matrix: Arc<RoleCapabilityMatrix>,
}

impl SimEnv {
    pub fn new(catalog: Catalog, labels: BTreeMap<String, PermissionLabel>, matrix: RoleCapabilityMatrix) -> Self {
        SimEnv {
            catalog: Arc::new(catalog),
            labels: Arc::new(labels),
            matrix: Arc::new(matrix),
        }
    }

    /// Lexicon labels and the bundled matrix.
    pub fn with_default_labels(catalog: Catalog) -> Self {
        let labels = labels_only(&classify_catalog(&catalog, &ClassifierConfig::default()));
        SimEnv::new(catalog, labels, RoleCapabilityMatrix::bundled())
    }

    pub fn fresh_state(&self, template: &Template) -> Result<WorkspaceState, SimError> {
        WorkspaceState::from_template(template, &self.catalog)
    }
}

/// Backend running each session on a fresh copy of the template.
#[derive(Debug, Clone)]
pub struct SimBackend {
    env: SimEnv,
    template: Template,
    faults: Vec<FaultSpec>,
}

impl SimBackend {
    /// Validates the template and every fault pattern up front.
    pub fn new(env: SimEnv, template: Template, faults: Vec<FaultSpec>) -> Result<Self, SimError> {
        let mut probe = env.fresh_state(&template)?;
        for f in &faults {
            probe.inject_fault(f.clone(), &env.catalog)?;
        }
        Ok(SimBackend { env, template, faults })
    }

    pub fn env(&self) -> &SimEnv {
        &self.env
    }

    /// Fault-free reference state for judging records.
    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            env: self.env.clone(),
            state: self.env.fresh_state(&self.template).expect("template validated"),
        }
    }
}

impl Backend for SimBackend {
    type Session = SimSession;

    fn open_session(&self, role: Role, grant: &ScopeGrant) -> Result<SimSession, BackendError> {
        let mut state = self
            .env
            .fresh_state(&self.template)
            .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        for f in &self.faults {
            state
                .inject_fault(f.clone(), &self.env.catalog)
                .map_err(|e| BackendError::Unavailable(e.to_string()))?;
        }
        let installer = state
            .first_user_with(role)
            .ok_or_else(|| BackendError::Unavailable(format!("template has no {role}")))?
            .to_string();
        state.set_grant(&installer, ADDON_ID, grant.clone());
        Ok(SimSession {
            env: self.env.clone(),
            state,
            installer,
        })
    }
}

pub struct SimSession {
    env: SimEnv,
    state: WorkspaceState,
    installer: String,
}

impl SimSession {
    pub fn state(&self) -> &WorkspaceState {
        &self.state
    }
}

impl Session for SimSession {
    fn installer(&self) -> &str {
        &self.installer
    }

    fn invoke(&mut self, api: &str, receiver: &Value, args: &[Value]) -> Result<Invocation, String> {
        let ctx = AddonCtx {
            installer: &self.installer,
            addon: ADDON_ID,
        };
        invoke_host_api(&self.env, &mut self.state, ctx, api, receiver, args).map_err(|e| e.to_string())
    }

    fn lookup(&mut self, kind: &str, role: AttrRole) -> Option<String> {
        if let Some(v) = self.state.attribute_table.first(kind, role) {
            return Some(v.to_string());
        }
        if !self.env.catalog.is_shareable(kind) {
            return None;
        }
        // cold start: a new resource shared like the first template resource
        let sharing = self
            .state
            .initial_resources()
            .first()
            .and_then(|r| self.state.sharing.get(r))
            .cloned()
            .unwrap_or_else(|| SharingConfig::owned_by(&self.installer));
        let attrs = state::NodeAttrs {
            name: Some(format!("scopeprobe-{}", kind.to_ascii_lowercase())),
            ..Default::default()
        };
        let owner = sharing.owners().next().unwrap_or(&self.installer).to_string();
        let id = self.state.add_node(kind, attrs, None, &owner);
        self.state.sharing.insert(id.clone(), sharing);
        tracing::warn!(kind, %role, id = %id, "attribute table miss; created a fresh resource");
        self.state.attribute_table.first(kind, role).map(str::to_string)
    }

    fn sharing_digest(&self) -> String {
        self.state.session_digest()
    }

    fn evidence(&self, value: &Value) -> serde_json::Value {
        evidence_json(&self.state, value)
    }
}

/// JSON summary of a returned value. Objects include their name and
/// content so leaked data is visible in the record.
pub fn evidence_json(state: &WorkspaceState, value: &Value) -> serde_json::Value {
    use serde_json::json;
    match value {
        Value::Null => serde_json::Value::Null,
        Value::Str(s) => json!(s),
        Value::Int(i) => json!(i),
        Value::Bool(b) => json!(b),
        Value::App(c) => json!(c),
        Value::List(items) => serde_json::Value::Array(items.iter().map(|v| evidence_json(state, v)).collect()),
        Value::Obj { id, kind } => {
            let mut m = serde_json::Map::new();
            m.insert("id".into(), json!(id));
            m.insert("kind".into(), json!(kind));
            if let Some(n) = state.node(id) {
                if let Some(name) = &n.attrs.name {
                    m.insert("name".into(), json!(name));
                }
                if let Some(c) = &n.attrs.content {
                    m.insert("content".into(), json!(c));
                }
            }
            serde_json::Value::Object(m)
        }
    }
}

/// Fault-free view of the template used to judge execution records.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub env: SimEnv,
    pub state: WorkspaceState,
}

impl GroundTruth {
    /// Level-2 decision of the fault-free platform for `installer` on
    /// `object`; `None` if the object is not part of the template (e.g.
    /// created during the session).
    pub fn role_decision(&self, installer: &str, label: &PermissionLabel, object: &str) -> Option<Decision> {
        self.state.node(object)?;
        Some(check_access(&self.state, &self.env.matrix, Subject::User(installer), label, Some(object)))
    }

    pub fn content(&self, object: &str) -> Option<&str> {
        self.state.node(object)?.attrs.content.as_deref()
    }
}
