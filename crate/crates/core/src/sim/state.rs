//! Workspace world: resource trees, sharing configurations, grants.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::model::{FaultSpec, Role, ScopeGrant};
use crate::attrs::{AttrRole, AttributeTable};
use crate::catalog::Catalog;

/// Kinds that may carry `hidden: true`.
pub const HIDEABLE_KINDS: [&str; 4] = ["Sheet", "Row", "Column", "Cell"];
/// Kinds that may carry a protection set.
pub const PROTECTABLE_KINDS: [&str; 4] = ["Range", "Sheet", "Row", "Column"];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeAttrs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub hidden: bool,
    /// Users allowed to change the object; `None` means unprotected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protection: Option<BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comments: Vec<String>,
}

/// Template form of a resource tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub kind: String,
    pub id: String,
    #[serde(default)]
    pub attrs: NodeAttrs,
    #[serde(default)]
    pub children: Vec<ObjectNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharingConfig {
    pub roles: BTreeMap<String, Role>,
    #[serde(default = "default_true")]
    pub copy_download_print_allowed: bool,
}

fn default_true() -> bool {
    true
}

impl SharingConfig {
    pub fn owned_by(user: &str) -> Self {
        SharingConfig {
            roles: BTreeMap::from([(user.to_string(), Role::Owner)]),
            copy_download_print_allowed: true,
        }
    }

    pub fn owners(&self) -> impl Iterator<Item = &str> {
        self.roles.iter().filter(|(_, r)| **r == Role::Owner).map(|(u, _)| u.as_str())
    }

    /// Stable digest; independent of insertion order.
    pub fn digest(&self) -> String {
        // BTreeMap serialization is already key-sorted
        let canonical = serde_json::to_string(self).expect("sharing config serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    #[serde(default)]
    pub resources: Vec<ObjectNode>,
    #[serde(default)]
    pub sharing: BTreeMap<String, SharingConfig>,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("template is malformed: {0}")]
    MalformedTemplate(String),
    #[error("template names unknown kind `{0}`")]
    UnknownKind(String),
    #[error("duplicate resource id `{0}`")]
    DuplicateResourceId(String),
    #[error("kind `{kind}` of `{id}` cannot be {what}")]
    AttributeNotAllowed { id: String, kind: String, what: &'static str },
    #[error("sharing config of `{0}` must have exactly one owner")]
    OwnerCount(String),
    #[error("sharing config for `{0}` has no matching top-level resource")]
    SharingWithoutResource(String),
    #[error("top-level resource `{0}` has no sharing config")]
    ResourceWithoutSharing(String),
    #[error("pattern `{0}` matches no catalog API")]
    PatternMatchesNothing(String),
    #[error("no resource `{0}`")]
    NotFound(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// One object of the arena.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub kind: String,
    pub attrs: NodeAttrs,
    pub parent: Option<String>,
    pub children: Vec<String>,
}

/// The simulator's mutable world for one session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkspaceState {
    pub users: BTreeSet<String>,
    nodes: BTreeMap<String, Node>,
    /// Top-level resources in creation order.
    top: Vec<String>,
    pub sharing: BTreeMap<String, SharingConfig>,
    /// user -> add-on -> grant
    pub grants: BTreeMap<String, BTreeMap<String, ScopeGrant>>,
    pub faults: Vec<FaultSpec>,
    pub attribute_table: AttributeTable,
    /// Resources present at instantiation; the session digest covers these.
    initial: Vec<String>,
    next_fresh: u64,
}

pub fn url_of(kind: &str, id: &str) -> String {
    format!("https://workspace.example/{}/{id}", kind.to_ascii_lowercase())
}

impl Template {
    pub fn from_json(text: &str) -> Result<Template, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::MalformedTemplate(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Template, SimError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| SimError::Io(format!("{}: {e}", path.as_ref().display())))?;
        Template::from_json(&text)
    }

    pub fn bundled() -> Template {
        Template::from_json(crate::bundled::TEMPLATE).expect("bundled template parses")
    }
}

/// Reads a template file and builds a fresh state over `catalog`.
pub fn instantiate_template(path: impl AsRef<Path>, catalog: &Catalog) -> Result<WorkspaceState, SimError> {
    WorkspaceState::from_template(&Template::load(path)?, catalog)
}

impl WorkspaceState {
    /// Fresh state: no faults, no grants, attribute table seeded with every
    /// object's id and url and every name.
    pub fn from_template(t: &Template, catalog: &Catalog) -> Result<WorkspaceState, SimError> {
        let mut st = WorkspaceState {
            users: BTreeSet::new(),
            nodes: BTreeMap::new(),
            top: Vec::new(),
            sharing: BTreeMap::new(),
            grants: BTreeMap::new(),
            faults: Vec::new(),
            attribute_table: AttributeTable::default(),
            initial: Vec::new(),
            next_fresh: 0,
        };
        for res in &t.resources {
            st.insert_tree(res, None, catalog)?;
            st.top.push(res.id.clone());
        }
        for (rid, cfg) in &t.sharing {
            if !st.top.contains(rid) {
                return Err(SimError::SharingWithoutResource(rid.clone()));
            }
            if cfg.owners().count() != 1 {
                return Err(SimError::OwnerCount(rid.clone()));
            }
            st.users.extend(cfg.roles.keys().cloned());
        }
        if let Some(r) = st.top.iter().find(|r| !t.sharing.contains_key(*r)) {
            return Err(SimError::ResourceWithoutSharing(r.clone()));
        }
        st.sharing = t.sharing.clone();
        st.initial = st.top.clone();
        Ok(st)
    }

    fn insert_tree(&mut self, n: &ObjectNode, parent: Option<&str>, catalog: &Catalog) -> Result<(), SimError> {
        if !catalog.has_class(&n.kind) || catalog.is_root(&n.kind) {
            return Err(SimError::UnknownKind(n.kind.clone()));
        }
        if self.nodes.contains_key(&n.id) {
            return Err(SimError::DuplicateResourceId(n.id.clone()));
        }
        if n.attrs.hidden && !HIDEABLE_KINDS.contains(&n.kind.as_str()) {
            return Err(SimError::AttributeNotAllowed {
                id: n.id.clone(),
                kind: n.kind.clone(),
                what: "hidden",
            });
        }
        if n.attrs.protection.is_some() && !PROTECTABLE_KINDS.contains(&n.kind.as_str()) {
            return Err(SimError::AttributeNotAllowed {
                id: n.id.clone(),
                kind: n.kind.clone(),
                what: "protected",
            });
        }
        self.nodes.insert(
            n.id.clone(),
            Node {
                kind: n.kind.clone(),
                attrs: n.attrs.clone(),
                parent: parent.map(str::to_string),
                children: n.children.iter().map(|c| c.id.clone()).collect(),
            },
        );
        self.seed_attributes(&n.id);
        for c in &n.children {
            self.insert_tree(c, Some(&n.id), catalog)?;
        }
        Ok(())
    }

    /// Adds a node's id, url and name to the attribute table.
    pub(crate) fn seed_attributes(&mut self, id: &str) {
        let Some(node) = self.nodes.get(id) else { return };
        let kind = node.kind.clone();
        let name = node.attrs.name.clone();
        self.attribute_table.record(&kind, AttrRole::Id, id);
        self.attribute_table.record(&kind, AttrRole::Url, url_of(&kind, id));
        if let Some(name) = name {
            self.attribute_table.record(&kind, AttrRole::Name, name);
        }
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub(crate) fn node_mut(&mut self, id: &str) -> Option<&mut Node> {
        self.nodes.get_mut(id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn resource_count(&self) -> usize {
        self.top.len()
    }

    pub fn top_level(&self) -> &[String] {
        &self.top
    }

    pub fn initial_resources(&self) -> &[String] {
        &self.initial
    }

    /// Rebuilds the tree form of a node.
    pub fn tree(&self, id: &str) -> Option<ObjectNode> {
        let n = self.nodes.get(id)?;
        Some(ObjectNode {
            kind: n.kind.clone(),
            id: id.to_string(),
            attrs: n.attrs.clone(),
            children: n.children.iter().filter_map(|c| self.tree(c)).collect(),
        })
    }

    /// Ancestors from the node itself up to its top-level resource.
    pub fn lineage(&self, id: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut cur = self.nodes.get_key_value(id).map(|(k, _)| k.as_str());
        while let Some(c) = cur {
            out.push(c);
            cur = self.nodes[c].parent.as_deref();
        }
        out
    }

    pub fn resource_of(&self, id: &str) -> Option<&str> {
        self.lineage(id).last().copied()
    }

    /// Role of `user` on the resource containing `id`.
    pub fn role_of(&self, user: &str, id: &str) -> Option<Role> {
        let rid = self.resource_of(id)?;
        self.sharing.get(rid)?.roles.get(user).copied()
    }

    /// Hidden itself or below a hidden ancestor.
    pub fn effectively_hidden(&self, id: &str) -> bool {
        self.lineage(id).iter().any(|n| self.nodes[*n].attrs.hidden)
    }

    /// Nearest protection set on the node or an ancestor.
    pub fn effective_protection(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.lineage(id).iter().find_map(|n| self.nodes[*n].attrs.protection.as_ref())
    }

    /// Descendants of `id` (excluding itself) in pre-order.
    pub fn descendants(&self, id: &str) -> Vec<&str> {
        let mut out = Vec::new();
        let mut stack: Vec<&str> = self.nodes[id].children.iter().rev().map(String::as_str).collect();
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.nodes[n].children.iter().rev().map(String::as_str));
        }
        out
    }

    /// Every node in pre-order across top-level resources.
    pub fn preorder(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for t in &self.top {
            out.push(t.as_str());
            out.extend(self.descendants(t));
        }
        out
    }

    pub fn first_user_with(&self, role: Role) -> Option<&str> {
        let first = self.initial.first().and_then(|r| self.sharing.get(r))?;
        first.roles.iter().find(|(_, r)| **r == role).map(|(u, _)| u.as_str())
    }

    pub fn set_grant(&mut self, user: &str, addon: &str, grant: ScopeGrant) {
        self.grants
            .entry(user.to_string())
            .or_default()
            .insert(addon.to_string(), grant);
    }

    pub fn grant_of(&self, user: &str, addon: &str) -> ScopeGrant {
        self.grants
            .get(user)
            .and_then(|m| m.get(addon))
            .cloned()
            .unwrap_or_else(ScopeGrant::none)
    }

    pub(crate) fn fresh_id(&mut self, kind: &str) -> String {
        loop {
            self.next_fresh += 1;
            let id = format!("{}-new-{}", kind.to_ascii_lowercase(), self.next_fresh);
            if !self.nodes.contains_key(&id) {
                return id;
            }
        }
    }

    /// Adds a new node. `parent: None` makes it a top-level resource owned
    /// by `owner`.
    pub(crate) fn add_node(&mut self, kind: &str, attrs: NodeAttrs, parent: Option<&str>, owner: &str) -> String {
        let id = self.fresh_id(kind);
        self.nodes.insert(
            id.clone(),
            Node {
                kind: kind.to_string(),
                attrs,
                parent: parent.map(str::to_string),
                children: Vec::new(),
            },
        );
        match parent {
            Some(p) => self.nodes.get_mut(p).expect("parent exists").children.push(id.clone()),
            None => {
                self.top.push(id.clone());
                self.sharing.insert(id.clone(), SharingConfig::owned_by(owner));
            }
        }
        self.seed_attributes(&id);
        id
    }

    /// Deep copy of `src` placed next to it.
    pub(crate) fn copy_subtree(&mut self, src: &str, owner: &str) -> String {
        let tree = self.tree(src).expect("source exists");
        let parent = self.nodes[src].parent.clone();
        self.graft(&tree, parent.as_deref(), owner)
    }

    fn graft(&mut self, t: &ObjectNode, parent: Option<&str>, owner: &str) -> String {
        let id = self.add_node(&t.kind, t.attrs.clone(), parent, owner);
        for c in &t.children {
            self.graft(c, Some(&id), owner);
        }
        id
    }

    /// Detaches and drops a subtree. Sharing entries of removed top-level
    /// resources are kept.
    pub(crate) fn remove_subtree(&mut self, id: &str) {
        let mut doomed = vec![id.to_string()];
        doomed.extend(self.descendants(id).into_iter().map(str::to_string));
        match self.nodes[id].parent.clone() {
            Some(p) => self.nodes.get_mut(&p).unwrap().children.retain(|c| c != id),
            None => self.top.retain(|t| t != id),
        }
        for d in doomed {
            self.nodes.remove(&d);
        }
    }

    /// Records a fault if its pattern matches some API of `catalog`.
    pub fn inject_fault(&mut self, fault: FaultSpec, catalog: &Catalog) -> Result<(), SimError> {
        if glob::Pattern::new(&fault.api_pattern).is_err() || !catalog.apis().any(|a| fault.matches(&a.id)) {
            return Err(SimError::PatternMatchesNothing(fault.api_pattern));
        }
        if !self.faults.contains(&fault) {
            self.faults.push(fault);
        }
        Ok(())
    }

    pub fn sharing_digest(&self, resource: &str) -> Result<String, SimError> {
        self.sharing
            .get(resource)
            .map(SharingConfig::digest)
            .ok_or_else(|| SimError::NotFound(resource.to_string()))
    }

    /// Digest over the sharing configurations of the resources present at
    /// instantiation.
    pub fn session_digest(&self) -> String {
        let mut h = Sha256::new();
        for rid in &self.initial {
            h.update(rid.as_bytes());
            h.update(b"=");
            h.update(self.sharing.get(rid).map(SharingConfig::digest).unwrap_or_default().as_bytes());
            h.update(b"\n");
        }
        hex(&h.finalize())
    }

    /// Digest of the whole state, used to check that denials leave it intact.
    pub fn state_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("state serializes");
        hex(&Sha256::digest(canonical.as_bytes()))
    }
}
