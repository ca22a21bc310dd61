//! Runtime table of resource identifiers observed during a session.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// What a string parameter identifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrRole {
    Id,
    Url,
    Name,
}

impl AttrRole {
    /// Infers the role from a parameter name: `id`, `fileId`, `url`,
    /// `name`, `title`. Names starting with `new` (e.g. `newName`) are
    /// values to write, not references.
    pub fn infer(param_name: &str) -> Option<AttrRole> {
        let lower = param_name.to_ascii_lowercase();
        if lower.starts_with("new") {
            return None;
        }
        if lower == "id" || lower.ends_with("id") && param_name.ends_with("Id") {
            Some(AttrRole::Id)
        } else if lower == "url" || lower.ends_with("url") {
            Some(AttrRole::Url)
        } else if lower == "name" || lower == "title" || param_name.ends_with("Name") {
            Some(AttrRole::Name)
        } else {
            None
        }
    }
}

impl fmt::Display for AttrRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttrRole::Id => "id",
            AttrRole::Url => "url",
            AttrRole::Name => "name",
        })
    }
}

/// `(resource kind, role) -> values`, in the order they were observed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeTable {
    entries: BTreeMap<String, BTreeMap<AttrRole, Vec<String>>>,
}

impl AttributeTable {
    /// Records a value unless it is already present.
    pub fn record(&mut self, kind: &str, role: AttrRole, value: impl Into<String>) {
        let value = value.into();
        let slot = self.entries.entry(kind.to_string()).or_default().entry(role).or_default();
        if !slot.contains(&value) {
            slot.push(value);
        }
    }

    pub fn first(&self, kind: &str, role: AttrRole) -> Option<&str> {
        self.values(kind, role).first().map(String::as_str)
    }

    pub fn values(&self, kind: &str, role: AttrRole) -> &[String] {
        self.entries
            .get(kind)
            .and_then(|m| m.get(&role))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.entries.values().flat_map(|m| m.values()).map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roles_from_param_names() {
        assert_eq!(AttrRole::infer("id"), Some(AttrRole::Id));
        assert_eq!(AttrRole::infer("fileId"), Some(AttrRole::Id));
        assert_eq!(AttrRole::infer("url"), Some(AttrRole::Url));
        assert_eq!(AttrRole::infer("name"), Some(AttrRole::Name));
        assert_eq!(AttrRole::infer("sheetName"), Some(AttrRole::Name));
        assert_eq!(AttrRole::infer("newName"), None);
        assert_eq!(AttrRole::infer("text"), None);
        assert_eq!(AttrRole::infer("gridId"), Some(AttrRole::Id));
        assert_eq!(AttrRole::infer("valid"), None);
    }

    #[test]
    fn record_is_append_only_and_deduplicated() {
        let mut t = AttributeTable::default();
        t.record("Document", AttrRole::Id, "a");
        t.record("Document", AttrRole::Id, "b");
        t.record("Document", AttrRole::Id, "a");
        assert_eq!(t.values("Document", AttrRole::Id), ["a", "b"]);
        assert_eq!(t.first("Document", AttrRole::Id), Some("a"));
        assert_eq!(t.first("Sheet", AttrRole::Name), None);
    }
}
