//! Operation labelling of host APIs.
//!
//! The default classifier is a verb lexicon applied to the method name, then
//! to the description, then a `Modify` fallback. A remote text model can be
//! consulted for low-confidence labels (see [`crate::remote`]).

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{ApiSpec, Catalog, TypeRef};
use crate::remote::RemoteEndpoint;

/// The five operations a permission can grant.
///
/// The derived order (`Create < View < Comment < Modify < Delete`) is only
/// used for sequencing test suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operation {
    Create,
    View,
    Comment,
    Modify,
    Delete,
}

impl Operation {
    pub const ALL: [Operation; 5] = [
        Operation::Create,
        Operation::View,
        Operation::Comment,
        Operation::Modify,
        Operation::Delete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Create => "create",
            Operation::View => "view",
            Operation::Comment => "comment",
            Operation::Modify => "modify",
            Operation::Delete => "delete",
        }
    }

    pub fn parse(word: &str) -> Option<Operation> {
        Operation::ALL
            .into_iter()
            .find(|op| op.as_str().eq_ignore_ascii_case(word.trim()))
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(operation, object)` permission an API needs, plus whether it touches
/// the sharing configuration of its resource.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PermissionLabel {
    pub operation: Operation,
    pub object_kind: String,
    pub touches_sharing: bool,
}

impl fmt::Display for PermissionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.operation, self.object_kind)?;
        if self.touches_sharing {
            f.write_str(" [sharing]")?;
        }
        Ok(())
    }
}

/// Where a label came from; drives the confidence score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    BuilderRule,
    MethodStem,
    Description,
    Fallback,
    Remote,
}

impl LabelSource {
    pub fn confidence(self) -> f64 {
        match self {
            LabelSource::BuilderRule | LabelSource::MethodStem => 1.0,
            LabelSource::Remote => 0.9,
            LabelSource::Description => 0.7,
            LabelSource::Fallback => 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: PermissionLabel,
    pub confidence: f64,
    pub source: LabelSource,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub lexicon: BTreeMap<String, Operation>,
    pub sharing_markers: Vec<String>,
    #[serde(default)]
    pub remote: Option<RemoteEndpoint>,
    pub confidence_threshold: f64,
}

const DEFAULT_STEMS: &[(&str, Operation)] = &[
    ("get", Operation::View),
    ("read", Operation::View),
    ("is", Operation::View),
    ("has", Operation::View),
    ("find", Operation::View),
    ("list", Operation::View),
    ("retrieve", Operation::View),
    ("return", Operation::View),
    ("search", Operation::View),
    ("create", Operation::Create),
    ("new", Operation::Create),
    ("append", Operation::Create),
    ("insert", Operation::Create),
    ("copy", Operation::Create),
    ("add", Operation::Create),
    ("comment", Operation::Comment),
    ("reply", Operation::Comment),
    ("set", Operation::Modify),
    ("edit", Operation::Modify),
    ("replace", Operation::Modify),
    ("move", Operation::Modify),
    ("hide", Operation::Modify),
    ("unhide", Operation::Modify),
    ("show", Operation::Modify),
    ("sort", Operation::Modify),
    ("update", Operation::Modify),
    ("merge", Operation::Modify),
    ("group", Operation::Modify),
    ("ungroup", Operation::Modify),
    ("rename", Operation::Modify),
    ("delete", Operation::Delete),
    ("remove", Operation::Delete),
    ("clear", Operation::Delete),
    ("revoke", Operation::Delete),
];

const DEFAULT_SHARING_MARKERS: &[&str] = &["editor", "viewer", "commenter", "owner", "collaborator", "sharing"];

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            lexicon: DEFAULT_STEMS.iter().map(|(s, op)| (s.to_string(), *op)).collect(),
            sharing_markers: DEFAULT_SHARING_MARKERS.iter().map(|s| s.to_string()).collect(),
            remote: None,
            confidence_threshold: 0.5,
        }
    }
}

/// Leading lower-case run of a camelCase method name: `getBody` -> `get`.
pub fn method_stem(method: &str) -> &str {
    let end = method
        .char_indices()
        .find(|(i, c)| *i > 0 && (c.is_ascii_uppercase() || c.is_ascii_digit()))
        .map(|(i, _)| i)
        .unwrap_or(method.len());
    &method[..end]
}

impl ClassifierConfig {
    fn stem_op(&self, word: &str) -> Option<Operation> {
        let w = word.to_ascii_lowercase();
        if let Some(op) = self.lexicon.get(&w) {
            return Some(*op);
        }
        // third-person forms in descriptions: "Gets", "Creates", "Clears", "Retrieves"
        for suffix in ["es", "s"] {
            if let Some(base) = w.strip_suffix(suffix) {
                if let Some(op) = self.lexicon.get(base) {
                    return Some(*op);
                }
            }
        }
        None
    }

    fn description_op(&self, description: &str) -> Option<Operation> {
        description
            .split(|c: char| !c.is_ascii_alphabetic())
            .filter(|w| !w.is_empty())
            .find_map(|w| self.stem_op(w))
    }

    /// True when the method name carries a sharing marker and its class is
    /// a shareable resource.
    pub fn touches_sharing(&self, spec: &ApiSpec, catalog: &Catalog) -> bool {
        let name = spec.method_name.to_ascii_lowercase();
        catalog.is_shareable(&spec.parent_class) && self.sharing_markers.iter().any(|m| name.contains(m.as_str()))
    }
}

fn is_builder_factory(spec: &ApiSpec) -> bool {
    method_stem(&spec.method_name) == "new"
        && matches!(&spec.returns, TypeRef::Class(c) if c.ends_with("Builder"))
}

/// Lexicon classification of one API. Pure in `(spec, catalog, config)`.
pub fn classify_api(spec: &ApiSpec, catalog: &Catalog, config: &ClassifierConfig) -> Classification {
    let (op, source) = if is_builder_factory(spec) {
        (Operation::View, LabelSource::BuilderRule)
    } else if let Some(op) = config.stem_op(method_stem(&spec.method_name)) {
        (op, LabelSource::MethodStem)
    } else if let Some(op) = config.description_op(&spec.description) {
        (op, LabelSource::Description)
    } else {
        (Operation::Modify, LabelSource::Fallback)
    };
    let touches_sharing = config.touches_sharing(spec, catalog);
    let operation = if touches_sharing { sharing_operation(op) } else { op };
    Classification {
        label: PermissionLabel {
            operation,
            object_kind: spec.parent_class.clone(),
            touches_sharing,
        },
        confidence: source.confidence(),
        source,
    }
}

/// Collaborator additions and removals mutate the sharing configuration,
/// so they are modifications of the resource rather than creations or
/// deletions of content.
fn sharing_operation(op: Operation) -> Operation {
    match op {
        Operation::View => Operation::View,
        _ => Operation::Modify,
    }
}

/// Labels for every API of the catalog, keyed by API id.
pub fn classify_catalog(catalog: &Catalog, config: &ClassifierConfig) -> BTreeMap<String, Classification> {
    catalog
        .apis()
        .map(|spec| (spec.id.clone(), classify_api(spec, catalog, config)))
        .collect()
}

pub fn labels_only(classified: &BTreeMap<String, Classification>) -> BTreeMap<String, PermissionLabel> {
    classified.iter().map(|(k, c)| (k.clone(), c.label.clone())).collect()
}

/// Position of a case in the suite ordering: collaborator additions and
/// creations first, then views, comments and modifications, then
/// collaborator removals and ownership transfers, and deletions last.
pub fn sequence_phase(label: &PermissionLabel, method: &str) -> u8 {
    if label.touches_sharing {
        let stem = method_stem(method);
        let lower = method.to_ascii_lowercase();
        return match stem {
            "add" => 0,
            _ if label.operation == Operation::View => 1,
            "remove" | "revoke" | "transfer" => 4,
            "set" if lower.contains("owner") => 4,
            _ => 3,
        };
    }
    match label.operation {
        Operation::Create => 0,
        Operation::View => 1,
        Operation::Comment => 2,
        Operation::Modify => 3,
        Operation::Delete => 5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn label_of(cat: &Catalog, id: &str) -> PermissionLabel {
        classify_api(cat.api(id).unwrap(), cat, &ClassifierConfig::default()).label
    }

    #[test]
    fn stems() {
        assert_eq!(method_stem("getBody"), "get");
        assert_eq!(method_stem("editAsText"), "edit");
        assert_eq!(method_stem("unhide"), "unhide");
        assert_eq!(method_stem("removeFromParent"), "remove");
    }

    #[test]
    fn reference_labels() {
        let cat = bundled::workspace_catalog();
        assert_eq!(
            label_of(&cat, "Document.getBody"),
            PermissionLabel {
                operation: Operation::View,
                object_kind: "Document".into(),
                touches_sharing: false
            }
        );
        assert_eq!(
            label_of(&cat, "Body.editAsText"),
            PermissionLabel {
                operation: Operation::Modify,
                object_kind: "Body".into(),
                touches_sharing: false
            }
        );
        // "add" alone would be Create; collaborator mutation is a sharing Modify.
        assert_eq!(
            label_of(&cat, "Spreadsheet.addEditor"),
            PermissionLabel {
                operation: Operation::Modify,
                object_kind: "Spreadsheet".into(),
                touches_sharing: true
            }
        );
    }

    #[test]
    fn builder_factories_are_views() {
        let cat = bundled::workspace_catalog();
        let c = classify_api(
            cat.api("SlidesApp.newAffineTransformBuilder").unwrap(),
            &cat,
            &ClassifierConfig::default(),
        );
        assert_eq!(c.label.operation, Operation::View);
        assert_eq!(c.source, LabelSource::BuilderRule);
    }

    #[test]
    fn confidence_tracks_source() {
        let cat = bundled::workspace_catalog();
        let cfg = ClassifierConfig::default();
        assert_eq!(classify_api(cat.api("Document.getBody").unwrap(), &cat, &cfg).confidence, 1.0);
        // "makeCopy": stem unknown, description says "Creates"
        let c = classify_api(cat.api("File.makeCopy").unwrap(), &cat, &cfg);
        assert_eq!((c.label.operation, c.source), (Operation::Create, LabelSource::Description));
        let c = classify_api(cat.api("Document.saveAndClose").unwrap(), &cat, &cfg);
        assert_eq!((c.label.operation, c.source), (Operation::Modify, LabelSource::Fallback));
        assert!(c.confidence < cfg.confidence_threshold);
    }

    #[test]
    fn sharing_views_keep_view() {
        let cat = bundled::workspace_catalog();
        let l = label_of(&cat, "Spreadsheet.getEditors");
        assert_eq!((l.operation, l.touches_sharing), (Operation::View, true));
        // Not a shareable class: no sharing flag.
        assert!(!label_of(&cat, "Range.setValue").touches_sharing);
    }

    #[test]
    fn phases_order_collaborator_changes() {
        let cat = bundled::workspace_catalog();
        let phase = |id: &str| sequence_phase(&label_of(&cat, id), &cat.api(id).unwrap().method_name);
        assert!(phase("Spreadsheet.addEditor") < phase("Spreadsheet.getEditors"));
        assert!(phase("Spreadsheet.getEditors") < phase("Spreadsheet.removeEditor"));
        assert_eq!(phase("File.setOwner"), 4);
        assert_eq!(phase("Sheet.insertRowAfter"), 0);
        assert_eq!(phase("Sheet.deleteRow"), 5);
    }
}
