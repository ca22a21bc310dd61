//! Offline API catalogs.
//!
//! A catalog file describes the host APIs of one host application: the
//! classes, their containment hierarchy, and every method with its
//! parameters and return type. Several files can be merged into one
//! [`Catalog`] covering multiple host applications.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Host applications that expose APIs to add-ons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HostApp {
    Calendar,
    Document,
    Drive,
    Form,
    Gmail,
    Spreadsheet,
    Slide,
}

impl HostApp {
    pub const ALL: [HostApp; 7] = [
        HostApp::Calendar,
        HostApp::Document,
        HostApp::Drive,
        HostApp::Form,
        HostApp::Gmail,
        HostApp::Spreadsheet,
        HostApp::Slide,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HostApp::Calendar => "calendar",
            HostApp::Document => "document",
            HostApp::Drive => "drive",
            HostApp::Form => "form",
            HostApp::Gmail => "gmail",
            HostApp::Spreadsheet => "spreadsheet",
            HostApp::Slide => "slide",
        }
    }
}

impl fmt::Display for HostApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primitive {
    String,
    Integer,
    Boolean,
}

/// Type of a parameter or return value.
///
/// Serialized in the catalog `returns` shape: exactly one of `void`,
/// `class`, `array_of` or `primitive`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "ReturnsRepr", into = "ReturnsRepr")]
pub enum TypeRef {
    Void,
    Class(String),
    ArrayOf(String),
    Primitive(Primitive),
}

impl TypeRef {
    /// The class named by this type, if any (arrays yield their element class).
    pub fn class_name(&self) -> Option<&str> {
        match self {
            TypeRef::Class(c) | TypeRef::ArrayOf(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_array(&self) -> bool {
        matches!(self, TypeRef::ArrayOf(_))
    }
}

impl fmt::Display for TypeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeRef::Void => f.write_str("void"),
            TypeRef::Class(c) => f.write_str(c),
            TypeRef::ArrayOf(c) => write!(f, "{c}[]"),
            TypeRef::Primitive(p) => write!(f, "{}", serde_json::to_value(p).unwrap().as_str().unwrap()),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReturnsRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    void: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    array_of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    primitive: Option<Primitive>,
}

impl TryFrom<ReturnsRepr> for TypeRef {
    type Error = String;

    fn try_from(r: ReturnsRepr) -> Result<Self, Self::Error> {
        match (r.void, r.class, r.array_of, r.primitive) {
            (Some(true), None, None, None) => Ok(TypeRef::Void),
            (None, Some(c), None, None) if !c.is_empty() => Ok(TypeRef::Class(c)),
            (None, None, Some(c), None) if !c.is_empty() => Ok(TypeRef::ArrayOf(c)),
            (None, None, None, Some(p)) => Ok(TypeRef::Primitive(p)),
            _ => Err("`returns` must hold exactly one of void/class/array_of/primitive".into()),
        }
    }
}

impl From<TypeRef> for ReturnsRepr {
    fn from(t: TypeRef) -> Self {
        let mut r = ReturnsRepr::default();
        match t {
            TypeRef::Void => r.void = Some(true),
            TypeRef::Class(c) => r.class = Some(c),
            TypeRef::ArrayOf(c) => r.array_of = Some(c),
            TypeRef::Primitive(p) => r.primitive = Some(p),
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Class,
    String,
    Integer,
    Boolean,
    Enum,
}

/// One declared parameter of a host API.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    #[serde(rename = "type")]
    pub type_name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
}

impl ParamSpec {
    /// Structured view of the declared type. Class and enum parameters name
    /// a class; the rest are primitives.
    pub fn type_ref(&self) -> TypeRef {
        match self.kind {
            ParamKind::Class | ParamKind::Enum => TypeRef::Class(self.type_name.clone()),
            ParamKind::String => TypeRef::Primitive(Primitive::String),
            ParamKind::Integer => TypeRef::Primitive(Primitive::Integer),
            ParamKind::Boolean => TypeRef::Primitive(Primitive::Boolean),
        }
    }

    fn kind_matches_type(&self) -> bool {
        let t = self.type_name.as_str();
        match self.kind {
            ParamKind::String => t.eq_ignore_ascii_case("string"),
            ParamKind::Integer => t.eq_ignore_ascii_case("integer") || t.eq_ignore_ascii_case("number"),
            ParamKind::Boolean => t.eq_ignore_ascii_case("boolean"),
            ParamKind::Class | ParamKind::Enum => {
                !t.is_empty()
                    && !["string", "integer", "number", "boolean"]
                        .iter()
                        .any(|p| t.eq_ignore_ascii_case(p))
            }
        }
    }
}

/// The record of one host API, as transcribed from vendor documentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiSpec {
    pub id: String,
    pub parent_class: String,
    #[serde(rename = "method")]
    pub method_name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub params: Vec<ParamSpec>,
    pub returns: TypeRef,
    #[serde(default)]
    pub tutorial: Option<Vec<String>>,
}

impl ApiSpec {
    pub fn has_params(&self) -> bool {
        !self.params.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub name: String,
    #[serde(default)]
    pub children: Vec<String>,
}

/// On-disk shape of a catalog file (one host application).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogFile {
    pub host_app: HostApp,
    pub root: String,
    #[serde(default)]
    pub external_types: Vec<String>,
    pub classes: Vec<ClassEntry>,
    pub apis: Vec<ApiSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassInfo {
    pub host_app: HostApp,
    pub children: Vec<String>,
}

/// Validated, indexed set of host APIs across one or more host applications.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    apis: BTreeMap<String, ApiSpec>,
    api_host: BTreeMap<String, HostApp>,
    classes: BTreeMap<String, ClassInfo>,
    roots: BTreeMap<HostApp, String>,
    external_types: BTreeSet<String>,
}

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("malformed catalog file: {0}")]
    MalformedFile(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("duplicate api id `{0}`")]
    DuplicateApi(String),
    #[error("catalog failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Catalog {
    /// Assembles catalog files into one index, enforcing structural rules
    /// (unique ids, `id == parent.method`, kind/type consistency, one root
    /// per host app). Semantic problems are left to [`Catalog::validate`].
    pub fn from_files(files: impl IntoIterator<Item = CatalogFile>) -> Result<Catalog, CatalogError> {
        let mut cat = Catalog::default();
        for file in files {
            cat.absorb(file)?;
        }
        Ok(cat)
    }

    fn absorb(&mut self, file: CatalogFile) -> Result<(), CatalogError> {
        if file.root.is_empty() {
            return Err(CatalogError::SchemaViolation("empty `root`".into()));
        }
        match self.roots.get(&file.host_app) {
            Some(r) if *r != file.root => {
                return Err(CatalogError::SchemaViolation(format!(
                    "host app `{}` declares two roots: `{}` and `{}`",
                    file.host_app, r, file.root
                )))
            }
            _ => {
                self.roots.insert(file.host_app, file.root.clone());
            }
        }
        self.external_types.extend(file.external_types);
        for class in file.classes {
            if class.name.is_empty() {
                return Err(CatalogError::SchemaViolation("class with empty name".into()));
            }
            let entry = self.classes.entry(class.name.clone()).or_insert(ClassInfo {
                host_app: file.host_app,
                children: Vec::new(),
            });
            for child in class.children {
                if !entry.children.contains(&child) {
                    entry.children.push(child);
                }
            }
        }
        for api in file.apis {
            let expected = format!("{}.{}", api.parent_class, api.method_name);
            if api.id != expected {
                return Err(CatalogError::SchemaViolation(format!(
                    "api id `{}` does not match `{expected}`",
                    api.id
                )));
            }
            if let Some(p) = api.params.iter().find(|p| !p.kind_matches_type()) {
                return Err(CatalogError::SchemaViolation(format!(
                    "parameter `{}` of `{}` has kind {:?} but type `{}`",
                    p.name, api.id, p.kind, p.type_name
                )));
            }
            if self.apis.contains_key(&api.id) {
                return Err(CatalogError::DuplicateApi(api.id));
            }
            self.api_host.insert(api.id.clone(), file.host_app);
            self.apis.insert(api.id.clone(), api);
        }
        Ok(())
    }

    /// Parses one catalog file without validating it.
    pub fn parse_file(bytes: &str) -> Result<CatalogFile, CatalogError> {
        serde_json::from_str::<CatalogFile>(bytes).map_err(|e| {
            if e.is_data() {
                CatalogError::SchemaViolation(e.to_string())
            } else {
                CatalogError::MalformedFile(e.to_string())
            }
        })
    }

    /// Parses and validates a single catalog document.
    pub fn from_json(bytes: &str) -> Result<Catalog, CatalogError> {
        let cat = Catalog::from_files([Catalog::parse_file(bytes)?])?;
        cat.validated()
    }

    fn validated(self) -> Result<Catalog, CatalogError> {
        let report = self.validate();
        if report.is_empty() {
            Ok(self)
        } else {
            Err(CatalogError::Invalid(report))
        }
    }

    /// Loads a catalog file, or every `*.json` file of a directory (sorted
    /// by name) merged into one catalog.
    pub fn load(path: impl AsRef<Path>) -> Result<Catalog, CatalogError> {
        let path = path.as_ref();
        let io_err = |source| CatalogError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut files = Vec::new();
        if path.is_dir() {
            let mut entries: Vec<_> = std::fs::read_dir(path)
                .map_err(io_err)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            for p in entries {
                let text = std::fs::read_to_string(&p).map_err(|source| CatalogError::Io {
                    path: p.display().to_string(),
                    source,
                })?;
                files.push(Catalog::parse_file(&text)?);
            }
        } else {
            let text = std::fs::read_to_string(path).map_err(io_err)?;
            files.push(Catalog::parse_file(&text)?);
        }
        Catalog::from_files(files)?.validated()
    }

    /// Splits the catalog back into one file per host application.
    pub fn to_files(&self) -> Vec<CatalogFile> {
        self.roots
            .iter()
            .map(|(&app, root)| CatalogFile {
                host_app: app,
                root: root.clone(),
                external_types: self.external_types.iter().cloned().collect(),
                classes: self
                    .classes
                    .iter()
                    .filter(|(_, info)| info.host_app == app)
                    .map(|(name, info)| ClassEntry {
                        name: name.clone(),
                        children: info.children.clone(),
                    })
                    .collect(),
                apis: self
                    .apis
                    .values()
                    .filter(|a| self.api_host[&a.id] == app)
                    .cloned()
                    .collect(),
            })
            .collect()
    }

    pub fn api(&self, id: &str) -> Option<&ApiSpec> {
        self.apis.get(id)
    }

    /// All APIs ordered by id.
    pub fn apis(&self) -> impl Iterator<Item = &ApiSpec> {
        self.apis.values()
    }

    pub fn api_count(&self) -> usize {
        self.apis.len()
    }

    pub fn host_of(&self, api_id: &str) -> Option<HostApp> {
        self.api_host.get(api_id).copied()
    }

    pub fn classes(&self) -> &BTreeMap<String, ClassInfo> {
        &self.classes
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    pub fn roots(&self) -> &BTreeMap<HostApp, String> {
        &self.roots
    }

    pub fn is_root(&self, class: &str) -> bool {
        self.roots.values().any(|r| r == class)
    }

    pub fn external_types(&self) -> &BTreeSet<String> {
        &self.external_types
    }

    pub fn is_external(&self, name: &str) -> bool {
        self.external_types.contains(name) && !self.classes.contains_key(name)
    }

    /// Parent of `class` in the containment hierarchy.
    pub fn parent_of(&self, class: &str) -> Option<&str> {
        self.classes
            .iter()
            .find(|(_, info)| info.children.iter().any(|c| c == class))
            .map(|(name, _)| name.as_str())
    }

    /// Containment path from the host root down to `class`, e.g.
    /// `DocumentApp > Document > Body`.
    pub fn hierarchy_path(&self, class: &str) -> Vec<String> {
        let mut path = vec![class.to_string()];
        let mut seen = BTreeSet::from([class.to_string()]);
        let mut cur = class.to_string();
        while let Some(p) = self.parent_of(&cur) {
            if !seen.insert(p.to_string()) {
                break;
            }
            path.push(p.to_string());
            cur = p.to_string();
        }
        path.reverse();
        path
    }

    /// A class is shareable when it sits directly under a host root, i.e. it
    /// is a top-level resource with its own sharing configuration.
    pub fn is_shareable(&self, class: &str) -> bool {
        self.roots
            .values()
            .filter_map(|r| self.classes.get(r))
            .any(|info| info.children.iter().any(|c| c == class))
    }

    /// Reports dangling type references, orphan classes and hierarchy cycles.
    pub fn validate(&self) -> ValidationReport {
        let mut problems = Vec::new();
        for (app, root) in &self.roots {
            if !self.classes.contains_key(root) {
                problems.push(Problem::MissingRoot {
                    host_app: *app,
                    root: root.clone(),
                });
            }
        }
        let resolves = |name: &str| self.classes.contains_key(name) || self.external_types.contains(name);
        for api in self.apis.values() {
            if !self.classes.contains_key(&api.parent_class) {
                problems.push(Problem::UnknownParentClass {
                    api: api.id.clone(),
                    class: api.parent_class.clone(),
                });
            }
            let refs = api
                .params
                .iter()
                .filter_map(|p| match p.kind {
                    ParamKind::Class | ParamKind::Enum => Some(p.type_name.as_str()),
                    _ => None,
                })
                .chain(api.returns.class_name());
            for name in refs {
                if !resolves(name) {
                    problems.push(Problem::DanglingTypeRef {
                        api: api.id.clone(),
                        type_name: name.to_string(),
                    });
                }
            }
        }
        for info in self.classes.values() {
            for child in &info.children {
                if !self.classes.contains_key(child) {
                    problems.push(Problem::UnknownChildClass { class: child.clone() });
                }
            }
        }
        problems.extend(self.hierarchy_cycles());
        let in_cycle: BTreeSet<String> = problems
            .iter()
            .filter_map(|p| match p {
                Problem::CycleDetected { classes } => Some(classes.clone()),
                _ => None,
            })
            .flatten()
            .collect();
        for name in self.classes.keys() {
            if self.is_root(name) || in_cycle.contains(name) {
                continue;
            }
            if self.parent_of(name).is_none() {
                problems.push(Problem::OrphanClass { class: name.clone() });
            }
        }
        ValidationReport { problems }
    }

    /// Strongly connected groups of the hierarchy that contain a cycle.
    fn hierarchy_cycles(&self) -> Vec<Problem> {
        // Iterative DFS colouring; each back edge yields the cycle on the stack.
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut marks: BTreeMap<&str, Mark> = self.classes.keys().map(|k| (k.as_str(), Mark::New)).collect();
        let mut cycles: Vec<BTreeSet<String>> = Vec::new();
        for start in self.classes.keys() {
            if marks[start.as_str()] != Mark::New {
                continue;
            }
            let mut stack: Vec<(&str, usize)> = vec![(start.as_str(), 0)];
            marks.insert(start.as_str(), Mark::Active);
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                let children = &self.classes[node].children;
                if *next < children.len() {
                    let child = children[*next].as_str();
                    *next += 1;
                    match marks.get(child) {
                        Some(Mark::New) => {
                            marks.insert(child, Mark::Active);
                            stack.push((child, 0));
                        }
                        Some(Mark::Active) => {
                            let pos = stack.iter().position(|(n, _)| *n == child).unwrap();
                            let cyc: BTreeSet<String> = stack[pos..].iter().map(|(n, _)| n.to_string()).collect();
                            if !cycles.contains(&cyc) {
                                cycles.push(cyc);
                            }
                        }
                        _ => {}
                    }
                } else {
                    marks.insert(node, Mark::Done);
                    stack.pop();
                }
            }
        }
        cycles
            .into_iter()
            .map(|c| Problem::CycleDetected {
                classes: c.into_iter().collect(),
            })
            .collect()
    }

    /// Number of object classes per host application (roots excluded).
    pub fn object_census(&self) -> BTreeMap<HostApp, usize> {
        let mut census: BTreeMap<HostApp, usize> = self.roots.keys().map(|&app| (app, 0)).collect();
        for (name, info) in &self.classes {
            if !self.is_root(name) {
                *census.entry(info.host_app).or_default() += 1;
            }
        }
        census
    }
}

/// Problems found by [`Catalog::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum Problem {
    DanglingTypeRef { api: String, type_name: String },
    UnknownParentClass { api: String, class: String },
    UnknownChildClass { class: String },
    OrphanClass { class: String },
    CycleDetected { classes: Vec<String> },
    MissingRoot { host_app: HostApp, root: String },
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::DanglingTypeRef { api, type_name } => {
                write!(f, "{api}: type `{type_name}` is neither a catalog class nor external")
            }
            Problem::UnknownParentClass { api, class } => write!(f, "{api}: parent class `{class}` is not declared"),
            Problem::UnknownChildClass { class } => write!(f, "hierarchy names undeclared class `{class}`"),
            Problem::OrphanClass { class } => write!(f, "class `{class}` has no parent and is not a root"),
            Problem::CycleDetected { classes } => write!(f, "hierarchy cycle through {}", classes.join(", ")),
            Problem::MissingRoot { host_app, root } => write!(f, "{host_app}: root `{root}` is not a declared class"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub problems: Vec<Problem>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.problems {
            writeln!(f, "  - {p}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;

    fn file(json: &str) -> CatalogFile {
        Catalog::parse_file(json).unwrap()
    }

    #[test]
    fn mini_catalog_loads() {
        let cat = bundled::mini_catalog();
        assert_eq!(cat.api_count(), 6);
        assert_eq!(cat.roots()[&HostApp::Document], "DocumentApp");
        assert_eq!(cat.object_census(), BTreeMap::from([(HostApp::Document, 2)]));
        assert!(cat.validate().is_empty());
    }

    #[test]
    fn empty_api_list_is_fine() {
        let cat = Catalog::from_json(
            r#"{"host_app":"document","root":"DocumentApp","external_types":[],
                "classes":[{"name":"DocumentApp","children":[]}],"apis":[]}"#,
        )
        .unwrap();
        assert_eq!(cat.api_count(), 0);
        assert_eq!(cat.object_census().values().sum::<usize>(), 0);
    }

    #[test]
    fn empty_catalog_census() {
        assert!(Catalog::default().object_census().is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let json = r#"{"host_app":"document","root":"DocumentApp",
            "classes":[{"name":"DocumentApp","children":["Document"]},{"name":"Document","children":[]}],
            "apis":[
              {"id":"Document.getBody","parent_class":"Document","method":"getBody","description":"","params":[],"returns":{"void":true}},
              {"id":"Document.getBody","parent_class":"Document","method":"getBody","description":"","params":[],"returns":{"void":true}}
            ]}"#;
        assert!(matches!(Catalog::from_json(json), Err(CatalogError::DuplicateApi(id)) if id == "Document.getBody"));
    }

    #[test]
    fn malformed_and_schema_errors() {
        assert!(matches!(Catalog::from_json("{not json"), Err(CatalogError::MalformedFile(_))));
        // missing `root`
        assert!(matches!(
            Catalog::from_json(r#"{"host_app":"document","classes":[],"apis":[]}"#),
            Err(CatalogError::SchemaViolation(_))
        ));
        // two keys in `returns`
        let bad_ret = r#"{"host_app":"document","root":"A","classes":[{"name":"A"}],"apis":[
            {"id":"A.f","parent_class":"A","method":"f","params":[],"returns":{"void":true,"class":"A"}}]}"#;
        assert!(matches!(Catalog::from_json(bad_ret), Err(CatalogError::SchemaViolation(_))));
        let bad_id = r#"{"host_app":"document","root":"A","classes":[{"name":"A"}],"apis":[
            {"id":"A.g","parent_class":"A","method":"f","params":[],"returns":{"void":true}}]}"#;
        assert!(matches!(Catalog::from_json(bad_id), Err(CatalogError::SchemaViolation(_))));
        let bad_kind = r#"{"host_app":"document","root":"A","classes":[{"name":"A"}],"apis":[
            {"id":"A.f","parent_class":"A","method":"f","params":[{"name":"n","kind":"integer","type":"string"}],"returns":{"void":true}}]}"#;
        assert!(matches!(Catalog::from_json(bad_kind), Err(CatalogError::SchemaViolation(_))));
    }

    #[test]
    fn dangling_return_is_reported() {
        let cat = Catalog::from_files([file(
            r#"{"host_app":"document","root":"DocumentApp",
                "classes":[{"name":"DocumentApp","children":["Document"]},{"name":"Document"}],
                "apis":[{"id":"Document.getGhost","parent_class":"Document","method":"getGhost",
                         "params":[],"returns":{"class":"Phantom"}}]}"#,
        )])
        .unwrap();
        let report = cat.validate();
        assert_eq!(
            report.problems,
            vec![Problem::DanglingTypeRef {
                api: "Document.getGhost".into(),
                type_name: "Phantom".into()
            }]
        );
        assert!(matches!(cat.validated(), Err(CatalogError::Invalid(_))));
    }

    #[test]
    fn hierarchy_cycle_is_reported_once() {
        let cat = Catalog::from_files([file(
            r#"{"host_app":"document","root":"R",
                "classes":[{"name":"R","children":[]},{"name":"A","children":["B"]},{"name":"B","children":["A"]}],
                "apis":[]}"#,
        )])
        .unwrap();
        let report = cat.validate();
        assert_eq!(
            report.problems,
            vec![Problem::CycleDetected {
                classes: vec!["A".into(), "B".into()]
            }]
        );
    }

    #[test]
    fn orphan_class_is_reported() {
        let cat = Catalog::from_files([file(
            r#"{"host_app":"document","root":"R","classes":[{"name":"R"},{"name":"Loose"}],"apis":[]}"#,
        )])
        .unwrap();
        assert_eq!(
            cat.validate().problems,
            vec![Problem::OrphanClass { class: "Loose".into() }]
        );
    }

    #[test]
    fn bundled_workspace_is_well_formed() {
        let cat = bundled::workspace_catalog();
        assert!(cat.validate().is_empty(), "{}", cat.validate());
        assert_eq!(cat.roots().len(), 4);
        assert!(cat.is_shareable("Spreadsheet"));
        assert!(!cat.is_shareable("Range"));
        assert_eq!(
            cat.hierarchy_path("Cell"),
            vec!["SpreadsheetApp", "Spreadsheet", "Sheet", "Range", "Cell"]
        );
    }
}
