//! Random catalogs for property tests and oracle comparisons.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::catalog::{ApiSpec, Catalog, CatalogFile, ClassEntry, HostApp, ParamKind, ParamSpec, Primitive, TypeRef};

/// Object classes and APIs per host application in the full-scale skeleton.
pub const FULL_SCALE: [(HostApp, &str, usize, usize); 7] = [
    (HostApp::Calendar, "CalendarApp", 7, 218),
    (HostApp::Document, "DocumentApp", 36, 846),
    (HostApp::Drive, "DriveApp", 6, 152),
    (HostApp::Form, "FormApp", 34, 418),
    (HostApp::Gmail, "GmailApp", 6, 167),
    (HostApp::Spreadsheet, "SpreadsheetApp", 58, 1784),
    (HostApp::Slide, "SlidesApp", 47, 938),
];

pub const SYNTH_ROOT: &str = "SynthApp";
pub const SYNTH_ENUM: &str = "Mode";

const VERBS: [&str; 10] = [
    "get", "create", "insert", "set", "delete", "remove", "add", "comment", "list", "clear",
];

/// A single-app catalog with up to `max_classes` classes (root included)
/// and up to `max_apis` APIs. Every class hangs under an earlier one, so
/// the hierarchy is a tree.
pub fn random_catalog(seed: u64, max_classes: usize, max_apis: usize) -> Catalog {
    let mut rng = StdRng::seed_from_u64(seed);
    let n_classes = rng.gen_range(2..=max_classes.max(2));
    let n_apis = rng.gen_range(1..=max_apis.max(1));
    let names: Vec<String> = std::iter::once(SYNTH_ROOT.to_string())
        .chain((1..n_classes).map(|i| format!("C{i}")))
        .collect();
    let mut children: Vec<Vec<String>> = vec![Vec::new(); n_classes];
    for (i, name) in names.iter().enumerate().skip(1) {
        let parent = rng.gen_range(0..i);
        children[parent].push(name.clone());
    }
    let classes = names
        .iter()
        .zip(children)
        .map(|(n, c)| ClassEntry {
            name: n.clone(),
            children: c,
        })
        .collect();
    let mut apis = Vec::with_capacity(n_apis);
    for i in 0..n_apis {
        // roots own a larger share so that most classes are reachable
        let parent = if rng.gen_bool(0.25) {
            0
        } else {
            rng.gen_range(0..n_classes)
        };
        let verb = VERBS[rng.gen_range(0..VERBS.len())];
        let internal = |rng: &mut StdRng| names[rng.gen_range(1..n_classes)].clone();
        let returns = match rng.gen_range(0..20) {
            0..=9 => TypeRef::Class(internal(&mut rng)),
            10..=11 => TypeRef::ArrayOf(internal(&mut rng)),
            12..=16 => TypeRef::Primitive(Primitive::String),
            _ => TypeRef::Void,
        };
        let n_params = [0, 0, 0, 1, 1, 2][rng.gen_range(0..6)];
        let params = (0..n_params)
            .map(|j| {
                let (kind, type_name) = match rng.gen_range(0..20) {
                    0..=6 => (ParamKind::String, "string".to_string()),
                    7..=11 => (ParamKind::Integer, "integer".to_string()),
                    12..=14 => (ParamKind::Boolean, "boolean".to_string()),
                    15..=18 => (ParamKind::Class, internal(&mut rng)),
                    _ => (ParamKind::Enum, SYNTH_ENUM.to_string()),
                };
                ParamSpec {
                    name: format!("arg{j}"),
                    kind,
                    type_name,
                    description: String::new(),
                }
            })
            .collect();
        let method = format!("{verb}Item{i}");
        apis.push(ApiSpec {
            id: format!("{}.{method}", names[parent]),
            parent_class: names[parent].clone(),
            method_name: method,
            description: String::new(),
            params,
            returns,
            tutorial: None,
        });
    }
    let file = CatalogFile {
        host_app: HostApp::Document,
        root: SYNTH_ROOT.into(),
        external_types: vec![SYNTH_ENUM.into()],
        classes,
        apis,
    };
    let cat = Catalog::from_files([file]).expect("synthetic catalog assembles");
    debug_assert!(cat.validate().is_empty());
    cat
}

/// A skeleton catalog with the class and API counts of [`FULL_SCALE`].
/// Classes of each app form a binary tree under the root; every class owns
/// one getter per child plus filler methods.
pub fn full_scale_catalog() -> Catalog {
    let files = FULL_SCALE.iter().map(|&(app, root, n_objects, n_apis)| {
        let prefix = root.trim_end_matches("App");
        let names: Vec<String> = std::iter::once(root.to_string())
            .chain((1..=n_objects).map(|i| format!("{prefix}Object{i}")))
            .collect();
        let children = |i: usize| -> Vec<usize> {
            if i == 0 {
                vec![1]
            } else {
                [2 * i, 2 * i + 1].into_iter().filter(|c| *c <= n_objects).collect()
            }
        };
        let mut apis = Vec::with_capacity(n_apis);
        for (i, name) in names.iter().enumerate() {
            for c in children(i) {
                let method = format!("get{}", names[c]);
                apis.push(skeleton_api(name, method, TypeRef::Class(names[c].clone()), 0));
            }
        }
        let mut k = 0;
        while apis.len() < n_apis {
            let owner = &names[k % names.len()];
            let verb = VERBS[k % VERBS.len()];
            let returns = if k % 3 == 0 {
                TypeRef::Primitive(Primitive::String)
            } else {
                TypeRef::Void
            };
            apis.push(skeleton_api(owner, format!("{verb}Field{k}"), returns, k % 2));
            k += 1;
        }
        CatalogFile {
            host_app: app,
            root: root.to_string(),
            external_types: Vec::new(),
            classes: names
                .iter()
                .enumerate()
                .map(|(i, n)| ClassEntry {
                    name: n.clone(),
                    children: children(i).into_iter().map(|c| names[c].clone()).collect(),
                })
                .collect(),
            apis,
        }
    });
    Catalog::from_files(files).expect("skeleton catalog assembles")
}

fn skeleton_api(class: &str, method: String, returns: TypeRef, n_params: usize) -> ApiSpec {
    ApiSpec {
        id: format!("{class}.{method}"),
        parent_class: class.to_string(),
        method_name: method,
        description: String::new(),
        params: (0..n_params)
            .map(|j| ParamSpec {
                name: format!("value{j}"),
                kind: ParamKind::String,
                type_name: "string".into(),
                description: String::new(),
            })
            .collect(),
        returns,
        tutorial: None,
    }
}
