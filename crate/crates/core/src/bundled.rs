//! Data files shipped with the crate.

use std::path::PathBuf;

use crate::catalog::{Catalog, CatalogFile};

pub const MINI_DOCUMENT: &str = include_str!("../data/fixtures/mini_document.json");
pub const CLASSIFIER_CORPUS: &str = include_str!("../data/fixtures/classifier_corpus.json");
pub const TEMPLATE: &str = include_str!("../data/workspace/template.json");
pub const MATRIX: &str = include_str!("../data/workspace/matrix.json");
pub const FAULTS: &str = include_str!("../data/workspace/faults.json");

const WORKSPACE_CATALOG: [&str; 4] = [
    include_str!("../data/workspace/catalog/document.json"),
    include_str!("../data/workspace/catalog/drive.json"),
    include_str!("../data/workspace/catalog/slide.json"),
    include_str!("../data/workspace/catalog/spreadsheet.json"),
];

/// Root of the bundled `data/` directory in the source tree.
pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn workspace_catalog_dir() -> PathBuf {
    data_dir().join("workspace/catalog")
}

pub fn template_path() -> PathBuf {
    data_dir().join("workspace/template.json")
}

pub fn matrix_path() -> PathBuf {
    data_dir().join("workspace/matrix.json")
}

pub fn faults_path() -> PathBuf {
    data_dir().join("workspace/faults.json")
}

/// The single-app document catalog: `DocumentApp -> Document -> Body`.
pub fn mini_catalog() -> Catalog {
    Catalog::from_json(MINI_DOCUMENT).expect("bundled mini catalog is valid")
}

/// Document, drive, slide and spreadsheet catalogs merged.
pub fn workspace_catalog() -> Catalog {
    let files: Vec<CatalogFile> = WORKSPACE_CATALOG
        .iter()
        .map(|s| Catalog::parse_file(s).expect("bundled catalog parses"))
        .collect();
    let cat = Catalog::from_files(files).expect("bundled catalog assembles");
    let report = cat.validate();
    assert!(report.is_empty(), "bundled catalog invalid:\n{report}");
    cat
}
