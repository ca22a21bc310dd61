//! Permission-escalation testing for add-on host APIs.
//!
//! The pipeline runs catalog ingestion ([`catalog`]), operation labelling
//! ([`classifier`]), call-chain synthesis ([`graph`], [`testgen`]), execution
//! against a backend ([`executor`], with the reference simulator in [`sim`])
//! and escalation detection ([`detector`]).

pub mod bundled;
pub mod attrs;
pub mod catalog;
pub mod classifier;
pub mod detector;
pub mod executor;
pub mod graph;
pub mod pipeline;
pub mod remote;
pub mod sim;
pub mod synth;
pub mod testgen;
pub mod tutorial;
pub mod value;

pub use catalog::{ApiSpec, Catalog, CatalogError, HostApp, ParamKind, ParamSpec, TypeRef};
pub use classifier::{classify_api, Classification, ClassifierConfig, Operation, PermissionLabel};
pub use graph::{build_graph, CallChain, DepGraph};
pub use sim::{Role, ScopeGrant};
