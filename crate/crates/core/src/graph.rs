//! Class/method dependency graph and producer-path search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{ApiSpec, Catalog, HostApp, ParamKind, TypeRef};
use crate::testgen::{primitive_plan, ArgPlan};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("{api} returns `{class}`, which is neither a catalog class nor external")]
    UnresolvableReturn { api: String, class: String },
    #[error("no call chain produces `{0}`")]
    NoProducer(String),
}

/// Bipartite graph: classes own methods, methods return classes.
#[derive(Debug, Clone)]
pub struct DepGraph {
    catalog: Catalog,
    class_nodes: BTreeSet<String>,
    method_edges: BTreeMap<String, Vec<String>>,
    return_edges: BTreeMap<String, TypeRef>,
}

/// One call in a chain. `take_first` extracts element 0 of an array result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub api: String,
    pub args: ArgPlan,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub take_first: bool,
}

/// Calls starting at a host application class; each step's receiver is the
/// previous step's result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallChain {
    pub steps: Vec<ChainStep>,
    pub produces: TypeRef,
}

impl CallChain {
    pub fn api_ids(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.api.as_str()).collect()
    }
}

/// How to choose among equally short producer paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathTieBreak {
    /// Parameterless steps first, then smallest API ids.
    #[default]
    Lexicographic,
    /// Random choice, reproducible from the seed.
    Seeded(u64),
}

pub fn build_graph(catalog: &Catalog) -> Result<DepGraph, GraphError> {
    let class_nodes: BTreeSet<String> = catalog.classes().keys().cloned().collect();
    let mut method_edges: BTreeMap<String, Vec<String>> = class_nodes.iter().map(|c| (c.clone(), Vec::new())).collect();
    let mut return_edges = BTreeMap::new();
    for api in catalog.apis() {
        if let Some(c) = api.returns.class_name() {
            if !class_nodes.contains(c) && !catalog.external_types().contains(c) {
                return Err(GraphError::UnresolvableReturn {
                    api: api.id.clone(),
                    class: c.to_string(),
                });
            }
        }
        method_edges.entry(api.parent_class.clone()).or_default().push(api.id.clone());
        if api.returns != TypeRef::Void {
            return_edges.insert(api.id.clone(), api.returns.clone());
        }
    }
    Ok(DepGraph {
        catalog: catalog.clone(),
        class_nodes,
        method_edges,
        return_edges,
    })
}

/// A producer may appear in a chain only if all its parameters are
/// primitives.
pub fn is_chainable(api: &ApiSpec) -> bool {
    api.params
        .iter()
        .all(|p| matches!(p.kind, ParamKind::String | ParamKind::Integer | ParamKind::Boolean))
}

type StepKey = (bool, String);

fn step_key(api: &ApiSpec) -> StepKey {
    (api.has_params(), api.id.clone())
}

fn fnv1a(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl DepGraph {
    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn class_nodes(&self) -> &BTreeSet<String> {
        &self.class_nodes
    }

    pub fn roots(&self) -> &BTreeMap<HostApp, String> {
        self.catalog.roots()
    }

    /// API ids owned by `class`, ordered by id.
    pub fn methods_of(&self, class: &str) -> &[String] {
        self.method_edges.get(class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn return_of(&self, api: &str) -> Option<&TypeRef> {
        self.return_edges.get(api)
    }

    pub fn api(&self, id: &str) -> Option<&ApiSpec> {
        self.catalog.api(id)
    }

    pub fn method_edge_count(&self) -> usize {
        self.method_edges.values().map(Vec::len).sum()
    }

    pub fn return_edge_count(&self) -> usize {
        self.return_edges.len()
    }

    /// Internal class produced by `api`, if any.
    fn produced_class<'a>(&self, api: &'a ApiSpec) -> Option<&'a str> {
        api.returns.class_name().filter(|c| self.class_nodes.contains(*c))
    }

    /// For every class reachable from a root through chainable producers:
    /// its distance and the producers that reach it at that distance.
    fn layers(&self) -> (BTreeMap<String, usize>, BTreeMap<String, Vec<&ApiSpec>>) {
        let mut dist: BTreeMap<String, usize> = BTreeMap::new();
        let mut preds: BTreeMap<String, Vec<&ApiSpec>> = BTreeMap::new();
        let mut frontier: Vec<String> = self.roots().values().cloned().collect();
        for r in &frontier {
            dist.insert(r.clone(), 0);
        }
        let mut d = 0;
        while !frontier.is_empty() {
            let mut next: BTreeMap<String, Vec<&ApiSpec>> = BTreeMap::new();
            for c in &frontier {
                for id in self.methods_of(c) {
                    let api = self.catalog.api(id).expect("edge names an api");
                    if !is_chainable(api) {
                        continue;
                    }
                    if let Some(r) = self.produced_class(api) {
                        if !dist.contains_key(r) {
                            next.entry(r.to_string()).or_default().push(api);
                        }
                    }
                }
            }
            d += 1;
            frontier = next.keys().cloned().collect();
            for (c, ps) in next {
                dist.insert(c.clone(), d);
                preds.insert(c, ps);
            }
        }
        (dist, preds)
    }

    /// Minimum-length chain from a host root to a value of class `target`.
    pub fn shortest_producer_path(&self, target: &str, tie: PathTieBreak) -> Result<CallChain, GraphError> {
        if !self.class_nodes.contains(target) {
            return Err(GraphError::NoProducer(target.to_string()));
        }
        let (dist, preds) = self.layers();
        if !dist.contains_key(target) {
            return Err(GraphError::NoProducer(target.to_string()));
        }
        let apis: Vec<&ApiSpec> = match tie {
            PathTieBreak::Lexicographic => self.lexicographic_path(target, &dist, &preds),
            PathTieBreak::Seeded(seed) => {
                let mut rng = StdRng::seed_from_u64(seed ^ fnv1a(target));
                let mut out = Vec::new();
                let mut cur = target.to_string();
                while dist[&cur] > 0 {
                    let api = *preds[&cur].choose(&mut rng).expect("reachable class has a producer");
                    out.push(api);
                    cur = api.parent_class.clone();
                }
                out.reverse();
                out
            }
        };
        Ok(CallChain {
            steps: apis
                .into_iter()
                .map(|a| ChainStep {
                    api: a.id.clone(),
                    args: primitive_plan(a),
                    take_first: a.returns.is_array(),
                })
                .collect(),
            produces: TypeRef::Class(target.to_string()),
        })
    }

    /// Best path per class by increasing distance. All paths to a class
    /// have the same length, so the best path to a class extends the best
    /// path of its producer's receiver.
    fn lexicographic_path<'a>(
        &'a self,
        target: &str,
        dist: &BTreeMap<String, usize>,
        preds: &BTreeMap<String, Vec<&'a ApiSpec>>,
    ) -> Vec<&'a ApiSpec> {
        let mut order: Vec<(&usize, &String)> = dist.iter().map(|(c, d)| (d, c)).collect();
        order.sort();
        let mut best: BTreeMap<&str, (Vec<StepKey>, Vec<&ApiSpec>)> = BTreeMap::new();
        for (d, class) in order {
            if *d == 0 {
                best.insert(class, (Vec::new(), Vec::new()));
                continue;
            }
            let choice = preds[class]
                .iter()
                .map(|api| {
                    let (keys, path) = &best[api.parent_class.as_str()];
                    let mut k = keys.clone();
                    k.push(step_key(api));
                    let mut p = path.clone();
                    p.push(*api);
                    (k, p)
                })
                .min_by(|a, b| a.0.cmp(&b.0))
                .expect("reachable class has a producer");
            best.insert(class, choice);
        }
        best.remove(target).map(|(_, p)| p).unwrap_or_default()
    }

    /// Replays a chain's types from its first receiver; returns the type it
    /// produces or a description of the first discontinuity.
    pub fn replay(&self, chain: &CallChain) -> Result<TypeRef, String> {
        let mut recv: Option<String> = None;
        let mut produced = TypeRef::Void;
        for (i, step) in chain.steps.iter().enumerate() {
            let api = self.api(&step.api).ok_or_else(|| format!("step {i}: unknown api {}", step.api))?;
            match &recv {
                None if self.catalog.is_root(&api.parent_class) => {}
                None => return Err(format!("step 0 ({}) does not start at a host root", api.id)),
                Some(r) if *r == api.parent_class => {}
                Some(r) => return Err(format!("step {i} ({}) expects {}, got {r}", api.id, api.parent_class)),
            }
            if api.returns.is_array() && !step.take_first && i + 1 < chain.steps.len() {
                return Err(format!("step {i} ({}) returns an array without index-0 extraction", api.id));
            }
            produced = match (&api.returns, step.take_first) {
                (TypeRef::ArrayOf(c), true) => TypeRef::Class(c.clone()),
                (t, _) => t.clone(),
            };
            recv = produced.class_name().map(str::to_string);
        }
        Ok(produced)
    }

    /// Graphviz rendering: boxes for classes, ellipses for methods, solid
    /// ownership edges and dashed return edges.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph deps {\n  rankdir=LR;\n");
        for c in &self.class_nodes {
            let shape = if self.catalog.is_root(c) { "doubleoctagon" } else { "box" };
            let _ = writeln!(out, "  \"{c}\" [shape={shape}];");
        }
        for ext in self.catalog.external_types() {
            if !self.class_nodes.contains(ext) {
                let _ = writeln!(out, "  \"{ext}\" [shape=box, style=dotted];");
            }
        }
        for (class, methods) in &self.method_edges {
            for m in methods {
                let _ = writeln!(out, "  \"{m}\" [shape=ellipse, label=\"{}\"];", &m[class.len() + 1..]);
                let _ = writeln!(out, "  \"{class}\" -> \"{m}\";");
                if let Some(c) = self.return_edges.get(m).and_then(|t| t.class_name()) {
                    let label = if self.return_edges[m].is_array() { ", label=\"[]\"" } else { "" };
                    let _ = writeln!(out, "  \"{m}\" -> \"{c}\" [style=dashed{label}];");
                }
            }
        }
        out.push_str("}\n");
        out
    }
}
