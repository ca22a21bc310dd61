//! Test-case generation: breadth-first discovery from the host roots,
//! parameter resolution and suite ordering.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attrs::AttrRole;
use crate::catalog::{ApiSpec, ParamKind, ParamSpec, TypeRef};
use crate::classifier::{sequence_phase, Operation, PermissionLabel};
use crate::graph::{CallChain, ChainStep, DepGraph, PathTieBreak};
use crate::remote::{suggest_integer_pair, RemoteEndpoint};
use crate::tutorial::{lookup_kind, tutorial_strategies};
use crate::value::Scalar;

/// Integers tried for free integer parameters.
pub const INTEGER_VALUES: [i64; 4] = [0, 1, 5, 10];
/// String written by content-style parameters.
pub const PROBE_STRING: &str = "scopeprobe";
/// Collaborator used by sharing calls. Not a member of any template.
pub const PROBE_EMAIL: &str = "mallory@outside.example";
/// Upper bound on argument combinations tried per step.
pub const MAX_COMBOS: usize = 4;
/// Used for dependent integer pairs when no remote model answers.
pub const FALLBACK_PAIR: [i64; 2] = [1, 2];

/// How one parameter gets its value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum ArgStrategy {
    /// Object built by replaying calls from a tutorial snippet.
    TutorialLiteral { steps: Vec<ChainStep> },
    /// Object built by the shortest producer chain.
    ProducerChain { chain: CallChain },
    /// A resource identifier observed at run time.
    AttributeLookup { kind: String, role: AttrRole },
    /// Values tried in turn.
    PrimitiveEnum { values: Vec<Scalar> },
    /// One half of a pair of integers constrained against each other.
    RemotePair {
        first: String,
        second: String,
        description: String,
        values: [i64; 2],
        remote: bool,
    },
    /// A literal copied from a tutorial.
    Literal { value: Scalar },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamPlan {
    pub name: String,
    #[serde(flatten)]
    pub strategy: ArgStrategy,
}

/// Strategies for every parameter of an API, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ArgPlan(pub Vec<ParamPlan>);

impl ArgPlan {
    /// Number of argument combinations the executor will try.
    pub fn combo_count(&self) -> usize {
        self.0
            .iter()
            .map(|p| match &p.strategy {
                ArgStrategy::PrimitiveEnum { values } => values.len(),
                _ => 1,
            })
            .max()
            .unwrap_or(1)
            .clamp(1, MAX_COMBOS)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub target_api: String,
    pub label: PermissionLabel,
    pub phase: u8,
    /// Position in discovery order.
    pub bfs_index: usize,
    #[serde(default)]
    pub depends_on: Option<String>,
    pub chain: CallChain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub api: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suite {
    pub cases: Vec<TestCase>,
    /// APIs dropped because a parameter could not be resolved.
    pub excluded: Vec<Exclusion>,
    /// APIs never reached from a host root.
    pub unreachable: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct GenConfig {
    pub tie_break: PathTieBreak,
    pub remote: Option<RemoteEndpoint>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("{0} has no permission label")]
    MissingLabel(String),
    #[error("dependency cycle through {0:?}")]
    CyclicDependency(Vec<String>),
    #[error("unresolvable parameter `{param}` of {api}: {reason}")]
    UnresolvableParameter { api: String, param: String, reason: String },
    #[error("suite line {line}: {reason}")]
    BadSuiteLine { line: usize, reason: String },
}

/// `second` bounds `first` from above: `column`/`columnEnd`,
/// `startOffset`/`endOffsetInclusive`.
pub fn is_dependent_pair(first: &str, second: &str) -> bool {
    if second.len() > first.len() && second.starts_with(first) && second[first.len()..] == *"End" {
        return true;
    }
    match (first.strip_prefix("start"), second.strip_prefix("end")) {
        (Some(a), Some(b)) => !a.is_empty() && b.starts_with(a),
        _ => false,
    }
}

fn is_email_param(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower.contains("email") || lower == "user" || lower == "recipient"
}

fn pair_partner<'a>(api: &'a ApiSpec, p: &'a ParamSpec) -> Option<(&'a str, &'a str)> {
    api.params.iter().filter(|q| q.kind == ParamKind::Integer).find_map(|q| {
        if is_dependent_pair(&p.name, &q.name) {
            Some((p.name.as_str(), q.name.as_str()))
        } else if is_dependent_pair(&q.name, &p.name) {
            Some((q.name.as_str(), p.name.as_str()))
        } else {
            None
        }
    })
}

fn pair_strategy(first: &str, second: &str, values: [i64; 2], remote: bool) -> ArgStrategy {
    ArgStrategy::RemotePair {
        first: first.to_string(),
        second: second.to_string(),
        description: format!("{second} must not be smaller than {first}"),
        values,
        remote,
    }
}

/// Strategy for a primitive parameter, or `None` for class and enum
/// parameters.
fn primitive_strategy(api: &ApiSpec, p: &ParamSpec, kind: &str) -> Option<ArgStrategy> {
    Some(match p.kind {
        ParamKind::String => match AttrRole::infer(&p.name) {
            Some(role) => ArgStrategy::AttributeLookup {
                kind: kind.to_string(),
                role,
            },
            None if is_email_param(&p.name) => ArgStrategy::PrimitiveEnum {
                values: vec![Scalar::Str(PROBE_EMAIL.into())],
            },
            None => ArgStrategy::PrimitiveEnum {
                values: vec![Scalar::Str(PROBE_STRING.into())],
            },
        },
        ParamKind::Integer => match pair_partner(api, p) {
            Some((a, b)) => pair_strategy(a, b, FALLBACK_PAIR, false),
            None => ArgStrategy::PrimitiveEnum {
                values: INTEGER_VALUES.iter().map(|i| Scalar::Int(*i)).collect(),
            },
        },
        ParamKind::Boolean => ArgStrategy::PrimitiveEnum {
            values: vec![Scalar::Bool(true), Scalar::Bool(false)],
        },
        ParamKind::Class | ParamKind::Enum => return None,
    })
}

/// Plan for a chain step: primitive parameters only, no remote calls.
pub fn primitive_plan(api: &ApiSpec) -> ArgPlan {
    let kind = api
        .returns
        .class_name()
        .unwrap_or(&api.parent_class)
        .to_string();
    ArgPlan(
        api.params
            .iter()
            .filter_map(|p| {
                primitive_strategy(api, p, &kind).map(|strategy| ParamPlan {
                    name: p.name.clone(),
                    strategy,
                })
            })
            .collect(),
    )
}

/// Picks a strategy for every parameter of `api`: tutorial first, then
/// producer chains for objects, then attribute lookups and enumerations
/// for primitives.
pub fn resolve_parameters(api: &ApiSpec, graph: &DepGraph, config: &GenConfig) -> Result<ArgPlan, GenError> {
    let catalog = graph.catalog();
    let unresolvable = |p: &ParamSpec, reason: String| GenError::UnresolvableParameter {
        api: api.id.clone(),
        param: p.name.clone(),
        reason,
    };
    let mut from_tutorial = BTreeMap::new();
    if api.tutorial.is_some() {
        match tutorial_strategies(api, catalog) {
            Ok(m) => from_tutorial = m,
            Err(e) => tracing::warn!(api = %api.id, error = %e, "tutorial ignored"),
        }
    }
    let kind = lookup_kind(api, catalog);
    let mut remote_pairs: BTreeMap<(String, String), ([i64; 2], bool)> = BTreeMap::new();
    let mut plans = Vec::with_capacity(api.params.len());
    for p in &api.params {
        let strategy = if let Some(s) = from_tutorial.remove(&p.name) {
            s
        } else {
            match p.kind {
                ParamKind::Enum => return Err(unresolvable(p, format!("enum type {}", p.type_name))),
                ParamKind::Class if !catalog.has_class(&p.type_name) => {
                    return Err(unresolvable(p, format!("external type {}", p.type_name)))
                }
                ParamKind::Class => {
                    let chain = graph
                        .shortest_producer_path(&p.type_name, config.tie_break)
                        .map_err(|e| unresolvable(p, e.to_string()))?;
                    ArgStrategy::ProducerChain { chain }
                }
                _ => match (primitive_strategy(api, p, &kind), &config.remote) {
                    (Some(ArgStrategy::RemotePair { first, second, .. }), Some(endpoint)) => {
                        let (values, remote) = *remote_pairs.entry((first.clone(), second.clone())).or_insert_with(|| {
                            match suggest_integer_pair(endpoint, api, &first, &second) {
                                Ok((lo, hi)) => ([lo, hi], true),
                                Err(e) => {
                                    tracing::warn!(api = %api.id, error = %e, "remote pair unavailable; using fallback");
                                    (FALLBACK_PAIR, false)
                                }
                            }
                        });
                        pair_strategy(&first, &second, values, remote)
                    }
                    (Some(s), _) => s,
                    (None, _) => unreachable!("primitive kinds always resolve"),
                },
            }
        };
        plans.push(ParamPlan {
            name: p.name.clone(),
            strategy,
        });
    }
    Ok(ArgPlan(plans))
}

/// Discovery order of a class's methods: views first, then parameterless
/// calls, then by id.
fn method_key<'a>(api: &'a ApiSpec, label: &PermissionLabel) -> (bool, bool, &'a str) {
    (label.operation != Operation::View, api.has_params(), api.id.as_str())
}

/// Breadth-first case discovery from every host root. A class is expanded
/// at most once; methods returning an already visited class are emitted
/// as leaves. The result is in discovery order; see [`generate_suite`].
pub fn discover(
    graph: &DepGraph,
    labels: &BTreeMap<String, PermissionLabel>,
    config: &GenConfig,
) -> Result<Suite, GenError> {
    let catalog = graph.catalog();
    let mut visited: BTreeSet<String> = graph.roots().values().cloned().collect();
    let mut queue: VecDeque<(String, Vec<ChainStep>, Option<String>)> =
        graph.roots().values().map(|r| (r.clone(), Vec::new(), None)).collect();
    let mut cases = Vec::new();
    let mut excluded = Vec::new();
    while let Some((class, prefix, discoverer)) = queue.pop_front() {
        let mut methods = Vec::new();
        for id in graph.methods_of(&class) {
            let api = graph.api(id).expect("graph edge names an api");
            let label = labels.get(id).ok_or_else(|| GenError::MissingLabel(id.clone()))?;
            methods.push((method_key(api, label), api, label));
        }
        methods.sort_by(|a, b| a.0.cmp(&b.0));
        for (_, api, label) in methods {
            let plan = match resolve_parameters(api, graph, config) {
                Ok(plan) => plan,
                Err(e) => {
                    tracing::info!(api = %api.id, error = %e, "excluded from suite");
                    excluded.push(Exclusion {
                        api: api.id.clone(),
                        reason: e.to_string(),
                    });
                    continue;
                }
            };
            let mut steps = prefix.clone();
            steps.push(ChainStep {
                api: api.id.clone(),
                args: plan,
                take_first: false,
            });
            if let Some(r) = api.returns.class_name().filter(|c| catalog.has_class(c)) {
                if visited.insert(r.to_string()) {
                    let mut next = steps.clone();
                    next.last_mut().unwrap().take_first = api.returns.is_array();
                    queue.push_back((r.to_string(), next, Some(api.id.clone())));
                }
            }
            cases.push(TestCase {
                id: api.id.clone(),
                target_api: api.id.clone(),
                label: label.clone(),
                phase: sequence_phase(label, &api.method_name),
                bfs_index: cases.len(),
                depends_on: discoverer.clone(),
                chain: CallChain {
                    steps,
                    produces: api.returns.clone(),
                },
            });
        }
    }
    let seen: BTreeSet<&str> = cases
        .iter()
        .map(|c| c.target_api.as_str())
        .chain(excluded.iter().map(|e| e.api.as_str()))
        .collect();
    let unreachable = catalog
        .apis()
        .map(|a| a.id.as_str())
        .filter(|id| !seen.contains(id))
        .map(str::to_string)
        .collect();
    Ok(Suite {
        cases,
        excluded,
        unreachable,
    })
}

/// Discovery followed by [`order_suite`].
pub fn generate_suite(
    graph: &DepGraph,
    labels: &BTreeMap<String, PermissionLabel>,
    config: &GenConfig,
) -> Result<Suite, GenError> {
    let mut suite = discover(graph, labels, config)?;
    suite.cases = order_suite(suite.cases)?;
    Ok(suite)
}

/// Cases in `(phase, discovery index)` order, each preceded by any of its
/// ancestors not yet placed. Dependencies outside the list are ignored.
pub fn order_suite(cases: Vec<TestCase>) -> Result<Vec<TestCase>, GenError> {
    let index: BTreeMap<&str, usize> = cases.iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();
    let mut turns: Vec<usize> = (0..cases.len()).collect();
    turns.sort_by(|&a, &b| {
        (cases[a].phase, cases[a].bfs_index, &cases[a].id).cmp(&(cases[b].phase, cases[b].bfs_index, &cases[b].id))
    });
    let mut placed = vec![false; cases.len()];
    let mut out = Vec::with_capacity(cases.len());
    for t in turns {
        let mut pending = vec![t];
        let mut cur = t;
        while let Some(&dep) = cases[cur].depends_on.as_deref().and_then(|d| index.get(d)) {
            if placed[dep] {
                break;
            }
            if pending.contains(&dep) {
                let mut cycle: Vec<String> = pending.iter().map(|&i| cases[i].id.clone()).collect();
                cycle.reverse();
                return Err(GenError::CyclicDependency(cycle));
            }
            pending.push(dep);
            cur = dep;
        }
        for i in pending.into_iter().rev() {
            if !placed[i] {
                placed[i] = true;
                out.push(i);
            }
        }
    }
    let mut slots: Vec<Option<TestCase>> = cases.into_iter().map(Some).collect();
    Ok(out.into_iter().map(|i| slots[i].take().unwrap()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderViolation {
    pub earlier: String,
    pub later: String,
    pub rule: &'static str,
}

/// Audits a suite's order. A pair is exempt when the earlier case had to be
/// placed early as an ancestor of some case at or before the later one.
pub fn check_order(cases: &[TestCase]) -> Vec<OrderViolation> {
    let pos: BTreeMap<&str, usize> = cases.iter().enumerate().map(|(i, c)| (c.id.as_str(), i)).collect();
    let mut first_dependent = vec![usize::MAX; cases.len()];
    let mut out = Vec::new();
    for (k, c) in cases.iter().enumerate() {
        let mut seen = BTreeSet::new();
        let mut cur = c;
        while let Some(&d) = cur.depends_on.as_deref().and_then(|d| pos.get(d)) {
            if !seen.insert(d) {
                break;
            }
            if d > k && cur.id == c.id {
                out.push(OrderViolation {
                    earlier: c.id.clone(),
                    later: cases[d].id.clone(),
                    rule: "dependency-first",
                });
            }
            first_dependent[d] = first_dependent[d].min(k);
            cur = &cases[d];
        }
    }
    for (i, a) in cases.iter().enumerate() {
        for (j, b) in cases.iter().enumerate().skip(i + 1) {
            if a.label.object_kind != b.label.object_kind || first_dependent[i] <= j {
                continue;
            }
            let (la, lb) = (&a.label, &b.label);
            let rule = if !la.touches_sharing && !lb.touches_sharing {
                if lb.operation == Operation::Create && la.operation != Operation::Create {
                    Some("create-first")
                } else if la.operation == Operation::Delete && lb.operation != Operation::Delete {
                    Some("delete-last")
                } else {
                    None
                }
            } else if la.touches_sharing && lb.touches_sharing {
                if b.phase == 0 && a.phase != 0 {
                    Some("collaborator-add-first")
                } else if a.phase == 4 && b.phase != 4 {
                    Some("collaborator-removal-last")
                } else {
                    None
                }
            } else {
                None
            };
            if let Some(rule) = rule {
                out.push(OrderViolation {
                    earlier: a.id.clone(),
                    later: b.id.clone(),
                    rule,
                });
            }
        }
    }
    out
}

/// One JSON object per line.
pub fn to_jsonl(cases: &[TestCase]) -> String {
    let mut out = String::new();
    for c in cases {
        out.push_str(&serde_json::to_string(c).expect("test cases serialize"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<TestCase>, GenError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| GenError::BadSuiteLine {
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Type produced by a chain replayed from scratch, for audits.
pub fn chain_target(case: &TestCase) -> Option<&str> {
    case.chain.steps.last().map(|s| s.api.as_str())
}

impl Suite {
    pub fn total_accounted(&self) -> usize {
        self.cases.len() + self.excluded.len() + self.unreachable.len()
    }
}

impl TestCase {
    pub fn produces(&self) -> &TypeRef {
        &self.chain.produces
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::classifier::{classify_catalog, labels_only, ClassifierConfig};
    use crate::graph::build_graph;

    fn bundled_suite() -> Suite {
        let cat = bundled::workspace_catalog();
        let labels = labels_only(&classify_catalog(&cat, &ClassifierConfig::default()));
        generate_suite(&build_graph(&cat).unwrap(), &labels, &GenConfig::default()).unwrap()
    }

    fn case(id: &str, op: Operation, sharing: bool, phase: u8, idx: usize, dep: Option<&str>) -> TestCase {
        TestCase {
            id: id.into(),
            target_api: id.into(),
            label: PermissionLabel {
                operation: op,
                object_kind: "K".into(),
                touches_sharing: sharing,
            },
            phase,
            bfs_index: idx,
            depends_on: dep.map(str::to_string),
            chain: CallChain {
                steps: vec![],
                produces: TypeRef::Void,
            },
        }
    }

    fn ids(cases: &[TestCase]) -> Vec<&str> {
        cases.iter().map(|c| c.id.as_str()).collect()
    }

    #[test]
    fn dependent_pairs() {
        assert!(is_dependent_pair("column", "columnEnd"));
        assert!(is_dependent_pair("startOffset", "endOffsetInclusive"));
        assert!(!is_dependent_pair("columnEnd", "column"));
        assert!(!is_dependent_pair("row", "column"));
        assert!(!is_dependent_pair("start", "end"));
    }

    #[test]
    fn create_view_delete_order() {
        let cases = vec![
            case("deleteRow", Operation::Delete, false, 5, 0, None),
            case("getCell", Operation::View, false, 1, 1, None),
            case("insertRow", Operation::Create, false, 0, 2, None),
        ];
        let ordered = order_suite(cases).unwrap();
        assert_eq!(ids(&ordered), ["insertRow", "getCell", "deleteRow"]);
        assert!(check_order(&ordered).is_empty());
    }

    #[test]
    fn collaborator_order() {
        let cases = vec![
            case("addEditor", Operation::Modify, true, 0, 0, None),
            case("removeEditor", Operation::Modify, true, 4, 1, None),
            case("getEditors", Operation::View, true, 1, 2, None),
        ];
        let ordered = order_suite(cases).unwrap();
        assert_eq!(ids(&ordered), ["addEditor", "getEditors", "removeEditor"]);
        assert!(check_order(&ordered).is_empty());
    }

    #[test]
    fn ancestors_pulled_forward() {
        let cases = vec![
            case("getBody", Operation::View, false, 1, 0, None),
            case("appendParagraph", Operation::Create, false, 0, 1, Some("getBody")),
        ];
        let ordered = order_suite(cases).unwrap();
        assert_eq!(ids(&ordered), ["getBody", "appendParagraph"]);
        assert!(check_order(&ordered).is_empty());
        assert_eq!(check_order(&[ordered[1].clone(), ordered[0].clone()]).len(), 1);
    }

    #[test]
    fn cycles_rejected() {
        let cases = vec![
            case("a", Operation::View, false, 1, 0, Some("b")),
            case("b", Operation::View, false, 1, 1, Some("a")),
        ];
        assert!(matches!(order_suite(cases), Err(GenError::CyclicDependency(_))));
    }

    #[test]
    fn single_case_is_identity() {
        let c = vec![case("x", Operation::Modify, false, 3, 0, None)];
        assert_eq!(order_suite(c.clone()).unwrap(), c);
    }

    #[test]
    fn bundled_suite_shape() {
        let suite = bundled_suite();
        let cat = bundled::workspace_catalog();
        assert_eq!(suite.total_accounted(), cat.api_count());
        assert!(check_order(&suite.cases).is_empty(), "{:?}", check_order(&suite.cases));
        let excluded: Vec<&str> = suite.excluded.iter().map(|e| e.api.as_str()).collect();
        assert!(excluded.contains(&"Presentation.appendSlide"));
        assert!(excluded.contains(&"File.setSharing"));
        let by_id: BTreeMap<&str, &TestCase> = suite.cases.iter().map(|c| (c.id.as_str(), c)).collect();
        let graph = build_graph(&cat).unwrap();
        for c in &suite.cases {
            assert_eq!(chain_target(c), Some(c.target_api.as_str()));
            assert!(graph.replay(&c.chain).is_ok(), "{}", c.id);
        }
        let copy = &by_id["Range.copyFormatToRange"].chain.steps.last().unwrap().args;
        assert!(matches!(
            &copy.0[2].strategy,
            ArgStrategy::RemotePair { first, values: [1, 2], .. } if first == "column"
        ));
        let cursor = &by_id["Document.setCursor"].chain.steps.last().unwrap().args;
        assert!(matches!(cursor.0[0].strategy, ArgStrategy::TutorialLiteral { .. }));
        let copy_to = &by_id["Sheet.copyTo"].chain.steps.last().unwrap().args;
        assert!(matches!(copy_to.0[0].strategy, ArgStrategy::ProducerChain { .. }));
    }

    #[test]
    fn jsonl_roundtrip() {
        let suite = bundled_suite();
        let text = to_jsonl(&suite.cases);
        assert_eq!(from_jsonl(&text).unwrap(), suite.cases);
        assert_eq!(to_jsonl(&bundled_suite().cases), text);
        assert!(from_jsonl("{nope").is_err());
    }

    #[test]
    fn mini_catalog_prunes_revisits() {
        let cat = bundled::mini_catalog();
        let labels = labels_only(&classify_catalog(&cat, &ClassifierConfig::default()));
        let suite = discover(&build_graph(&cat).unwrap(), &labels, &GenConfig::default()).unwrap();
        let expanded: BTreeSet<&str> = suite.cases.iter().filter_map(|c| c.depends_on.as_deref()).collect();
        // only one producer of Document is ever used as a prefix
        let doc_producers = expanded.iter().filter(|id| id.starts_with("DocumentApp.")).count();
        assert_eq!(doc_producers, 1);
        assert!(suite.cases.iter().any(|c| c.id == "Document.insertText"));
    }
}
