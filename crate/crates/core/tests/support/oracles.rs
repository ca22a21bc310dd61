//! Brute-force reference implementations used by the integration and
//! acceptance tests. They share no code with the generator.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use scopeprobe_core::catalog::{ApiSpec, Catalog, ParamKind, TypeRef};
use scopeprobe_core::classifier::{Operation, PermissionLabel};

fn internal_return<'a>(cat: &Catalog, api: &'a ApiSpec) -> Option<&'a str> {
    match &api.returns {
        TypeRef::Class(c) | TypeRef::ArrayOf(c) if cat.has_class(c) => Some(c),
        _ => None,
    }
}

fn primitive_only(api: &ApiSpec) -> bool {
    api.params
        .iter()
        .all(|p| !matches!(p.kind, ParamKind::Class | ParamKind::Enum))
}

/// Classes some chain of primitive-only calls reaches from a root, by
/// fixpoint iteration.
pub fn producible_classes(cat: &Catalog) -> BTreeSet<String> {
    let mut reach: BTreeSet<String> = cat.roots().values().cloned().collect();
    loop {
        let before = reach.len();
        for api in cat.apis() {
            if reach.contains(&api.parent_class) && primitive_only(api) {
                if let Some(r) = internal_return(cat, api) {
                    reach.insert(r.to_string());
                }
            }
        }
        if reach.len() == before {
            return reach;
        }
    }
}

/// One discovered case: target API and the API that discovered its
/// receiver class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleCase {
    pub api: String,
    pub discovered_by: Option<String>,
}

/// Breadth-first discovery with an explicit visited set. APIs with enum
/// parameters or class parameters nothing can produce are skipped.
pub fn bfs_oracle(cat: &Catalog, labels: &BTreeMap<String, PermissionLabel>) -> Vec<OracleCase> {
    let producible = producible_classes(cat);
    let mut visited: BTreeSet<String> = BTreeSet::new();
    let mut queue = VecDeque::new();
    for root in cat.roots().values() {
        visited.insert(root.clone());
        queue.push_back((root.clone(), None::<String>));
    }
    let mut out = Vec::new();
    while let Some((class, by)) = queue.pop_front() {
        let mut methods: Vec<&ApiSpec> = cat.apis().filter(|a| a.parent_class == class).collect();
        methods.sort_by_key(|a| (labels[&a.id].operation != Operation::View, !a.params.is_empty(), a.id.clone()));
        for api in methods {
            let usable = api.params.iter().all(|p| match p.kind {
                ParamKind::Enum => false,
                ParamKind::Class => producible.contains(&p.type_name),
                _ => true,
            });
            if !usable {
                continue;
            }
            out.push(OracleCase {
                api: api.id.clone(),
                discovered_by: by.clone(),
            });
            if let Some(r) = internal_return(cat, api) {
                if !visited.contains(r) {
                    visited.insert(r.to_string());
                    queue.push_back((r.to_string(), Some(api.id.clone())));
                }
            }
        }
    }
    out
}

/// Length of the shortest primitive-only chain from a root to `target`,
/// found by enumerating every chain of at most `max_len` calls.
pub fn min_chain_len(cat: &Catalog, target: &str, max_len: usize) -> Option<usize> {
    fn walk(cat: &Catalog, class: &str, depth: usize, max_len: usize, target: &str, best: &mut Option<usize>) {
        if depth == max_len {
            return;
        }
        for api in cat.apis().filter(|a| a.parent_class == class && primitive_only(a)) {
            if let Some(r) = internal_return(cat, api) {
                if r == target {
                    *best = Some(best.map_or(depth + 1, |b| b.min(depth + 1)));
                }
                walk(cat, r, depth + 1, max_len, target, best);
            }
        }
    }
    let mut best = None;
    for root in cat.roots().values() {
        walk(cat, root, 0, max_len, target, &mut best);
    }
    best
}

/// Every minimum-length chain of at most `max_len` calls reaching `target`.
pub fn shortest_chains(cat: &Catalog, target: &str, max_len: usize) -> Vec<Vec<String>> {
    let Some(min) = min_chain_len(cat, target, max_len) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut stack: Vec<(String, Vec<String>)> = cat.roots().values().map(|r| (r.clone(), Vec::new())).collect();
    while let Some((class, path)) = stack.pop() {
        if path.len() == min {
            continue;
        }
        for api in cat.apis().filter(|a| a.parent_class == class && primitive_only(a)) {
            if let Some(r) = internal_return(cat, api) {
                let mut p = path.clone();
                p.push(api.id.clone());
                if r == target && p.len() == min {
                    out.push(p.clone());
                }
                stack.push((r.to_string(), p));
            }
        }
    }
    out.sort();
    out
}

/// The shortest chain whose steps, keyed by (has parameters, id), compare
/// smallest.
pub fn lexicographic_chain(cat: &Catalog, target: &str, max_len: usize) -> Option<Vec<String>> {
    shortest_chains(cat, target, max_len).into_iter().min_by_key(|chain| {
        chain
            .iter()
            .map(|id| (!cat.api(id).unwrap().params.is_empty(), id.clone()))
            .collect::<Vec<_>>()
    })
}
