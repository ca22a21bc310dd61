//! Tutorial snippets: a tiny statement language of the form
//! `var x = recv.method(arg, ...);` and its conversion into argument plans.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::attrs::AttrRole;
use crate::catalog::{ApiSpec, Catalog, ParamKind, TypeRef};
use crate::graph::ChainStep;
use crate::testgen::{ArgPlan, ArgStrategy, ParamPlan};
use crate::value::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TutArg {
    Lit(Scalar),
    Var(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub var: Option<String>,
    pub receiver: String,
    pub method: String,
    pub args: Vec<TutArg>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TutorialError {
    #[error("cannot parse `{line}`: {reason}")]
    Syntax { line: String, reason: String },
    #[error("`{0}` is not a known call")]
    UnknownCall(String),
    #[error("variable `{0}` is never assigned")]
    UnboundVar(String),
    #[error("no statement calls `{0}`")]
    TargetMissing(String),
    #[error("unsupported construct: {0}")]
    Unsupported(String),
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

fn split_args(s: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    for c in s.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => {
                quote = None;
                cur.push(c);
            }
            (Some(_), c) => cur.push(c),
            (None, '\'' | '"') => {
                quote = Some(c);
                cur.push(c);
            }
            (None, ',') => out.push(std::mem::take(&mut cur)),
            (None, '(' | ')') => return Err("nested calls are not supported".into()),
            (None, c) => cur.push(c),
        }
    }
    if quote.is_some() {
        return Err("unterminated string".into());
    }
    if !cur.trim().is_empty() || !out.is_empty() {
        out.push(cur);
    }
    Ok(out.into_iter().map(|a| a.trim().to_string()).collect())
}

fn parse_arg(a: &str) -> Result<TutArg, String> {
    let unquote = |q: char| a.strip_prefix(q).and_then(|r| r.strip_suffix(q));
    if let Some(s) = unquote('\'').or_else(|| unquote('"')) {
        return Ok(TutArg::Lit(Scalar::Str(s.to_string())));
    }
    match a {
        "true" => return Ok(TutArg::Lit(Scalar::Bool(true))),
        "false" => return Ok(TutArg::Lit(Scalar::Bool(false))),
        _ => {}
    }
    if let Ok(i) = a.parse::<i64>() {
        return Ok(TutArg::Lit(Scalar::Int(i)));
    }
    if is_ident(a) {
        return Ok(TutArg::Var(a.to_string()));
    }
    Err(format!("unsupported argument `{a}`"))
}

pub fn parse_statement(line: &str) -> Result<Statement, TutorialError> {
    let err = |reason: &str| TutorialError::Syntax {
        line: line.to_string(),
        reason: reason.to_string(),
    };
    let mut s = line.trim().trim_end_matches(';').trim();
    let mut var = None;
    for kw in ["var ", "let ", "const "] {
        if let Some(rest) = s.strip_prefix(kw) {
            s = rest.trim_start();
            break;
        }
    }
    if let Some((lhs, rhs)) = s.split_once('=') {
        let lhs = lhs.trim();
        if !is_ident(lhs) {
            return Err(err("bad assignment target"));
        }
        var = Some(lhs.to_string());
        s = rhs.trim();
    }
    let open = s.find('(').ok_or_else(|| err("missing `(`"))?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(|| err("missing `)`"))?;
    let callee = &s[..open];
    let (receiver, method) = callee.split_once('.').ok_or_else(|| err("missing receiver"))?;
    if !is_ident(receiver) || !is_ident(method) {
        return Err(err("bad call"));
    }
    let args = split_args(inner)
        .map_err(|r| err(&r))?
        .iter()
        .map(|a| parse_arg(a))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|r| err(&r))?;
    Ok(Statement {
        var,
        receiver: receiver.to_string(),
        method: method.to_string(),
        args,
    })
}

pub fn parse(lines: &[String]) -> Result<Vec<Statement>, TutorialError> {
    lines
        .iter()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with("//"))
        .map(|l| parse_statement(l))
        .collect()
}

/// Kind used for attribute lookups made by `api`: the class it returns, or
/// its own class.
pub fn lookup_kind(api: &ApiSpec, catalog: &Catalog) -> String {
    api.returns
        .class_name()
        .filter(|c| catalog.has_class(c))
        .unwrap_or(&api.parent_class)
        .to_string()
}

/// Literal for a primitive parameter: resource-naming strings become
/// attribute lookups resolved at execution time.
fn literal_strategy(api: &ApiSpec, param: &str, lit: &Scalar, catalog: &Catalog) -> ArgStrategy {
    match (lit, AttrRole::infer(param)) {
        (Scalar::Str(_), Some(role)) => ArgStrategy::AttributeLookup {
            kind: lookup_kind(api, catalog),
            role,
        },
        _ => ArgStrategy::Literal { value: lit.clone() },
    }
}

struct Resolver<'a> {
    catalog: &'a Catalog,
    stmts: &'a [Statement],
    /// var -> index of its defining statement
    defs: BTreeMap<&'a str, usize>,
}

impl<'a> Resolver<'a> {
    fn api_of(&self, idx: usize) -> Result<&'a ApiSpec, TutorialError> {
        let st = &self.stmts[idx];
        let class = if self.catalog.is_root(&st.receiver) {
            st.receiver.clone()
        } else {
            let def = *self
                .defs
                .get(st.receiver.as_str())
                .filter(|d| **d < idx)
                .ok_or_else(|| TutorialError::UnboundVar(st.receiver.clone()))?;
            match &self.api_of(def)?.returns {
                TypeRef::Class(c) => c.clone(),
                other => return Err(TutorialError::Unsupported(format!("`{}` holds {other}", st.receiver))),
            }
        };
        let id = format!("{class}.{}", st.method);
        let api = self.catalog.api(&id).ok_or(TutorialError::UnknownCall(id))?;
        if api.params.len() != st.args.len() {
            return Err(TutorialError::Unsupported(format!("{} called with wrong arity", api.id)));
        }
        Ok(api)
    }

    /// Steps computing the value of statement `idx`, receivers first.
    fn chain(&self, idx: usize) -> Result<Vec<ChainStep>, TutorialError> {
        let st = &self.stmts[idx];
        let api = self.api_of(idx)?;
        let mut steps = if self.catalog.is_root(&st.receiver) {
            Vec::new()
        } else {
            self.chain(self.defs[st.receiver.as_str()])?
        };
        let mut plans = Vec::new();
        for (p, a) in api.params.iter().zip(&st.args) {
            let strategy = match a {
                TutArg::Lit(lit) => literal_strategy(api, &p.name, lit, self.catalog),
                TutArg::Var(v) => return Err(TutorialError::Unsupported(format!("variable argument `{v}` inside a chain"))),
            };
            plans.push(ParamPlan {
                name: p.name.clone(),
                strategy,
            });
        }
        steps.push(ChainStep {
            api: api.id.clone(),
            args: ArgPlan(plans),
            take_first: false,
        });
        Ok(steps)
    }
}

/// Per-parameter strategies for `api` taken from its tutorial snippet.
/// Parameters the snippet does not settle are absent from the map.
pub fn tutorial_strategies(api: &ApiSpec, catalog: &Catalog) -> Result<BTreeMap<String, ArgStrategy>, TutorialError> {
    let lines = api.tutorial.as_deref().unwrap_or(&[]);
    let stmts = parse(lines)?;
    let mut defs = BTreeMap::new();
    for (i, s) in stmts.iter().enumerate() {
        if let Some(v) = &s.var {
            defs.insert(v.as_str(), i);
        }
    }
    let r = Resolver {
        catalog,
        stmts: &stmts,
        defs,
    };
    let target = (0..stmts.len())
        .rev()
        .find(|&i| stmts[i].method == api.method_name)
        .ok_or_else(|| TutorialError::TargetMissing(api.id.clone()))?;
    if r.api_of(target)?.id != api.id {
        return Err(TutorialError::TargetMissing(api.id.clone()));
    }
    let mut out = BTreeMap::new();
    for (p, a) in api.params.iter().zip(&stmts[target].args) {
        let strategy = match (a, p.kind) {
            (TutArg::Var(v), ParamKind::Class) => {
                let def = *r
                    .defs
                    .get(v.as_str())
                    .filter(|d| **d < target)
                    .ok_or_else(|| TutorialError::UnboundVar(v.clone()))?;
                let produced = &r.api_of(def)?.returns;
                if produced.class_name() != Some(p.type_name.as_str()) || produced.is_array() {
                    return Err(TutorialError::Unsupported(format!("`{v}` is not a {}", p.type_name)));
                }
                ArgStrategy::TutorialLiteral { steps: r.chain(def)? }
            }
            (TutArg::Lit(lit), ParamKind::String | ParamKind::Integer | ParamKind::Boolean) => {
                literal_strategy(api, &p.name, lit, catalog)
            }
            _ => continue,
        };
        out.insert(p.name.clone(), strategy);
    }
    Ok(out)
}
