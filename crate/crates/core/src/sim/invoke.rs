//! Semantics of host API calls against a [`WorkspaceState`].
//!
//! The effect of a call is derived from its catalog signature and label:
//! app-level calls open, list or create top-level resources; calls that
//! return another class navigate to (or create) descendants; the rest act
//! on the receiver itself.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::access::{check_access_with, Decision, Enforcement, Subject};
use super::model::Role;
use super::state::{url_of, NodeAttrs, WorkspaceState};
use super::SimEnv;
use crate::attrs::AttrRole;
use crate::catalog::{ApiSpec, ParamKind, Primitive, TypeRef};
use crate::classifier::{method_stem, Operation, PermissionLabel};
use crate::value::Value;

/// The platform's message for every denied call.
pub const PERMISSION_MESSAGE: &str = "Exception: You do not have permission to access the requested document.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvokeError {
    #[error("{}", PERMISSION_MESSAGE)]
    Permission(Decision),
    #[error("TypeError: {0}")]
    TypeError(String),
    #[error("NotFound: {0}")]
    NotFound(String),
    #[error("BadArgument: {0}")]
    BadArgument(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectRef {
    pub id: String,
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub value: Value,
    /// Objects the call was checked against or created.
    pub touched: Vec<ObjectRef>,
}

/// The add-on and the user on whose behalf it runs.
#[derive(Debug, Clone, Copy)]
pub struct AddonCtx<'a> {
    pub installer: &'a str,
    pub addon: &'a str,
}

#[derive(Debug)]
enum ShareChange {
    Grant { user: String, role: Role },
    Revoke { user: String, role: Role },
    TransferOwner { user: String },
}

#[derive(Debug)]
enum Effect {
    None,
    CreateTop { kind: String, attrs: NodeAttrs },
    CreateChild { parent: String, kind: String, attrs: NodeAttrs },
    Copy { src: String },
    SetHidden { node: String, hidden: bool },
    SetName { node: String, name: String },
    SetContent { node: String, content: String },
    AppendContent { node: String, text: String },
    Comment { node: String, text: String },
    Remove { node: String },
    RemoveNth { parent: String, kind: String, n: usize },
    ClearContent { node: String },
    DeleteSpan { node: String, start: usize, end: usize },
    Share { resource: String, change: ShareChange },
}

#[derive(Debug)]
enum Outcome {
    Value(Value),
    /// The created object, or the receiver when the API returns its own class.
    Created,
}

struct Plan {
    targets: Vec<Option<String>>,
    effect: Effect,
    outcome: Outcome,
    /// Argument problems surface only after the access check passes.
    arg_error: Option<InvokeError>,
}

impl Plan {
    fn on(target: Option<String>, effect: Effect, outcome: Outcome) -> Plan {
        Plan {
            targets: vec![target],
            effect,
            outcome,
            arg_error: None,
        }
    }
}

/// Calls one host API for an add-on.
///
/// Level 1 and level 2 checks run on every object the call reads or
/// writes; any denial returns [`InvokeError::Permission`] with the state
/// untouched. Faults in `state` matching the API relax the checks.
pub fn invoke_host_api(
    env: &SimEnv,
    state: &mut WorkspaceState,
    ctx: AddonCtx<'_>,
    api_id: &str,
    receiver: &Value,
    args: &[Value],
) -> Result<Invocation, InvokeError> {
    let spec = env
        .catalog
        .api(api_id)
        .ok_or_else(|| InvokeError::NotFound(format!("no host API `{api_id}`")))?;
    let label = env
        .labels
        .get(api_id)
        .ok_or_else(|| InvokeError::NotFound(format!("`{api_id}` has no permission label")))?;
    let recv = check_receiver(env, state, spec, receiver)?;
    check_args(spec, args)?;

    let plan = plan_call(env, state, spec, label, recv.as_deref(), args)?;
    let enforce = Enforcement::for_api(&state.faults, api_id);
    let subject = Subject::Addon {
        installer: ctx.installer,
        addon: ctx.addon,
    };
    for t in &plan.targets {
        let d = check_access_with(state, &env.matrix, subject, label, t.as_deref(), enforce);
        if d != Decision::Allow {
            return Err(InvokeError::Permission(d));
        }
    }
    if let Some(e) = plan.arg_error {
        return Err(e);
    }

    let mut touched: Vec<ObjectRef> = plan
        .targets
        .iter()
        .flatten()
        .map(|id| ObjectRef {
            id: id.clone(),
            kind: state.node(id).map(|n| n.kind.clone()).unwrap_or_default(),
        })
        .collect();
    let created = apply(state, plan.effect, ctx.installer)?;
    let value = match plan.outcome {
        Outcome::Value(v) => v,
        Outcome::Created => created_value(state, spec, recv.as_deref(), created.as_deref()),
    };
    if let Some(id) = created {
        let kind = state.node(&id).map(|n| n.kind.clone()).unwrap_or_default();
        touched.push(ObjectRef { id, kind });
    }
    record_observed(state, spec, &value);
    Ok(Invocation { value, touched })
}

fn check_receiver(
    env: &SimEnv,
    state: &WorkspaceState,
    spec: &ApiSpec,
    receiver: &Value,
) -> Result<Option<String>, InvokeError> {
    match receiver {
        Value::App(c) if *c == spec.parent_class && env.catalog.is_root(c) => Ok(None),
        Value::Obj { id, kind } if *kind == spec.parent_class => match state.node(id) {
            Some(n) if n.kind == *kind => Ok(Some(id.clone())),
            _ => Err(InvokeError::NotFound(format!("object `{id}` no longer exists"))),
        },
        other => Err(InvokeError::TypeError(format!(
            "{} cannot be called on {}",
            spec.id,
            describe_value(other)
        ))),
    }
}

fn describe_value(v: &Value) -> String {
    match v {
        Value::Obj { kind, id } => format!("{kind} `{id}`"),
        Value::App(c) => c.clone(),
        Value::Null => "null".into(),
        Value::List(_) => "a list".into(),
        Value::Str(_) => "a string".into(),
        Value::Int(_) => "an integer".into(),
        Value::Bool(_) => "a boolean".into(),
    }
}

fn check_args(spec: &ApiSpec, args: &[Value]) -> Result<(), InvokeError> {
    if args.len() != spec.params.len() {
        return Err(InvokeError::TypeError(format!(
            "{} takes {} arguments, got {}",
            spec.id,
            spec.params.len(),
            args.len()
        )));
    }
    for (p, a) in spec.params.iter().zip(args) {
        let ok = match (p.kind, a) {
            (ParamKind::String, Value::Str(_)) => true,
            (ParamKind::Integer, Value::Int(_)) => true,
            (ParamKind::Boolean, Value::Bool(_)) => true,
            (ParamKind::Class, Value::Obj { kind, .. }) => *kind == p.type_name,
            _ => false,
        };
        if !ok {
            return Err(InvokeError::TypeError(format!(
                "parameter `{}` of {} expects {}, got {}",
                p.name,
                spec.id,
                p.type_name,
                describe_value(a)
            )));
        }
    }
    Ok(())
}

/// Position-like integers are 1-based.
fn one_based(param: &str) -> bool {
    let l = param.to_ascii_lowercase();
    l.contains("row") || l.contains("column") || l.contains("position")
}

fn int_arg_error(spec: &ApiSpec, args: &[Value]) -> Option<InvokeError> {
    let ints: Vec<(&str, i64)> = spec
        .params
        .iter()
        .zip(args)
        .filter_map(|(p, a)| a.as_int().map(|v| (p.name.as_str(), v)))
        .collect();
    for &(name, v) in &ints {
        let min = if one_based(name) { 1 } else { 0 };
        if v < min {
            return Some(InvokeError::BadArgument(format!("`{name}` must be at least {min}, got {v}")));
        }
    }
    for &(a, va) in &ints {
        for &(b, vb) in &ints {
            if crate::testgen::is_dependent_pair(a, b) && vb < va {
                return Some(InvokeError::BadArgument(format!("`{b}` ({vb}) must not be less than `{a}` ({va})")));
            }
        }
    }
    None
}

fn str_args<'a>(spec: &'a ApiSpec, args: &'a [Value]) -> impl Iterator<Item = (&'a str, &'a str)> {
    spec.params
        .iter()
        .zip(args)
        .filter_map(|(p, a)| a.as_str().map(|s| (p.name.as_str(), s)))
}

fn first_int(args: &[Value]) -> Option<i64> {
    args.iter().find_map(Value::as_int)
}

/// A child class of `class` whose name appears in `method` (`deleteRow`).
fn child_kind_in_name(env: &SimEnv, class: &str, method: &str) -> Option<String> {
    env.catalog
        .classes()
        .get(class)?
        .children
        .iter()
        .find(|c| method.contains(c.as_str()))
        .cloned()
}

fn attrs_from_strings(spec: &ApiSpec, args: &[Value]) -> NodeAttrs {
    let mut attrs = NodeAttrs::default();
    for (name, value) in str_args(spec, args) {
        if AttrRole::infer(name) == Some(AttrRole::Name) && attrs.name.is_none() {
            attrs.name = Some(value.to_string());
        } else if attrs.content.is_none() {
            attrs.content = Some(value.to_string());
        }
    }
    attrs
}

fn internal_class<'a>(env: &SimEnv, t: &'a TypeRef) -> Option<&'a str> {
    t.class_name().filter(|c| env.catalog.has_class(c))
}

fn plan_call(
    env: &SimEnv,
    state: &WorkspaceState,
    spec: &ApiSpec,
    label: &PermissionLabel,
    recv: Option<&str>,
    args: &[Value],
) -> Result<Plan, InvokeError> {
    let mut plan = match recv {
        None => plan_app_call(env, state, spec, label, args)?,
        Some(r) => plan_object_call(env, state, spec, label, r, args)?,
    };
    if plan.arg_error.is_none() {
        plan.arg_error = int_arg_error(spec, args);
    }
    Ok(plan)
}

fn plan_app_call(
    env: &SimEnv,
    state: &WorkspaceState,
    spec: &ApiSpec,
    label: &PermissionLabel,
    args: &[Value],
) -> Result<Plan, InvokeError> {
    let Some(kind) = internal_class(env, &spec.returns) else {
        return Ok(Plan::on(None, Effect::None, Outcome::Value(Value::Null)));
    };
    let stem = method_stem(&spec.method_name);
    if label.operation == Operation::Create || stem == "new" {
        let effect = Effect::CreateTop {
            kind: kind.to_string(),
            attrs: attrs_from_strings(spec, args),
        };
        return Ok(Plan::on(None, effect, Outcome::Created));
    }
    let all: Vec<&str> = state
        .preorder()
        .into_iter()
        .filter(|n| state.node(n).unwrap().kind == kind)
        .collect();
    select(state, spec, kind, all, args, None)
}

/// Picks objects of `kind` from `candidates`, filtered by any id/url/name
/// string argument. Arrays return every match; classes return the first.
fn select(
    state: &WorkspaceState,
    spec: &ApiSpec,
    kind: &str,
    mut candidates: Vec<&str>,
    args: &[Value],
    recv: Option<&str>,
) -> Result<Plan, InvokeError> {
    for (pname, value) in str_args(spec, args) {
        let Some(role) = AttrRole::infer(pname) else { continue };
        candidates.retain(|id| match role {
            AttrRole::Id => *id == value,
            AttrRole::Url => url_of(kind, id) == value,
            AttrRole::Name => state.node(id).unwrap().attrs.name.as_deref() == Some(value),
        });
    }
    let obj = |id: &str| Value::Obj {
        id: id.to_string(),
        kind: kind.to_string(),
    };
    let mut targets: Vec<Option<String>> = recv.map(|r| Some(r.to_string())).into_iter().collect();
    let value = if spec.returns.is_array() {
        targets.extend(candidates.iter().map(|c| Some(c.to_string())));
        Value::List(candidates.iter().map(|c| obj(c)).collect())
    } else {
        let first = candidates
            .first()
            .ok_or_else(|| InvokeError::NotFound(format!("{}: no matching {kind}", spec.id)))?;
        targets.push(Some(first.to_string()));
        obj(first)
    };
    if targets.is_empty() {
        targets.push(None);
    }
    Ok(Plan {
        targets,
        effect: Effect::None,
        outcome: Outcome::Value(value),
        arg_error: None,
    })
}

fn plan_object_call(
    env: &SimEnv,
    state: &WorkspaceState,
    spec: &ApiSpec,
    label: &PermissionLabel,
    recv: &str,
    args: &[Value],
) -> Result<Plan, InvokeError> {
    let node = state.node(recv).expect("receiver checked");
    let rkind = node.kind.as_str();
    let op = label.operation;
    let stem = method_stem(&spec.method_name);
    let lower = spec.method_name.to_ascii_lowercase();
    let target = Some(recv.to_string());

    if label.touches_sharing {
        return plan_sharing(state, spec, op, recv, args);
    }

    if let Some(kind) = internal_class(env, &spec.returns).filter(|k| *k != rkind) {
        if op == Operation::Create {
            let effect = Effect::CreateChild {
                parent: recv.to_string(),
                kind: kind.to_string(),
                attrs: attrs_from_strings(spec, args),
            };
            return Ok(Plan::on(target, effect, Outcome::Created));
        }
        let found: Vec<&str> = state
            .descendants(recv)
            .into_iter()
            .filter(|n| state.node(n).unwrap().kind == kind)
            .collect();
        return select(state, spec, kind, found, args, Some(recv));
    }

    let returns_self = matches!(&spec.returns, TypeRef::Class(c) if c == rkind);
    let self_value = |v: Value| {
        if returns_self {
            Value::Obj {
                id: recv.to_string(),
                kind: rkind.to_string(),
            }
        } else {
            v
        }
    };
    let first_str = str_args(spec, args).next().map(|(_, s)| s.to_string());

    let plan = match op {
        Operation::View => {
            let value = match &spec.returns {
                TypeRef::Primitive(Primitive::String) => match lower.as_str() {
                    "getname" | "gettitle" => node.attrs.name.clone().map(Value::Str).unwrap_or(Value::Null),
                    "getid" | "getobjectid" => Value::Str(recv.to_string()),
                    "geturl" => Value::Str(url_of(rkind, recv)),
                    _ => node.attrs.content.clone().map(Value::Str).unwrap_or(Value::Null),
                },
                TypeRef::Primitive(Primitive::Boolean) if lower == "ishidden" => Value::Bool(node.attrs.hidden),
                _ => self_value(Value::Null),
            };
            Plan::on(target, Effect::None, Outcome::Value(value))
        }
        Operation::Comment => Plan::on(
            target,
            Effect::Comment {
                node: recv.to_string(),
                text: first_str.unwrap_or_default(),
            },
            Outcome::Value(self_value(Value::Null)),
        ),
        Operation::Create => {
            if let Some(child) = child_kind_in_name(env, rkind, &spec.method_name) {
                let mut p = Plan::on(
                    target,
                    Effect::CreateChild {
                        parent: recv.to_string(),
                        kind: child.clone(),
                        attrs: attrs_from_strings(spec, args),
                    },
                    Outcome::Value(self_value(Value::Null)),
                );
                let count = count_children(state, recv, &child);
                if let Some(n) = first_int(args).filter(|n| *n as usize > count) {
                    p.arg_error = Some(InvokeError::BadArgument(format!("position {n} beyond {count} {child}s")));
                }
                p
            } else if returns_self && matches!(stem, "copy" | "make") {
                Plan::on(target, Effect::Copy { src: recv.to_string() }, Outcome::Created)
            } else if returns_self && stem == "create" {
                let effect = Effect::CreateChild {
                    parent: recv.to_string(),
                    kind: rkind.to_string(),
                    attrs: attrs_from_strings(spec, args),
                };
                Plan::on(target, effect, Outcome::Created)
            } else {
                let effect = Effect::AppendContent {
                    node: recv.to_string(),
                    text: first_str.unwrap_or_default(),
                };
                Plan::on(target, effect, Outcome::Value(self_value(Value::Null)))
            }
        }
        Operation::Modify => {
            let effect = match stem {
                "hide" => Effect::SetHidden {
                    node: recv.to_string(),
                    hidden: true,
                },
                "unhide" | "show" => Effect::SetHidden {
                    node: recv.to_string(),
                    hidden: false,
                },
                "rename" => Effect::SetName {
                    node: recv.to_string(),
                    name: first_str.unwrap_or_default(),
                },
                "set" if lower.ends_with("name") || lower.ends_with("title") => Effect::SetName {
                    node: recv.to_string(),
                    name: first_str.unwrap_or_default(),
                },
                "set" | "edit" | "replace" | "update" if first_str.is_some() => Effect::SetContent {
                    node: recv.to_string(),
                    content: first_str.unwrap(),
                },
                _ => Effect::None,
            };
            let mut p = Plan::on(target, effect, Outcome::Value(self_value(Value::Null)));
            if let Effect::SetHidden { .. } = p.effect {
                if !super::state::HIDEABLE_KINDS.contains(&rkind) {
                    p.arg_error = Some(InvokeError::BadArgument(format!("{rkind} cannot be hidden")));
                }
            }
            p
        }
        Operation::Delete => {
            let ints: Vec<i64> = args.iter().filter_map(Value::as_int).collect();
            let mut arg_error = None;
            let effect = if let Some(child) = child_kind_in_name(env, rkind, &spec.method_name) {
                let count = count_children(state, recv, &child);
                let n = ints.first().copied().unwrap_or(1);
                if n < 1 || n as usize > count {
                    arg_error = Some(InvokeError::BadArgument(format!("no {child} at position {n}")));
                }
                Effect::RemoveNth {
                    parent: recv.to_string(),
                    kind: child,
                    n: n.max(1) as usize,
                }
            } else if stem == "clear" {
                Effect::ClearContent { node: recv.to_string() }
            } else if ints.len() >= 2 {
                Effect::DeleteSpan {
                    node: recv.to_string(),
                    start: ints[0].max(0) as usize,
                    end: ints[1].max(0) as usize,
                }
            } else {
                Effect::Remove { node: recv.to_string() }
            };
            let outcome = match effect {
                Effect::Remove { .. } => Outcome::Value(Value::Null),
                _ => Outcome::Value(self_value(Value::Null)),
            };
            Plan {
                targets: vec![target],
                effect,
                outcome,
                arg_error,
            }
        }
    };
    Ok(plan)
}

fn count_children(state: &WorkspaceState, parent: &str, kind: &str) -> usize {
    state.node(parent).map_or(0, |n| {
        n.children
            .iter()
            .filter(|c| state.node(c).is_some_and(|c| c.kind == kind))
            .count()
    })
}

fn role_in_name(lower: &str) -> Option<Role> {
    [
        ("editor", Role::Editor),
        ("commenter", Role::Commenter),
        ("viewer", Role::Viewer),
        ("owner", Role::Owner),
    ]
    .into_iter()
    .find(|(w, _)| lower.contains(w))
    .map(|(_, r)| r)
}

fn plan_sharing(
    state: &WorkspaceState,
    spec: &ApiSpec,
    op: Operation,
    recv: &str,
    args: &[Value],
) -> Result<Plan, InvokeError> {
    let resource = state.resource_of(recv).expect("receiver exists").to_string();
    let cfg = state.sharing.get(&resource);
    let lower = spec.method_name.to_ascii_lowercase();
    let target = Some(recv.to_string());
    let returns_self = matches!(&spec.returns, TypeRef::Class(c) if *c == spec.parent_class);
    let recv_value = || {
        if returns_self {
            Value::Obj {
                id: recv.to_string(),
                kind: spec.parent_class.clone(),
            }
        } else {
            Value::Null
        }
    };
    if op == Operation::View {
        let users = |pred: &dyn Fn(Role) -> bool| -> Value {
            let list: Vec<&str> = cfg
                .map(|c| c.roles.iter().filter(|(_, r)| pred(**r)).map(|(u, _)| u.as_str()).collect())
                .unwrap_or_default();
            Value::Str(list.join(","))
        };
        let value = if lower.contains("collaborator") {
            users(&|_| true)
        } else if lower.contains("sharing") {
            Value::Null
        } else {
            match role_in_name(&lower) {
                Some(role) => users(&|r| r == role),
                None => Value::Null,
            }
        };
        return Ok(Plan::on(target, Effect::None, Outcome::Value(value)));
    }
    let email = str_args(spec, args).next().map(|(_, s)| s.to_string());
    let stem = method_stem(&spec.method_name);
    let change = match (stem, email) {
        (_, None) => None,
        ("set" | "transfer", Some(user)) if lower.contains("owner") => Some(ShareChange::TransferOwner { user }),
        ("add", Some(user)) => role_in_name(&lower).map(|role| ShareChange::Grant { user, role }),
        ("remove" | "revoke", Some(user)) => role_in_name(&lower).map(|role| ShareChange::Revoke { user, role }),
        _ => None,
    };
    let effect = match change {
        Some(change) => Effect::Share { resource, change },
        None => Effect::None,
    };
    Ok(Plan::on(target, effect, Outcome::Value(recv_value())))
}

// present: checked while planning
fn node_mut<'a>(state: &'a mut WorkspaceState, id: &str) -> Option<&'a mut NodeAttrs> {
    state.node_mut(id).map(|n| &mut n.attrs)
}

fn apply(state: &mut WorkspaceState, effect: Effect, installer: &str) -> Result<Option<String>, InvokeError> {
    match effect {
        Effect::None => {}
        Effect::CreateTop { kind, attrs } => return Ok(Some(state.add_node(&kind, attrs, None, installer))),
        Effect::CreateChild { parent, kind, attrs } => {
            return Ok(Some(state.add_node(&kind, attrs, Some(&parent), installer)))
        }
        Effect::Copy { src } => return Ok(Some(state.copy_subtree(&src, installer))),
        Effect::SetHidden { node, hidden } => {
            if let Some(a) = node_mut(state, &node) {
                a.hidden = hidden;
            }
        }
        Effect::SetName { node, name } => {
            if let Some(a) = node_mut(state, &node) {
                a.name = Some(name.clone());
            }
            let kind = state.node(&node).map(|n| n.kind.clone()).unwrap_or_default();
            state.attribute_table.record(&kind, AttrRole::Name, name);
        }
        Effect::SetContent { node, content } => {
            if let Some(a) = node_mut(state, &node) {
                a.content = Some(content);
            }
        }
        Effect::AppendContent { node, text } => {
            if let Some(a) = node_mut(state, &node) {
                a.content = Some(format!("{}{}", a.content.take().unwrap_or_default(), text));
            }
        }
        Effect::Comment { node, text } => {
            if let Some(a) = node_mut(state, &node) {
                a.comments.push(text);
            }
        }
        Effect::Remove { node } => state.remove_subtree(&node),
        Effect::RemoveNth { parent, kind, n } => {
            let victim = state.node(&parent).and_then(|p| {
                p.children
                    .iter()
                    .filter(|c| state.node(c).is_some_and(|c| c.kind == kind))
                    .nth(n - 1)
                    .cloned()
            });
            if let Some(v) = victim {
                state.remove_subtree(&v);
            }
        }
        Effect::ClearContent { node } => {
            if let Some(a) = node_mut(state, &node) {
                a.content = None;
            }
        }
        Effect::DeleteSpan { node, start, end } => {
            if let Some(a) = node_mut(state, &node) {
                if let Some(c) = a.content.as_mut() {
                    let chars: Vec<char> = c.chars().collect();
                    let s = start.min(chars.len());
                    let e = (end + 1).min(chars.len()).max(s);
                    *c = chars[..s].iter().chain(&chars[e..]).collect();
                }
            }
        }
        Effect::Share { resource, change } => {
            let Some(cfg) = state.sharing.get_mut(&resource) else {
                return Err(InvokeError::NotFound(format!("no sharing config for `{resource}`")));
            };
            match change {
                ShareChange::Grant { user, role } => {
                    if cfg.roles.get(&user) != Some(&Role::Owner) {
                        cfg.roles.insert(user.clone(), role);
                    }
                    state.users.insert(user);
                }
                ShareChange::Revoke { user, role } => {
                    if cfg.roles.get(&user) == Some(&role) && role != Role::Owner {
                        cfg.roles.remove(&user);
                    }
                }
                ShareChange::TransferOwner { user } => {
                    for r in cfg.roles.values_mut() {
                        if *r == Role::Owner {
                            *r = Role::Editor;
                        }
                    }
                    cfg.roles.insert(user.clone(), Role::Owner);
                    state.users.insert(user);
                }
            }
        }
    }
    Ok(None)
}

fn created_value(state: &WorkspaceState, spec: &ApiSpec, recv: Option<&str>, created: Option<&str>) -> Value {
    let obj = |id: &str| {
        state.node(id).map_or(Value::Null, |n| Value::Obj {
            id: id.to_string(),
            kind: n.kind.clone(),
        })
    };
    match (&spec.returns, created) {
        (TypeRef::Class(k), Some(c)) if state.node(c).is_some_and(|n| n.kind == *k) => obj(c),
        (TypeRef::Class(k), _) if *k == spec.parent_class => recv.map_or(Value::Null, obj),
        _ => Value::Null,
    }
}

fn record_observed(state: &mut WorkspaceState, spec: &ApiSpec, value: &Value) {
    match value {
        Value::Obj { id, .. } => state.seed_attributes(id),
        Value::List(items) => {
            for v in items {
                record_observed(state, spec, v);
            }
        }
        Value::Str(s) if spec.method_name == "getName" => {
            state.attribute_table.record(&spec.parent_class, AttrRole::Name, s.clone());
        }
        _ => {}
    }
}
