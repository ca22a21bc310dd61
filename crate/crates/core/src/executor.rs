//! Runs suites against a backend under the role matrix and the scope
//! ladder.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attrs::AttrRole;
use crate::graph::ChainStep;
use crate::sim::{Invocation, ObjectRef, Role, ScopeGrant};
use crate::testgen::{ArgPlan, ArgStrategy, TestCase};
use crate::value::Value;

/// Prefix that marks a denied call.
pub const FAILURE_PREFIX: &str = "Exception:";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
}

/// A stateful connection acting as one installer with one grant.
pub trait Session {
    fn installer(&self) -> &str;
    /// Calls `api` on `receiver`. Errors carry the platform's message.
    fn invoke(&mut self, api: &str, receiver: &Value, args: &[Value]) -> Result<Invocation, String>;
    /// A runtime value for an identifying string parameter.
    fn lookup(&mut self, kind: &str, role: AttrRole) -> Option<String>;
    /// Digest over the sharing configuration of every resource.
    fn sharing_digest(&self) -> String;
    /// Payload recorded for a successful call.
    fn evidence(&self, value: &Value) -> serde_json::Value;
}

pub trait Backend: Sync {
    type Session: Session + Send;
    /// A session on a fresh copy of the workspace.
    fn open_session(&self, role: Role, grant: &ScopeGrant) -> Result<Self::Session, BackendError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    TypeError,
    NotFound,
    BadArgument,
    Unresolved,
    Timeout,
    Other,
}

impl ErrorKind {
    fn of(message: &str) -> ErrorKind {
        match message.split_once(':').map(|(p, _)| p) {
            Some("TypeError") => ErrorKind::TypeError,
            Some("NotFound") => ErrorKind::NotFound,
            Some("BadArgument") => ErrorKind::BadArgument,
            _ => ErrorKind::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Success,
    PermissionError { step: String, message: String },
    OtherError { kind: ErrorKind, step: String, message: String },
    /// Not sent to the backend because its dependency did not succeed.
    Pruned { dependency: String },
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success)
    }

    pub fn was_executed(&self) -> bool {
        !matches!(self, Outcome::Pruned { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub case_id: String,
    pub api: String,
    pub role: Role,
    pub grant: ScopeGrant,
    pub outcome: Outcome,
    pub digest_before: String,
    pub digest_after: String,
    /// Objects checked or created by the target call.
    pub touched: Vec<ObjectRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    RoleMatrix,
    ScopeLadder,
    #[default]
    Both,
}

impl std::str::FromStr for RunMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "role-matrix" => Ok(RunMode::RoleMatrix),
            "scope-ladder" => Ok(RunMode::ScopeLadder),
            "both" => Ok(RunMode::Both),
            _ => Err(format!("unknown mode `{s}` (role-matrix, scope-ladder, both)")),
        }
    }
}

enum Failure {
    Permission { step: String, message: String },
    Other { kind: ErrorKind, step: String, message: String },
}

impl From<Failure> for Outcome {
    fn from(f: Failure) -> Outcome {
        match f {
            Failure::Permission { step, message } => Outcome::PermissionError { step, message },
            Failure::Other { kind, step, message } => Outcome::OtherError { kind, step, message },
        }
    }
}

fn receiver_class(api: &str) -> &str {
    api.rsplit_once('.').map_or(api, |(c, _)| c)
}

/// Values for parameters that do not vary across combinations.
fn fixed_args<S: Session>(session: &mut S, step: &str, plan: &ArgPlan) -> Result<Vec<Option<Value>>, Failure> {
    let mut out = Vec::with_capacity(plan.0.len());
    for p in &plan.0 {
        out.push(match &p.strategy {
            ArgStrategy::PrimitiveEnum { .. } => None,
            ArgStrategy::Literal { value } => Some(value.clone().into()),
            ArgStrategy::RemotePair { first, values, .. } => {
                Some(Value::Int(if p.name == *first { values[0] } else { values[1] }))
            }
            ArgStrategy::AttributeLookup { kind, role } => match session.lookup(kind, *role) {
                Some(v) => Some(Value::Str(v)),
                None => {
                    return Err(Failure::Other {
                        kind: ErrorKind::Unresolved,
                        step: step.to_string(),
                        message: format!("no {role} known for {kind}"),
                    })
                }
            },
            ArgStrategy::ProducerChain { chain } => Some(run_steps(session, &chain.steps)?.0),
            ArgStrategy::TutorialLiteral { steps } => Some(run_steps(session, steps)?.0),
        });
    }
    Ok(out)
}

fn combo(plan: &ArgPlan, fixed: &[Option<Value>], k: usize) -> Vec<Value> {
    plan.0
        .iter()
        .zip(fixed)
        .map(|(p, f)| match (&p.strategy, f) {
            (_, Some(v)) => v.clone(),
            (ArgStrategy::PrimitiveEnum { values }, None) if !values.is_empty() => values[k % values.len()].clone().into(),
            _ => Value::Null,
        })
        .collect()
}

/// Runs one step, trying argument combinations until one succeeds. A
/// permission error ends the attempt at once.
fn run_step<S: Session>(session: &mut S, receiver: &Value, step: &ChainStep) -> Result<Invocation, Failure> {
    let fixed = fixed_args(session, &step.api, &step.args)?;
    let mut last = String::new();
    for k in 0..step.args.combo_count() {
        let args = combo(&step.args, &fixed, k);
        match session.invoke(&step.api, receiver, &args) {
            Ok(inv) => return Ok(inv),
            Err(message) if message.starts_with(FAILURE_PREFIX) => {
                return Err(Failure::Permission {
                    step: step.api.clone(),
                    message,
                })
            }
            Err(message) => last = message,
        }
    }
    Err(Failure::Other {
        kind: ErrorKind::of(&last),
        step: step.api.clone(),
        message: last,
    })
}

/// Runs a chain from its host root; returns the final value and the
/// objects touched by the last call.
fn run_steps<S: Session>(session: &mut S, steps: &[ChainStep]) -> Result<(Value, Vec<ObjectRef>), Failure> {
    let Some(first) = steps.first() else {
        return Ok((Value::Null, Vec::new()));
    };
    let mut receiver = Value::App(receiver_class(&first.api).to_string());
    let mut touched = Vec::new();
    for step in steps {
        let inv = run_step(session, &receiver, step)?;
        touched = inv.touched;
        receiver = match (inv.value, step.take_first) {
            (Value::List(items), true) => match items.into_iter().next() {
                Some(v) => v,
                None => {
                    return Err(Failure::Other {
                        kind: ErrorKind::NotFound,
                        step: step.api.clone(),
                        message: format!("NotFound: {} returned an empty array", step.api),
                    })
                }
            },
            (v, _) => v,
        };
    }
    Ok((receiver, touched))
}

/// Executes one case's chain in `session`.
pub fn run_case<S: Session>(
    session: &mut S,
    case: &TestCase,
    role: Role,
    grant: &ScopeGrant,
    timeout: Duration,
) -> ExecutionRecord {
    let digest_before = session.sharing_digest();
    let started = Instant::now();
    let result = run_steps(session, &case.chain.steps);
    let elapsed = started.elapsed();
    let (outcome, touched, evidence) = match result {
        Ok(_) if elapsed > timeout => (
            Outcome::OtherError {
                kind: ErrorKind::Timeout,
                step: case.target_api.clone(),
                message: format!("took {elapsed:?}"),
            },
            Vec::new(),
            None,
        ),
        Ok((value, touched)) => (Outcome::Success, touched, Some(session.evidence(&value))),
        Err(f) => (f.into(), Vec::new(), None),
    };
    ExecutionRecord {
        case_id: case.id.clone(),
        api: case.target_api.clone(),
        role,
        grant: grant.clone(),
        outcome,
        digest_after: session.sharing_digest(),
        digest_before,
        touched,
        evidence,
    }
}

/// Runs an ordered suite in one session. Cases whose dependency did not
/// succeed earlier in the same session are recorded as pruned.
pub fn run_session<S: Session>(
    session: &mut S,
    suite: &[TestCase],
    role: Role,
    grant: &ScopeGrant,
    timeout: Duration,
) -> Vec<ExecutionRecord> {
    let in_suite: BTreeMap<&str, ()> = suite.iter().map(|c| (c.id.as_str(), ())).collect();
    let mut succeeded: BTreeMap<&str, bool> = BTreeMap::new();
    let mut out = Vec::with_capacity(suite.len());
    for case in suite {
        let blocked = case
            .depends_on
            .as_deref()
            .filter(|d| in_suite.contains_key(d) && !succeeded.get(d).copied().unwrap_or(false));
        let record = match blocked {
            Some(dep) => {
                let digest = session.sharing_digest();
                ExecutionRecord {
                    case_id: case.id.clone(),
                    api: case.target_api.clone(),
                    role,
                    grant: grant.clone(),
                    outcome: Outcome::Pruned {
                        dependency: dep.to_string(),
                    },
                    digest_before: digest.clone(),
                    digest_after: digest,
                    touched: Vec::new(),
                    evidence: None,
                }
            }
            None => run_case(session, case, role, grant, timeout),
        };
        succeeded.insert(&case.id, record.outcome.is_success());
        out.push(record);
    }
    out
}

/// Runs each `(role, grant)` session on its own thread and concatenates
/// the records in the order given.
pub fn run_sessions<B: Backend>(
    backend: &B,
    suite: &[TestCase],
    sessions: &[(Role, ScopeGrant)],
    timeout: Duration,
) -> Result<Vec<ExecutionRecord>, BackendError> {
    let results: Vec<Result<Vec<ExecutionRecord>, BackendError>> = std::thread::scope(|s| {
        let handles: Vec<_> = sessions
            .iter()
            .map(|(role, grant)| {
                s.spawn(move || {
                    let mut session = backend.open_session(*role, grant)?;
                    tracing::debug!(%role, %grant, installer = session.installer(), "session opened");
                    Ok(run_session(&mut session, suite, *role, grant, timeout))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("session thread panicked")).collect()
    });
    let mut out = Vec::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

pub fn role_matrix_sessions() -> Vec<(Role, ScopeGrant)> {
    [Role::Viewer, Role::Commenter, Role::Editor]
        .into_iter()
        .map(|r| (r, ScopeGrant::full()))
        .collect()
}

pub fn scope_ladder_sessions() -> Vec<(Role, ScopeGrant)> {
    vec![(Role::Owner, ScopeGrant::read()), (Role::Owner, ScopeGrant::read_edit())]
}

pub fn sessions_for(mode: RunMode) -> Vec<(Role, ScopeGrant)> {
    match mode {
        RunMode::RoleMatrix => role_matrix_sessions(),
        RunMode::ScopeLadder => scope_ladder_sessions(),
        RunMode::Both => {
            let mut v = role_matrix_sessions();
            v.extend(scope_ladder_sessions());
            v
        }
    }
}

/// Viewer, Commenter and Editor sessions, each with the full grant.
pub fn run_role_matrix<B: Backend>(suite: &[TestCase], backend: &B) -> Result<Vec<ExecutionRecord>, BackendError> {
    run_sessions(backend, suite, &role_matrix_sessions(), DEFAULT_TIMEOUT)
}

/// Owner sessions with `{Read}` and then `{Read, Edit}`.
pub fn run_scope_ladder<B: Backend>(suite: &[TestCase], backend: &B) -> Result<Vec<ExecutionRecord>, BackendError> {
    run_sessions(backend, suite, &scope_ladder_sessions(), DEFAULT_TIMEOUT)
}

pub fn records_to_jsonl(records: &[ExecutionRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn records_from_jsonl(text: &str) -> Result<Vec<ExecutionRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
