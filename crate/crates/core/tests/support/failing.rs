//! Backend wrapper whose sessions deny selected APIs outright.

#![allow(dead_code)]

use std::collections::BTreeSet;

use scopeprobe_core::attrs::AttrRole;
use scopeprobe_core::executor::{Backend, BackendError, Session};
use scopeprobe_core::sim::{Invocation, Role, ScopeGrant, PERMISSION_MESSAGE};
use scopeprobe_core::value::Value;

pub struct FailingBackend<B> {
    pub inner: B,
    pub deny: BTreeSet<String>,
}

pub struct FailingSession<S> {
    inner: S,
    deny: BTreeSet<String>,
}

impl<B: Backend> Backend for FailingBackend<B> {
    type Session = FailingSession<B::Session>;

    fn open_session(&self, role: Role, grant: &ScopeGrant) -> Result<Self::Session, BackendError> {
        Ok(FailingSession {
            inner: self.inner.open_session(role, grant)?,
            deny: self.deny.clone(),
        })
    }
}

impl<S: Session> Session for FailingSession<S> {
    fn installer(&self) -> &str {
        self.inner.installer()
    }

    fn invoke(&mut self, api: &str, receiver: &Value, args: &[Value]) -> Result<Invocation, String> {
        if self.deny.contains(api) {
            return Err(PERMISSION_MESSAGE.to_string());
        }
        self.inner.invoke(api, receiver, args)
    }

    fn lookup(&mut self, kind: &str, role: AttrRole) -> Option<String> {
        self.inner.lookup(kind, role)
    }

    fn sharing_digest(&self) -> String {
        self.inner.sharing_digest()
    }

    fn evidence(&self, value: &Value) -> serde_json::Value {
        self.inner.evidence(value)
    }
}
