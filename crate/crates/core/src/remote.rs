//! Optional remote text-model client.
//!
//! Wire format: `POST <base_url>` with body `{"prompt": "..."}`, answered by
//! `{"text": "..."}`. The bearer token is read from the environment variable
//! named in the endpoint config. Nothing here runs unless an endpoint is
//! explicitly configured.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{ApiSpec, Catalog};
use crate::classifier::{classify_api, Classification, ClassifierConfig, LabelSource, Operation, PermissionLabel};

/// Default prompt, with `{api_name}`, `{description}` and `{hierarchy}`
/// placeholders.
pub const DEFAULT_PROMPT_TEMPLATE: &str = include_str!("../data/prompt.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteEndpoint {
    pub base_url: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub token_env: Option<String>,
    /// Prompt template text. `None` uses [`DEFAULT_PROMPT_TEMPLATE`].
    #[serde(default)]
    pub prompt_template: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    10_000
}

impl RemoteEndpoint {
    pub fn new(base_url: impl Into<String>) -> Self {
        RemoteEndpoint {
            base_url: base_url.into(),
            token_env: None,
            prompt_template: None,
            timeout_ms: default_timeout_ms(),
        }
    }

    fn template(&self) -> &str {
        self.prompt_template.as_deref().unwrap_or(DEFAULT_PROMPT_TEMPLATE)
    }
}

#[derive(Debug, Error)]
pub enum RemoteError {
    #[error("no remote endpoint configured")]
    NotConfigured,
    #[error("remote endpoint unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("unparseable remote response: {0:?}")]
    ResponseUnparseable(String),
}

#[derive(Serialize)]
struct PromptBody<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct TextBody {
    text: String,
}

/// Sends one prompt and returns the model's text.
pub fn complete(endpoint: &RemoteEndpoint, prompt: &str) -> Result<String, RemoteError> {
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_millis(endpoint.timeout_ms))
        .build();
    let mut req = agent.post(&endpoint.base_url);
    if let Some(var) = &endpoint.token_env {
        if let Ok(token) = std::env::var(var) {
            req = req.set("Authorization", &format!("Bearer {token}"));
        }
    }
    let resp = req
        .send_json(PromptBody { prompt })
        .map_err(|e| RemoteError::RemoteUnavailable(e.to_string()))?;
    let body: TextBody = resp
        .into_json()
        .map_err(|e| RemoteError::ResponseUnparseable(e.to_string()))?;
    Ok(body.text)
}

pub fn render_prompt(template: &str, spec: &ApiSpec, catalog: &Catalog) -> String {
    template
        .replace("{api_name}", &spec.id)
        .replace("{description}", &spec.description)
        .replace("{hierarchy}", &catalog.hierarchy_path(&spec.parent_class).join(" > "))
}

/// Extracts the operation from a reply such as `modify, Body` or
/// `add-on, view, Document`.
pub fn parse_operation(text: &str) -> Option<Operation> {
    text.split(|c: char| !c.is_ascii_alphabetic())
        .filter(|w| !w.is_empty())
        .find_map(Operation::parse)
}

/// Asks the remote model for the API's operation.
pub fn classify_with_remote(
    spec: &ApiSpec,
    catalog: &Catalog,
    config: &ClassifierConfig,
) -> Result<PermissionLabel, RemoteError> {
    let endpoint = config.remote.as_ref().ok_or(RemoteError::NotConfigured)?;
    let prompt = render_prompt(endpoint.template(), spec, catalog);
    let text = complete(endpoint, &prompt)?;
    let op = parse_operation(&text).ok_or_else(|| RemoteError::ResponseUnparseable(text.clone()))?;
    let touches_sharing = config.touches_sharing(spec, catalog);
    Ok(PermissionLabel {
        operation: if touches_sharing && op != Operation::View { Operation::Modify } else { op },
        object_kind: spec.parent_class.clone(),
        touches_sharing,
    })
}

/// Lexicon label, escalated to the remote model when its confidence is
/// below the configured threshold. Remote failures keep the lexicon label
/// and are returned alongside it.
pub fn classify_escalating(
    spec: &ApiSpec,
    catalog: &Catalog,
    config: &ClassifierConfig,
) -> (Classification, Option<RemoteError>) {
    let local = classify_api(spec, catalog, config);
    if config.remote.is_none() || local.confidence >= config.confidence_threshold {
        return (local, None);
    }
    match classify_with_remote(spec, catalog, config) {
        Ok(label) => (
            Classification {
                label,
                confidence: LabelSource::Remote.confidence(),
                source: LabelSource::Remote,
            },
            None,
        ),
        Err(e) => {
            tracing::warn!(api = %spec.id, error = %e, "remote classification failed; keeping lexicon label");
            (local, Some(e))
        }
    }
}

/// Asks the remote model for a valid `(lo, hi)` pair of mutually
/// dependent integer parameters. Requires `lo < hi` in the reply.
pub fn suggest_integer_pair(
    endpoint: &RemoteEndpoint,
    api: &ApiSpec,
    first: &str,
    second: &str,
) -> Result<(i64, i64), RemoteError> {
    let prompt = format!(
        "API {}: {}\nGive valid integer values for the parameters `{first}` and `{second}`, \
         respecting any ordering implied by the documentation. Reply with two integers.",
        api.id, api.description
    );
    let text = complete(endpoint, &prompt)?;
    let nums: Vec<i64> = text
        .split(|c: char| !(c.is_ascii_digit() || c == '-'))
        .filter_map(|w| w.parse().ok())
        .collect();
    match nums.as_slice() {
        [lo, hi, ..] if lo < hi => Ok((*lo, *hi)),
        _ => Err(RemoteError::ResponseUnparseable(text)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::mpsc;
    use std::thread;

    /// One-shot HTTP server answering a single request with `reply` as the
    /// `text` field; returns the URL and a receiver for the request body.
    fn serve_once(reply: Option<&'static str>) -> (String, mpsc::Receiver<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/complete", listener.local_addr().unwrap());
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            let mut auth = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let l = line.trim_end().to_ascii_lowercase();
                if l.is_empty() {
                    break;
                }
                if let Some(v) = l.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if l.starts_with("authorization:") {
                    auth = line.trim_end().to_string();
                }
            }
            let mut body = vec![0u8; len];
            reader.read_exact(&mut body).unwrap();
            tx.send(format!("{auth}\n{}", String::from_utf8(body).unwrap())).unwrap();
            match reply {
                Some(text) => {
                    let payload = serde_json::json!({ "text": text }).to_string();
                    let mut s = stream;
                    write!(
                        s,
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                        payload.len(),
                        payload
                    )
                    .unwrap();
                }
                // hold the connection open without answering
                None => thread::sleep(Duration::from_secs(3)),
            }
        });
        (url, rx)
    }

    fn config_for(url: String, timeout_ms: u64) -> ClassifierConfig {
        ClassifierConfig {
            remote: Some(RemoteEndpoint {
                timeout_ms,
                token_env: Some("SCOPEPROBE_TEST_TOKEN".into()),
                ..RemoteEndpoint::new(url)
            }),
            ..ClassifierConfig::default()
        }
    }

    #[test]
    fn remote_label_is_parsed_and_prompt_is_filled() {
        std::env::set_var("SCOPEPROBE_TEST_TOKEN", "t0ken");
        let cat = bundled::workspace_catalog();
        let spec = cat.api("Body.editAsText").unwrap();
        let (url, rx) = serve_once(Some("modify, Body"));
        let label = classify_with_remote(spec, &cat, &config_for(url, 2_000)).unwrap();
        assert_eq!(label.operation, Operation::Modify);
        assert_eq!(label.object_kind, "Body");
        let seen = rx.recv().unwrap();
        assert!(seen.contains("Bearer t0ken"));
        assert!(seen.contains("Body.editAsText"));
        assert!(seen.contains("DocumentApp > Document > Body"));
        assert!(!seen.contains("{api_name}"));
    }

    #[test]
    fn timeout_is_unavailable() {
        let cat = bundled::workspace_catalog();
        let spec = cat.api("Body.editAsText").unwrap();
        let (url, _rx) = serve_once(None);
        let err = classify_with_remote(spec, &cat, &config_for(url, 200)).unwrap_err();
        assert!(matches!(err, RemoteError::RemoteUnavailable(_)), "{err:?}");
    }

    #[test]
    fn garbage_reply_falls_back_to_lexicon() {
        let cat = bundled::workspace_catalog();
        // low-confidence fallback label so the escalation path is taken
        let spec = cat.api("Document.saveAndClose").unwrap();
        let (url, _rx) = serve_once(Some("purple"));
        let cfg = config_for(url, 2_000);
        assert!(matches!(
            classify_with_remote(spec, &cat, &cfg),
            Err(RemoteError::RemoteUnavailable(_)) | Err(RemoteError::ResponseUnparseable(_))
        ));
        let (url, _rx) = serve_once(Some("purple"));
        let (c, err) = classify_escalating(spec, &cat, &config_for(url, 2_000));
        assert!(matches!(err, Some(RemoteError::ResponseUnparseable(t)) if t == "purple"));
        assert_eq!(c.source, LabelSource::Fallback);
        assert_eq!(c.label.operation, Operation::Modify);
    }

    #[test]
    fn escalation_uses_remote_for_low_confidence() {
        let cat = bundled::workspace_catalog();
        let spec = cat.api("Document.saveAndClose").unwrap();
        let (url, _rx) = serve_once(Some("add-on, view, Document"));
        let (c, err) = classify_escalating(spec, &cat, &config_for(url, 2_000));
        assert!(err.is_none());
        assert_eq!((c.label.operation, c.source), (Operation::View, LabelSource::Remote));
    }

    #[test]
    fn unreachable_endpoint() {
        let cat = bundled::workspace_catalog();
        let spec = cat.api("Body.editAsText").unwrap();
        // bind then drop to get a closed port
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let cfg = config_for(format!("http://127.0.0.1:{port}/x"), 500);
        assert!(matches!(
            classify_with_remote(spec, &cat, &cfg),
            Err(RemoteError::RemoteUnavailable(_))
        ));
    }

    #[test]
    fn integer_pair_from_remote() {
        let cat = bundled::workspace_catalog();
        let spec = cat.api("Range.copyFormatToRange").unwrap();
        let (url, _rx) = serve_once(Some("column = 2, columnEnd = 4"));
        let ep = RemoteEndpoint::new(url);
        assert_eq!(suggest_integer_pair(&ep, spec, "column", "columnEnd").unwrap(), (2, 4));
        let (url, _rx) = serve_once(Some("4 2"));
        assert!(suggest_integer_pair(&RemoteEndpoint::new(url), spec, "column", "columnEnd").is_err());
    }

    #[test]
    fn parse_operation_variants() {
        assert_eq!(parse_operation("modify, Body"), Some(Operation::Modify));
        assert_eq!(parse_operation("Add-on, View, Document"), Some(Operation::View));
        assert_eq!(parse_operation("purple"), None);
    }
}
