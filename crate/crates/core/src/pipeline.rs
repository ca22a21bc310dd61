//! End-to-end campaign: ingest, classify, build the graph, generate, run
//! and report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundled;
use crate::catalog::Catalog;
use crate::classifier::{classify_catalog, labels_only, Classification, ClassifierConfig, PermissionLabel};
use crate::detector::{build_report, detect, Report};
use crate::executor::{records_to_jsonl, run_sessions, sessions_for, ExecutionRecord, RunMode, DEFAULT_TIMEOUT};
use crate::graph::{build_graph, PathTieBreak};
use crate::remote::{classify_escalating, RemoteEndpoint};
use crate::sim::model::parse_faults;
use crate::sim::{FaultSpec, RoleCapabilityMatrix, SimBackend, SimEnv, Template};
use crate::testgen::{generate_suite, to_jsonl, GenConfig, Suite};

fn default_mode() -> RunMode {
    RunMode::Both
}

fn default_log_level() -> String {
    "warn".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog file or directory; the bundled catalog when absent.
    #[serde(default)]
    pub catalog: Option<PathBuf>,
    pub template: PathBuf,
    #[serde(default)]
    pub faults: Option<PathBuf>,
    /// Capability matrix; the bundled one when absent.
    #[serde(default)]
    pub matrix: Option<PathBuf>,
    pub out_dir: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: RunMode,
    #[serde(default)]
    pub seed: u64,
    /// Break producer-path ties randomly from `seed`.
    #[serde(default)]
    pub random_tie_break: bool,
    #[serde(default)]
    pub remote: Option<RemoteEndpoint>,
    #[serde(default = "default_log_level")]
    pub log_level: String,
}

impl RunConfig {
    pub fn new(template: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            catalog: None,
            template: template.into(),
            faults: None,
            matrix: None,
            out_dir: out_dir.into(),
            mode: RunMode::Both,
            seed: 0,
            random_tie_break: false,
            remote: None,
            log_level: default_log_level(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| PipelineError::new("config", e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::new("config", e))
    }

    /// Every referenced input must exist.
    pub fn check_paths(&self) -> Result<(), PipelineError> {
        let inputs = [Some(&self.template), self.catalog.as_ref(), self.faults.as_ref(), self.matrix.as_ref()];
        for p in inputs.into_iter().flatten() {
            if !p.exists() {
                return Err(PipelineError::new("config", format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn tie_break(&self) -> PathTieBreak {
        if self.random_tie_break {
            PathTieBreak::Seeded(self.seed)
        } else {
            PathTieBreak::Lexicographic
        }
    }
}

#[derive(Debug, Error)]
#[error("{stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

impl PipelineError {
    pub fn new(stage: &'static str, e: impl std::fmt::Display) -> Self {
        PipelineError {
            stage,
            message: e.to_string(),
        }
    }
}

/// Everything a campaign produced.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub classifications: BTreeMap<String, Classification>,
    pub suite: Suite,
    pub records: Vec<ExecutionRecord>,
    pub report: Report,
}

impl Campaign {
    pub fn exit_code(&self) -> i32 {
        if self.report.has_findings() {
            2
        } else {
            0
        }
    }
}

pub fn load_catalog(path: Option<&Path>) -> Result<Catalog, PipelineError> {
    match path {
        Some(p) => Catalog::load(p).map_err(|e| PipelineError::new("ingest", e)),
        None => Ok(bundled::workspace_catalog()),
    }
}

pub fn load_matrix(path: Option<&Path>) -> Result<RoleCapabilityMatrix, PipelineError> {
    match path {
        Some(p) => RoleCapabilityMatrix::load(p).map_err(|e| PipelineError::new("run", e)),
        None => Ok(RoleCapabilityMatrix::bundled()),
    }
}

pub fn load_faults(path: &Path) -> Result<Vec<FaultSpec>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::new("run", format!("{}: {e}", path.display())))?;
    parse_faults(&text).map_err(|e| PipelineError::new("run", format!("{}: {e}", path.display())))
}

/// Labels every API; with a remote endpoint, low-confidence labels are
/// escalated and fall back to the lexicon on failure.
pub fn classify(catalog: &Catalog, remote: Option<&RemoteEndpoint>) -> BTreeMap<String, Classification> {
    let mut config = ClassifierConfig::default();
    match remote {
        None => classify_catalog(catalog, &config),
        Some(endpoint) => {
            config.remote = Some(endpoint.clone());
            catalog
                .apis()
                .map(|api| {
                    let (c, err) = classify_escalating(api, catalog, &config);
                    if let Some(e) = err {
                        tracing::warn!(api = %api.id, error = %e, "remote classifier failed; lexicon label kept");
                    }
                    (api.id.clone(), c)
                })
                .collect()
        }
    }
}

/// Runs every stage in memory.
pub fn run_campaign(config: &RunConfig) -> Result<Campaign, PipelineError> {
    config.check_paths()?;
    let catalog = load_catalog(config.catalog.as_deref())?;
    let classifications = classify(&catalog, config.remote.as_ref());
    let labels: BTreeMap<String, PermissionLabel> = labels_only(&classifications);
    let graph = build_graph(&catalog).map_err(|e| PipelineError::new("graph", e))?;
    let gen = GenConfig {
        tie_break: config.tie_break(),
        remote: config.remote.clone(),
    };
    let suite = generate_suite(&graph, &labels, &gen).map_err(|e| PipelineError::new("gen", e))?;
    let template = Template::load(&config.template).map_err(|e| PipelineError::new("run", e))?;
    let faults = match &config.faults {
        Some(p) => load_faults(p)?,
        None => Vec::new(),
    };
    let matrix = load_matrix(config.matrix.as_deref())?;
    let env = SimEnv::new(catalog.clone(), labels.clone(), matrix.clone());
    let backend = SimBackend::new(env, template, faults).map_err(|e| PipelineError::new("run", e))?;
    let records = run_sessions(&backend, &suite.cases, &sessions_for(config.mode), DEFAULT_TIMEOUT)
        .map_err(|e| PipelineError::new("run", e))?;
    let truth = backend.ground_truth();
    let detection = detect(&records, &labels, &matrix, Some(&truth)).map_err(|e| PipelineError::new("report", e))?;
    let report = build_report(&detection, &records, &catalog, &suite.excluded, &suite.unreachable);
    Ok(Campaign {
        classifications,
        suite,
        records,
        report,
    })
}

pub const SUITE_FILE: &str = "suite.jsonl";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const LABELS_FILE: &str = "labels.json";
pub const EXCLUSIONS_FILE: &str = "exclusions.json";

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), PipelineError> {
    fs::write(dir.join(name), contents).map_err(|e| PipelineError::new("write", format!("{name}: {e}")))
}

pub fn to_pretty_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s
}

/// Runs the campaign and writes its artifacts to `config.out_dir`.
pub fn pipeline(config: &RunConfig) -> Result<Campaign, PipelineError> {
    let campaign = run_campaign(config)?;
    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| PipelineError::new("write", e))?;
    write(dir, LABELS_FILE, &to_pretty_json(&campaign.classifications))?;
    write(dir, SUITE_FILE, &to_jsonl(&campaign.suite.cases))?;
    write(
        dir,
        EXCLUSIONS_FILE,
        &to_pretty_json(&serde_json::json!({
            "excluded": campaign.suite.excluded,
            "unreachable": campaign.suite.unreachable,
        })),
    )?;
    write(dir, RECORDS_FILE, &records_to_jsonl(&campaign.records))?;
    write(dir, REPORT_JSON, &to_pretty_json(&campaign.report))?;
    write(dir, REPORT_TEXT, &campaign.report.to_text())?;
    Ok(campaign)
}
