//! Escalation detection over execution records, and the campaign report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{Catalog, HostApp};
use crate::classifier::{Operation, PermissionLabel};
use crate::executor::ExecutionRecord;
use crate::sim::{Decision, FaultKind, FaultSpec, GroundTruth, Role, RoleCapabilityMatrix, ScopeGrant};
use crate::testgen::Exclusion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FindingKind {
    /// Operation beyond the granted scopes.
    E1,
    /// Operation the installer's role does not permit.
    E2,
    /// Sharing configuration changed by a non-owner.
    E3,
}

impl FindingKind {
    pub const ALL: [FindingKind; 3] = [FindingKind::E1, FindingKind::E2, FindingKind::E3];

    /// Kind a seeded fault is expected to produce.
    pub fn expected_for(fault: FaultKind) -> FindingKind {
        match fault {
            FaultKind::SkipScopeCheck => FindingKind::E1,
            FaultKind::SkipRoleCheck => FindingKind::E2,
            FaultKind::AllowSharingMutation => FindingKind::E3,
        }
    }
}

impl fmt::Display for FindingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    pub api: String,
    pub case_id: String,
    pub role: Role,
    pub grant: ScopeGrant,
    pub evidence: serde_json::Value,
    /// Other kinds the record also matched.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub also: Vec<FindingKind>,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub findings: Vec<Finding>,
    /// Role-bypass candidates without evidence of exposed or altered data.
    pub potential_only: Vec<Finding>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DetectError {
    #[error("record for {0} has no permission label")]
    MissingLabel(String),
}

/// Outcome of the role-bypass rule for one record.
enum RoleBypass {
    None,
    Potential(String),
    Confirmed(String),
}

fn role_bypass(
    rec: &ExecutionRecord,
    label: &PermissionLabel,
    matrix: &RoleCapabilityMatrix,
    truth: Option<&GroundTruth>,
) -> RoleBypass {
    let Some(gt) = truth else {
        return if matrix.allows(rec.role, label.operation, &label.object_kind) {
            RoleBypass::None
        } else {
            RoleBypass::Potential(format!("{} may not {} {}", rec.role, label.operation, label.object_kind))
        };
    };
    let Some(installer) = gt.state.first_user_with(rec.role) else {
        return RoleBypass::None;
    };
    let denied: Vec<&str> = rec
        .touched
        .iter()
        .map(|o| o.id.as_str())
        .filter(|id| gt.role_decision(installer, label, id) == Some(Decision::DenyRole))
        .collect();
    if denied.is_empty() {
        return RoleBypass::None;
    }
    if label.operation != Operation::View {
        return RoleBypass::Confirmed(format!("{} {} on {}", rec.role, label.operation, denied.join(", ")));
    }
    let shown = rec
        .evidence
        .as_ref()
        .map(|e| e.to_string())
        .unwrap_or_default();
    match denied
        .iter()
        .find(|id| gt.content(id).is_some_and(|c| !c.is_empty() && shown.contains(c)))
    {
        Some(id) => RoleBypass::Confirmed(format!("{} read content of {id}", rec.role)),
        None => RoleBypass::Potential(format!("{} view of {} exposed no content", rec.role, denied.join(", "))),
    }
}

/// Classifies every successful record. A record yields at most one kind,
/// preferring E1, then E3, then E2.
pub fn detect(
    records: &[ExecutionRecord],
    labels: &BTreeMap<String, PermissionLabel>,
    matrix: &RoleCapabilityMatrix,
    truth: Option<&GroundTruth>,
) -> Result<Detection, DetectError> {
    let mut out = Detection::default();
    for rec in records.iter().filter(|r| r.outcome.is_success()) {
        let label = labels.get(&rec.api).ok_or_else(|| DetectError::MissingLabel(rec.api.clone()))?;
        let mut matched = Vec::new();
        let mut notes = Vec::new();
        if !rec.grant.covers(label.operation) {
            matched.push(FindingKind::E1);
            notes.push(format!("{} succeeded under grant {}", label.operation, rec.grant));
        }
        if rec.digest_before != rec.digest_after && rec.role != Role::Owner {
            matched.push(FindingKind::E3);
            notes.push(format!("sharing changed under a non-owner installer ({})", rec.role));
        }
        let mut potential = None;
        match role_bypass(rec, label, matrix, truth) {
            RoleBypass::None => {}
            RoleBypass::Confirmed(n) => {
                matched.push(FindingKind::E2);
                notes.push(n);
            }
            RoleBypass::Potential(n) => potential = Some(n),
        }
        let evidence = |kind| match kind {
            FindingKind::E3 => serde_json::json!({
                "digest_before": rec.digest_before,
                "digest_after": rec.digest_after,
            }),
            _ => rec.evidence.clone().unwrap_or(serde_json::Value::Null),
        };
        if let Some(&kind) = matched.first() {
            out.findings.push(Finding {
                kind,
                api: rec.api.clone(),
                case_id: rec.case_id.clone(),
                role: rec.role,
                grant: rec.grant.clone(),
                evidence: evidence(kind),
                also: matched[1..].to_vec(),
                note: notes.join("; "),
            });
        } else if let Some(note) = potential {
            out.potential_only.push(Finding {
                kind: FindingKind::E2,
                api: rec.api.clone(),
                case_id: rec.case_id.clone(),
                role: rec.role,
                grant: rec.grant.clone(),
                evidence: evidence(FindingKind::E2),
                also: Vec::new(),
                note,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppCounts {
    pub host_app: HostApp,
    pub apis: usize,
    pub tested: usize,
    pub potential: usize,
    pub confirmed: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub per_app: Vec<AppCounts>,
    /// Distinct APIs per finding kind.
    pub totals: BTreeMap<FindingKind, usize>,
    pub findings: Vec<Finding>,
    pub potential_only: Vec<Finding>,
    pub records: usize,
    pub executed: usize,
    pub pruned: usize,
    pub excluded: Vec<Exclusion>,
    pub unreachable: Vec<String>,
}

impl Report {
    pub fn has_findings(&self) -> bool {
        !self.findings.is_empty()
    }

    /// Aligned text table plus the finding list.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header = ["Host app", "APIs", "Tested", "Potential risky", "Risky"];
        let rows: Vec<[String; 5]> = self
            .per_app
            .iter()
            .map(|a| {
                [
                    a.host_app.to_string(),
                    a.apis.to_string(),
                    a.tested.to_string(),
                    a.potential.to_string(),
                    a.confirmed.to_string(),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for r in &rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cells: &[&str]| {
            let mut s = String::new();
            for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
                if i == 0 {
                    let _ = write!(s, "{c:<w$}");
                } else {
                    let _ = write!(s, "  {c:>w$}");
                }
            }
            s.push('\n');
            s
        };
        out.push_str(&line(&header));
        out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect::<Vec<_>>()));
        for r in &rows {
            out.push_str(&line(&r.iter().map(String::as_str).collect::<Vec<_>>()));
        }
        let _ = writeln!(
            out,
            "\nrecords {} (executed {}, pruned {}); excluded APIs {}; unreachable APIs {}",
            self.records,
            self.executed,
            self.pruned,
            self.excluded.len(),
            self.unreachable.len()
        );
        let totals: Vec<String> = self.totals.iter().map(|(k, n)| format!("{k} {n}")).collect();
        let _ = writeln!(out, "risky APIs by kind: {}", totals.join(", "));
        if !self.findings.is_empty() {
            out.push_str("\nfindings:\n");
            for f in &self.findings {
                let _ = writeln!(out, "  {} {} [{} {}] {}", f.kind, f.api, f.role, f.grant, f.note);
            }
        }
        if !self.potential_only.is_empty() {
            out.push_str("\npotential only:\n");
            for f in &self.potential_only {
                let _ = writeln!(out, "  {} {} [{} {}] {}", f.kind, f.api, f.role, f.grant, f.note);
            }
        }
        out
    }
}

/// Aggregates a detection into per-app counts of distinct APIs.
pub fn build_report(
    detection: &Detection,
    records: &[ExecutionRecord],
    catalog: &Catalog,
    excluded: &[Exclusion],
    unreachable: &[String],
) -> Report {
    let distinct = |fs: &[Finding]| -> BTreeSet<String> { fs.iter().map(|f| f.api.clone()).collect() };
    let confirmed = distinct(&detection.findings);
    let potential: BTreeSet<String> = confirmed.union(&distinct(&detection.potential_only)).cloned().collect();
    let tested: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.outcome.was_executed())
        .map(|r| r.api.as_str())
        .collect();
    let mut per_app: BTreeMap<HostApp, AppCounts> = catalog
        .roots()
        .keys()
        .map(|h| {
            (
                *h,
                AppCounts {
                    host_app: *h,
                    apis: 0,
                    tested: 0,
                    potential: 0,
                    confirmed: 0,
                },
            )
        })
        .collect();
    for api in catalog.apis() {
        let Some(host) = catalog.host_of(&api.id) else { continue };
        let c = per_app.get_mut(&host).expect("every host has a root");
        c.apis += 1;
        c.tested += tested.contains(api.id.as_str()) as usize;
        c.potential += potential.contains(&api.id) as usize;
        c.confirmed += confirmed.contains(&api.id) as usize;
    }
    let mut totals: BTreeMap<FindingKind, usize> = FindingKind::ALL.iter().map(|k| (*k, 0)).collect();
    for kind in FindingKind::ALL {
        totals.insert(
            kind,
            detection
                .findings
                .iter()
                .filter(|f| f.kind == kind)
                .map(|f| f.api.as_str())
                .collect::<BTreeSet<_>>()
                .len(),
        );
    }
    let executed = records.iter().filter(|r| r.outcome.was_executed()).count();
    Report {
        per_app: per_app.into_values().collect(),
        totals,
        findings: detection.findings.clone(),
        potential_only: detection.potential_only.clone(),
        records: records.len(),
        executed,
        pruned: records.len() - executed,
        excluded: excluded.to_vec(),
        unreachable: unreachable.to_vec(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedAudit {
    /// Faults with a finding of the expected kind on a matching API.
    pub recalled: Vec<FaultSpec>,
    pub missed: Vec<FaultSpec>,
    /// Findings matching no fault of their kind.
    pub false_positives: Vec<Finding>,
}

/// Compares findings with the faults that were injected.
pub fn audit_seeds(findings: &[Finding], faults: &[FaultSpec]) -> SeedAudit {
    let mut audit = SeedAudit::default();
    for f in faults {
        let want = FindingKind::expected_for(f.kind);
        if findings.iter().any(|x| x.kind == want && f.matches(&x.api)) {
            audit.recalled.push(f.clone());
        } else {
            audit.missed.push(f.clone());
        }
    }
    audit.false_positives = findings
        .iter()
        .filter(|x| {
            !faults
                .iter()
                .any(|f| FindingKind::expected_for(f.kind) == x.kind && f.matches(&x.api))
        })
        .cloned()
        .collect();
    audit
}
