//! Acceptance checks. Each criterion prints one PASS/FAIL line; the test
//! fails at the end if any criterion failed.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use scopeprobe_core::bundled;
use scopeprobe_core::catalog::{Catalog, CatalogFile};
use scopeprobe_core::classifier::{classify_api, classify_catalog, labels_only, ClassifierConfig, Operation, PermissionLabel};
use scopeprobe_core::detector::{audit_seeds, Finding, FindingKind};
use scopeprobe_core::executor::{run_sessions, sessions_for, RunMode, DEFAULT_TIMEOUT};
use scopeprobe_core::graph::{build_graph, PathTieBreak};
use scopeprobe_core::sim::model::parse_faults;
use scopeprobe_core::sim::{
    check_access, Decision, Role, RoleCapabilityMatrix, Scope, ScopeGrant, SimBackend, SimEnv, Subject, Template,
    WorkspaceState,
};
use scopeprobe_core::synth::random_catalog;
use scopeprobe_core::testgen::{check_order, discover, from_jsonl, generate_suite, to_jsonl, GenConfig};

use support::failing::FailingBackend;
use support::oracles::{bfs_oracle, min_chain_len};

const ADDON: &str = "acceptance-addon";
const SYNTH_SEEDS: u64 = 50;

struct Verdict {
    id: u8,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(v: &Verdict) {
    let status = if v.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {:>2} {status}: {} ({})", v.id, v.name, v.detail);
}

fn labels(cat: &Catalog) -> BTreeMap<String, PermissionLabel> {
    labels_only(&classify_catalog(cat, &ClassifierConfig::default()))
}

fn needed(op: Operation) -> Scope {
    match op {
        Operation::View => Scope::Read,
        Operation::Delete => Scope::Delete,
        _ => Scope::Edit,
    }
}

fn bundled_state() -> WorkspaceState {
    WorkspaceState::from_template(&Template::bundled(), &bundled::workspace_catalog()).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scopeprobe"))
}

fn run_pipeline(out: &Path, faults: Option<&Path>, extra: &[&str]) -> i32 {
    let mut cmd = bin();
    cmd.arg("pipeline")
        .arg("--template")
        .arg(bundled::template_path())
        .arg("--out-dir")
        .arg(out)
        .args(extra);
    if let Some(f) = faults {
        cmd.arg("--faults").arg(f);
    }
    cmd.stdout(std::process::Stdio::null());
    cmd.status().expect("binary runs").code().unwrap_or(-1)
}

fn findings_of(out: &Path) -> Vec<Finding> {
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    serde_json::from_value(report["findings"].clone()).unwrap()
}

fn containment() -> Verdict {
    let start = Instant::now();
    let matrix = RoleCapabilityMatrix::bundled();
    let base = bundled_state();
    let ids: Vec<String> = base.node_ids().map(str::to_string).collect();
    let users: Vec<String> = base.users.iter().cloned().collect();
    let grants = ScopeGrant::ladder();
    let mut rng = StdRng::seed_from_u64(0x5c0b);
    let (mut violations, mut allowed) = (0, 0);
    for _ in 0..10_000 {
        let mut state = base.clone();
        let node = ids.choose(&mut rng).unwrap();
        let user = users.choose(&mut rng).unwrap();
        let grant = grants.choose(&mut rng).unwrap().clone();
        state.set_grant(user, ADDON, grant.clone());
        let kind = state.node(node).unwrap().kind.clone();
        let op = *Operation::ALL.choose(&mut rng).unwrap();
        let label = PermissionLabel {
            operation: op,
            object_kind: kind.clone(),
            touches_sharing: rng.gen_bool(0.2),
        };
        let subject = Subject::Addon { installer: user, addon: ADDON };
        if check_access(&state, &matrix, subject, &label, Some(node)) == Decision::Allow {
            allowed += 1;
            let role_ok = state.role_of(user, node).is_some_and(|r| matrix.allows(r, op, &kind));
            if !(grant.contains(needed(op)) && role_ok) {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Verdict {
        id: 1,
        name: "containment soundness",
        pass: violations == 0 && allowed > 0 && elapsed < Duration::from_secs(5),
        detail: format!("10000 queries, {allowed} allowed, {violations} violations, {elapsed:.2?}"),
    }
}

fn monotonicity() -> Verdict {
    let matrix = RoleCapabilityMatrix::bundled();
    let base = bundled_state();
    let mut kinds: BTreeSet<String> = matrix.explicit_kinds();
    kinds.insert("*".into());
    kinds.extend(base.node_ids().map(|id| base.node(id).unwrap().kind.clone()));
    let mut violations = 0;
    let mut checks = 0;
    for kind in &kinds {
        for op in Operation::ALL {
            for (i, lo) in Role::ALL.iter().enumerate() {
                for hi in &Role::ALL[i..] {
                    checks += 1;
                    if matrix.allows(*lo, op, kind) && !matrix.allows(*hi, op, kind) {
                        violations += 1;
                    }
                }
            }
        }
    }
    let user = base.first_user_with(Role::Viewer).unwrap().to_string();
    for id in base.node_ids() {
        let resource = base.resource_of(id).unwrap().to_string();
        let kind = base.node(id).unwrap().kind.clone();
        for op in Operation::ALL {
            for sharing in [false, true] {
                let label = PermissionLabel {
                    operation: op,
                    object_kind: kind.clone(),
                    touches_sharing: sharing,
                };
                let allowed: Vec<bool> = Role::ALL
                    .iter()
                    .map(|role| {
                        let mut s = base.clone();
                        s.sharing.get_mut(&resource).unwrap().roles.insert(user.clone(), *role);
                        check_access(&s, &matrix, Subject::User(&user), &label, Some(id)) == Decision::Allow
                    })
                    .collect();
                checks += 1;
                if allowed.windows(2).any(|w| w[0] && !w[1]) {
                    violations += 1;
                }
            }
        }
    }
    Verdict {
        id: 2,
        name: "role monotonicity",
        pass: violations == 0,
        detail: format!("{checks} checks over {} kinds, {violations} violations", kinds.len()),
    }
}

fn seeded_detection(dir: &Path) -> Verdict {
    let start = Instant::now();
    let out = dir.join("seeded");
    let code = run_pipeline(&out, Some(&bundled::faults_path()), &[]);
    let elapsed = start.elapsed();
    let faults = parse_faults(bundled::FAULTS).unwrap();
    let findings = findings_of(&out);
    let audit = audit_seeds(&findings, &faults);
    let mut want: BTreeMap<FindingKind, BTreeSet<String>> = BTreeMap::new();
    for f in &faults {
        want.entry(FindingKind::expected_for(f.kind)).or_default().insert(f.api_pattern.clone());
    }
    let mut got: BTreeMap<FindingKind, BTreeSet<String>> = BTreeMap::new();
    for f in &findings {
        got.entry(f.kind).or_default().insert(f.api.clone());
    }
    let pass = faults.len() == 12
        && audit.recalled.len() == 12
        && audit.false_positives.is_empty()
        && got == want
        && code == 2
        && elapsed < Duration::from_secs(60);
    let counts: Vec<String> = got.iter().map(|(k, v)| format!("{k} {}", v.len())).collect();
    Verdict {
        id: 3,
        name: "seeded-fault detection",
        pass,
        detail: format!(
            "recall {}/{}, {} false positives, kinds [{}], exit {code}, {elapsed:.2?}",
            audit.recalled.len(),
            faults.len(),
            audit.false_positives.len(),
            counts.join(", ")
        ),
    }
}

fn bfs_equivalence() -> Verdict {
    let mut mismatches = 0;
    let mut cases = 0;
    for seed in 0..SYNTH_SEEDS {
        let cat = random_catalog(seed, 15, 60);
        let l = labels(&cat);
        let suite = discover(&build_graph(&cat).unwrap(), &l, &GenConfig::default()).unwrap();
        let mut got = suite.cases.clone();
        got.sort_by_key(|c| c.bfs_index);
        let got: Vec<(String, Option<String>)> = got.into_iter().map(|c| (c.target_api, c.depends_on)).collect();
        let want: Vec<(String, Option<String>)> =
            bfs_oracle(&cat, &l).into_iter().map(|c| (c.api, c.discovered_by)).collect();
        cases += want.len();
        if got != want {
            mismatches += 1;
        }
    }
    Verdict {
        id: 4,
        name: "discovery equals brute-force BFS",
        pass: mismatches == 0,
        detail: format!("{SYNTH_SEEDS} catalogs, {cases} oracle cases, {mismatches} mismatches"),
    }
}

fn pruning() -> Verdict {
    let cat = bundled::workspace_catalog();
    let l = labels(&cat);
    let suite = generate_suite(&build_graph(&cat).unwrap(), &l, &GenConfig::default()).unwrap();
    let failing = "Document.getBody";
    let mut doomed = BTreeSet::from([failing.to_string()]);
    loop {
        let n = doomed.len();
        for c in &suite.cases {
            if c.depends_on.as_ref().is_some_and(|d| doomed.contains(d)) {
                doomed.insert(c.id.clone());
            }
        }
        if doomed.len() == n {
            break;
        }
    }
    doomed.remove(failing);
    let backend = FailingBackend {
        inner: SimBackend::new(SimEnv::with_default_labels(cat), Template::bundled(), vec![]).unwrap(),
        deny: BTreeSet::from([failing.to_string()]),
    };
    let records = run_sessions(&backend, &suite.cases, &sessions_for(RunMode::Both), DEFAULT_TIMEOUT).unwrap();
    let executed = records
        .iter()
        .filter(|r| doomed.contains(&r.case_id) && r.outcome.was_executed())
        .count();
    Verdict {
        id: 5,
        name: "failing dependency prunes dependents",
        pass: !doomed.is_empty() && executed == 0,
        detail: format!("{} dependents of {failing}, {executed} executed records", doomed.len()),
    }
}

fn shortest_paths() -> Verdict {
    let mut mismatches = 0;
    let mut nondeterministic = 0;
    let mut compared = 0;
    for seed in 0..SYNTH_SEEDS {
        let cat = random_catalog(seed, 15, 60);
        let graph = build_graph(&cat).unwrap();
        for class in cat.classes().keys().filter(|c| !cat.is_root(c)) {
            let got = graph.shortest_producer_path(class, PathTieBreak::Lexicographic).ok();
            match (min_chain_len(&cat, class, 4), &got) {
                (Some(n), Some(chain)) => {
                    compared += 1;
                    if chain.steps.len() != n || graph.replay(chain).is_err() {
                        mismatches += 1;
                    }
                }
                (None, Some(chain)) if chain.steps.len() <= 4 => mismatches += 1,
                (Some(_), None) => mismatches += 1,
                _ => {}
            }
            for tie in [PathTieBreak::Lexicographic, PathTieBreak::Seeded(seed)] {
                let runs: Vec<Option<Vec<String>>> = (0..3)
                    .map(|_| {
                        graph
                            .shortest_producer_path(class, tie)
                            .ok()
                            .map(|c| c.api_ids().into_iter().map(str::to_string).collect())
                    })
                    .collect();
                if runs.windows(2).any(|w| w[0] != w[1]) {
                    nondeterministic += 1;
                }
            }
        }
    }
    Verdict {
        id: 6,
        name: "shortest producer paths",
        pass: mismatches == 0 && nondeterministic == 0 && compared > 0,
        detail: format!("{compared} classes compared, {mismatches} mismatches, {nondeterministic} unstable tie-breaks"),
    }
}

fn ordering() -> Verdict {
    let mut suites: Vec<(String, Catalog)> = vec![("bundled".into(), bundled::workspace_catalog())];
    suites.extend((0..SYNTH_SEEDS).map(|s| (format!("synthetic {s}"), random_catalog(s, 15, 60))));
    let mut bad = Vec::new();
    for (name, cat) in &suites {
        let suite = generate_suite(&build_graph(cat).unwrap(), &labels(cat), &GenConfig::default()).unwrap();
        let parsed = from_jsonl(&to_jsonl(&suite.cases)).unwrap();
        if !check_order(&parsed).is_empty() {
            bad.push(name.clone());
        }
    }
    Verdict {
        id: 7,
        name: "suite ordering",
        pass: bad.is_empty(),
        detail: format!("{}/{} suites ordered {:?}", suites.len() - bad.len(), suites.len(), bad),
    }
}

#[derive(serde::Deserialize)]
struct Corpus {
    catalogs: Vec<CatalogFile>,
    labels: BTreeMap<String, Expected>,
}

#[derive(serde::Deserialize)]
struct Expected {
    operation: Operation,
    touches_sharing: bool,
}

fn classifier() -> Verdict {
    let corpus: Corpus = serde_json::from_str(bundled::CLASSIFIER_CORPUS).unwrap();
    let cat = Catalog::from_files(corpus.catalogs).unwrap();
    let config = ClassifierConfig::default();
    let mut wrong = Vec::new();
    for (id, want) in &corpus.labels {
        let got = classify_api(cat.api(id).unwrap(), &cat, &config).label;
        if got.operation != want.operation || got.touches_sharing != want.touches_sharing {
            wrong.push(id.clone());
        }
    }
    let traps = ["SlidesApp.newAffineTransformBuilder", "SpreadsheetApp.newDataValidation"];
    let traps_ok = traps.iter().all(|t| corpus.labels.contains_key(*t) && !wrong.iter().any(|w| w == t));
    let score = corpus.labels.len() - wrong.len();
    Verdict {
        id: 8,
        name: "classifier accuracy",
        pass: corpus.labels.len() == 40 && score >= 38 && traps_ok,
        detail: format!("{score}/{} correct, builder traps correct: {traps_ok}, wrong {wrong:?}", corpus.labels.len()),
    }
}

fn fault_free(dir: &Path) -> Verdict {
    let out = dir.join("clean");
    let code = run_pipeline(&out, None, &[]);
    let findings = findings_of(&out).len();
    Verdict {
        id: 9,
        name: "fault-free clean run",
        pass: code == 0 && findings == 0,
        detail: format!("{findings} findings, exit {code}"),
    }
}

fn determinism(dir: &Path) -> Verdict {
    let files = ["suite.jsonl", "records.jsonl", "report.json", "report.txt"];
    let args = ["--seed", "17", "--random-tie-break"];
    let a = dir.join("det-a");
    let b = dir.join("det-b");
    let codes = (
        run_pipeline(&a, Some(&bundled::faults_path()), &args),
        run_pipeline(&b, Some(&bundled::faults_path()), &args),
    );
    let differing: Vec<&str> = files
        .iter()
        .copied()
        .filter(|f| std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok())
        .collect();
    Verdict {
        id: 10,
        name: "same seed, identical artifacts",
        pass: differing.is_empty() && codes.0 == codes.1,
        detail: format!("compared {files:?}, differing {differing:?}"),
    }
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let verdicts = [
        containment(),
        monotonicity(),
        seeded_detection(dir.path()),
        bfs_equivalence(),
        pruning(),
        shortest_paths(),
        ordering(),
        classifier(),
        fault_free(dir.path()),
        determinism(dir.path()),
    ];
    for v in &verdicts {
        report(v);
    }
    let failed: Vec<u8> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
