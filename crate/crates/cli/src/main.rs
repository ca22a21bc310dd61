use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scopeprobe_core::catalog::Catalog;
use scopeprobe_core::classifier::{labels_only, Classification, PermissionLabel};
use scopeprobe_core::detector::{build_report, detect, Report};
use scopeprobe_core::executor::{records_from_jsonl, records_to_jsonl, run_sessions, sessions_for, RunMode, DEFAULT_TIMEOUT};
use scopeprobe_core::graph::{build_graph, PathTieBreak};
use scopeprobe_core::pipeline::{self, classify, load_catalog, load_faults, load_matrix, to_pretty_json, RunConfig};
use scopeprobe_core::remote::RemoteEndpoint;
use scopeprobe_core::sim::{SimBackend, SimEnv, Template};
use scopeprobe_core::testgen::{from_jsonl, generate_suite, to_jsonl, Exclusion, GenConfig};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "scopeprobe", version, about = "Permission-escalation testing for add-on host APIs")]
struct Cli {
    /// tracing filter, e.g. `info` or `scopeprobe_core=debug`
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a catalog and print its census.
    Ingest {
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Label every API with the operation it performs.
    Classify {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        remote: RemoteArgs,
    },
    /// Dependency graph commands.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Generate the ordered test suite.
    Gen {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// labels from `classify`; classified on the fly when absent
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// break producer-path ties randomly from the seed
        #[arg(long)]
        random_tie_break: bool,
        /// where to write excluded and unreachable APIs
        #[arg(long)]
        exclusions: Option<PathBuf>,
        #[command(flatten)]
        remote: RemoteArgs,
    },
    /// Execute a suite against the workspace simulator.
    Run {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        faults: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect escalations in execution records.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// aligned text table
        #[arg(long)]
        text: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// template the records ran on; enables ground-truth filtering
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        exclusions: Option<PathBuf>,
    },
    /// Run every stage and write all artifacts.
    Pipeline(PipelineArgs),
}

#[derive(Subcommand)]
enum GraphCommand {
    Export {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    RoleMatrix,
    ScopeLadder,
    Both,
}

impl From<ModeArg> for RunMode {
    fn from(m: ModeArg) -> RunMode {
        match m {
            ModeArg::RoleMatrix => RunMode::RoleMatrix,
            ModeArg::ScopeLadder => RunMode::ScopeLadder,
            ModeArg::Both => RunMode::Both,
        }
    }
}

#[derive(Args, Clone, Default)]
struct RemoteArgs {
    /// text-model endpoint for low-confidence labels and integer pairs
    #[arg(long)]
    remote_url: Option<String>,
    /// environment variable holding the endpoint's bearer token
    #[arg(long)]
    remote_token_env: Option<String>,
}

impl RemoteArgs {
    fn endpoint(&self) -> Option<RemoteEndpoint> {
        self.remote_url.as_ref().map(|url| {
            let mut e = RemoteEndpoint::new(url.clone());
            e.token_env = self.remote_token_env.clone();
            e
        })
    }
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON run configuration; other flags are ignored when given
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    template: Option<PathBuf>,
    #[arg(long)]
    faults: Option<PathBuf>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    random_tie_break: bool,
    #[command(flatten)]
    remote: RemoteArgs,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn labels_for(catalog: &Catalog, path: Option<&Path>, remote: Option<&RemoteEndpoint>) -> Result<BTreeMap<String, PermissionLabel>> {
    match path {
        Some(p) => {
            let parsed: BTreeMap<String, Classification> =
                serde_json::from_str(&read_file(p)?).with_context(|| format!("parsing labels {}", p.display()))?;
            Ok(labels_only(&parsed))
        }
        None => Ok(labels_only(&classify(catalog, remote))),
    }
}

fn ingest(catalog: Option<PathBuf>) -> Result<u8> {
    let cat = load_catalog(catalog.as_deref())?;
    let census = cat.object_census();
    let summary = serde_json::json!({
        "apis": cat.api_count(),
        "classes": cat.classes().len(),
        "objects_per_app": census,
        "external_types": cat.external_types(),
    });
    println!("{}", to_pretty_json(&summary).trim_end());
    Ok(0)
}

fn graph_export(catalog: Option<PathBuf>, format: GraphFormat, out: Option<PathBuf>) -> Result<u8> {
    let cat = load_catalog(catalog.as_deref())?;
    let graph = build_graph(&cat)?;
    let text = match format {
        GraphFormat::Dot => graph.to_dot(),
        GraphFormat::Json => {
            let methods: BTreeMap<&str, &[String]> = graph.class_nodes().iter().map(|c| (c.as_str(), graph.methods_of(c))).collect();
            let returns: BTreeMap<&str, String> = cat
                .apis()
                .filter_map(|a| graph.return_of(&a.id).map(|t| (a.id.as_str(), t.to_string())))
                .collect();
            to_pretty_json(&serde_json::json!({
                "classes": graph.class_nodes(),
                "methods": methods,
                "returns": returns,
            }))
        }
    };
    match out {
        Some(p) => write_file(&p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn gen(
    catalog: Option<PathBuf>,
    out: PathBuf,
    labels: Option<PathBuf>,
    seed: u64,
    random_tie_break: bool,
    exclusions: Option<PathBuf>,
    remote: RemoteArgs,
) -> Result<u8> {
    let cat = load_catalog(catalog.as_deref())?;
    let endpoint = remote.endpoint();
    let labels = labels_for(&cat, labels.as_deref(), endpoint.as_ref())?;
    let graph = build_graph(&cat)?;
    let config = GenConfig {
        tie_break: if random_tie_break {
            PathTieBreak::Seeded(seed)
        } else {
            PathTieBreak::Lexicographic
        },
        remote: endpoint,
    };
    let suite = generate_suite(&graph, &labels, &config)?;
    write_file(&out, &to_jsonl(&suite.cases))?;
    if let Some(p) = exclusions {
        write_file(
            &p,
            &to_pretty_json(&serde_json::json!({"excluded": suite.excluded, "unreachable": suite.unreachable})),
        )?;
    }
    eprintln!(
        "{} cases, {} excluded, {} unreachable",
        suite.cases.len(),
        suite.excluded.len(),
        suite.unreachable.len()
    );
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn run(
    suite: PathBuf,
    template: PathBuf,
    faults: Option<PathBuf>,
    catalog: Option<PathBuf>,
    labels: Option<PathBuf>,
    matrix: Option<PathBuf>,
    mode: ModeArg,
    out: PathBuf,
) -> Result<u8> {
    let cat = load_catalog(catalog.as_deref())?;
    let labels = labels_for(&cat, labels.as_deref(), None)?;
    let cases = from_jsonl(&read_file(&suite)?)?;
    let template = Template::load(&template)?;
    let faults = faults.as_deref().map(load_faults).transpose()?.unwrap_or_default();
    let matrix = load_matrix(matrix.as_deref())?;
    let backend = SimBackend::new(SimEnv::new(cat, labels, matrix), template, faults)?;
    let records = run_sessions(&backend, &cases, &sessions_for(mode.into()), DEFAULT_TIMEOUT)?;
    write_file(&out, &records_to_jsonl(&records))?;
    eprintln!("{} records", records.len());
    Ok(0)
}

#[derive(serde::Deserialize, Default)]
struct ExclusionsFile {
    #[serde(default)]
    excluded: Vec<Exclusion>,
    #[serde(default)]
    unreachable: Vec<String>,
}

#[allow(clippy::too_many_arguments)]
fn report(
    records: PathBuf,
    out: PathBuf,
    text: Option<PathBuf>,
    catalog: Option<PathBuf>,
    labels: Option<PathBuf>,
    matrix: Option<PathBuf>,
    template: Option<PathBuf>,
    exclusions: Option<PathBuf>,
) -> Result<u8> {
    let cat = load_catalog(catalog.as_deref())?;
    let labels = labels_for(&cat, labels.as_deref(), None)?;
    let recs = records_from_jsonl(&read_file(&records)?).context("parsing records")?;
    let matrix = load_matrix(matrix.as_deref())?;
    let truth = match template {
        Some(t) => {
            let env = SimEnv::new(cat.clone(), labels.clone(), matrix.clone());
            Some(SimBackend::new(env, Template::load(&t)?, Vec::new())?.ground_truth())
        }
        None => None,
    };
    let excl: ExclusionsFile = match exclusions {
        Some(p) => serde_json::from_str(&read_file(&p)?).context("parsing exclusions")?,
        None => ExclusionsFile::default(),
    };
    let detection = detect(&recs, &labels, &matrix, truth.as_ref())?;
    let rep: Report = build_report(&detection, &recs, &cat, &excl.excluded, &excl.unreachable);
    write_file(&out, &to_pretty_json(&rep))?;
    if let Some(p) = text {
        write_file(&p, &rep.to_text())?;
    }
    print!("{}", rep.to_text());
    Ok(if rep.has_findings() { 2 } else { 0 })
}

fn run_pipeline(args: PipelineArgs, log_level: &str) -> Result<u8> {
    let config = match args.config {
        Some(p) => RunConfig::load(&p)?,
        None => {
            let (Some(template), Some(out_dir)) = (args.template, args.out_dir) else {
                bail!("--template and --out-dir are required without --config");
            };
            RunConfig {
                catalog: args.catalog,
                template,
                faults: args.faults,
                matrix: args.matrix,
                out_dir,
                mode: args.mode.into(),
                seed: args.seed,
                random_tie_break: args.random_tie_break,
                remote: args.remote.endpoint(),
                log_level: log_level.to_string(),
            }
        }
    };
    let campaign = pipeline::pipeline(&config)?;
    print!("{}", campaign.report.to_text());
    Ok(campaign.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_new(&cli.log_level).unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let result = match cli.command {
        Command::Ingest { catalog } => ingest(catalog),
        Command::Classify { catalog, out, remote } => load_catalog(catalog.as_deref())
            .map_err(Into::into)
            .and_then(|cat| write_file(&out, &to_pretty_json(&classify(&cat, remote.endpoint().as_ref()))))
            .map(|_| 0),
        Command::Graph {
            command: GraphCommand::Export { catalog, format, out },
        } => graph_export(catalog, format, out),
        Command::Gen {
            catalog,
            out,
            labels,
            seed,
            random_tie_break,
            exclusions,
            remote,
        } => gen(catalog, out, labels, seed, random_tie_break, exclusions, remote),
        Command::Run {
            suite,
            template,
            faults,
            catalog,
            labels,
            matrix,
            mode,
            out,
        } => run(suite, template, faults, catalog, labels, matrix, mode, out),
        Command::Report {
            records,
            out,
            text,
            catalog,
            labels,
            matrix,
            template,
            exclusions,
        } => report(records, out, text, catalog, labels, matrix, template, exclusions),
        Command::Pipeline(args) => run_pipeline(args, &cli.log_level),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
