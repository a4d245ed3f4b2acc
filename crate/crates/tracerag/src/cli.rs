//! Command-line entry point: `index`, `analyze`, `report`, `eval` and `run`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tracerag_core::analysis::{default_battery, validate_battery, Engine, QueryOutcome, QueryResult, QuerySpec};
use tracerag_core::embed::Embedder;
use tracerag_core::java::CodeUnit;
use tracerag_core::llm::{PromptRunner, TemplateSet};
use tracerag_core::report::{render_markdown, FinalReport, ReportBuilder};
use tracerag_core::store::VectorStore;

use crate::config::{Config, ConfigError, EmbeddingProvider, ProviderKind};
use crate::embeddings::{mock_embedder, EmbedderKind, RemoteEmbedder};
use crate::eval::{evaluate, load_truth, load_verdicts};
use crate::gateway::{Gateway, GatewayStats, LlmMode, ReplayCache, RetryPolicy};
use crate::pipeline::{ingest_app, units_for, IngestionStats};
use crate::providers::{HttpProvider, ScriptedProvider};
use crate::source::{
    dominant_package, file_sha256, manifest_package, read_source_tree, run_decompiler, tree_digest, validate_sha256,
    AppMeta,
};
use crate::storefile::{load_store, save_store};

#[derive(Debug, Parser)]
#[command(name = "tracerag", version, about = "Code-grounded behavior analysis of decompiled Android apps")]
pub struct Cli {
    /// TOML config file (default: $TRACERAG_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// live, replay or record.
    #[arg(long, global = true)]
    pub llm_mode: Option<LlmMode>,
    #[arg(long, global = true, value_enum)]
    pub llm_provider: Option<ProviderKind>,
    /// Response script for the scripted provider.
    #[arg(long, global = true)]
    pub script: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub base_url: Option<String>,
    #[arg(long, global = true)]
    pub concurrency: Option<usize>,
    /// Directory of `<role>.txt` prompt templates overriding the bundled ones.
    #[arg(long, global = true)]
    pub templates: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split, clean, describe and embed one app into a store file.
    Index(IndexArgs),
    /// Run the behavior-query battery against a store.
    Analyze(AnalyzeArgs),
    /// Build the final report from analysis outcomes.
    Report(ReportArgs),
    /// Score verdicts against a labeled manifest.
    Eval(EvalArgs),
    /// Index, analyze and report in one go.
    Run(RunArgs),
}

#[derive(Debug, Args, Clone)]
pub struct SourceArgs {
    /// Root of the decompiled sources.
    #[arg(long)]
    pub app_root: Option<PathBuf>,
    #[arg(long)]
    pub app_id: String,
    #[arg(long)]
    pub sha256: Option<String>,
    /// Package name, when the sources carry no AndroidManifest.xml.
    #[arg(long)]
    pub package: Option<String>,
    /// Index whole files without splitting or cleaning.
    #[arg(long)]
    pub no_split_clean: bool,
    /// Index raw code instead of generated descriptions.
    #[arg(long)]
    pub raw_code_index: bool,
    /// Embedding provider.
    #[arg(long, value_enum)]
    pub provider: Option<EmbeddingProvider>,
    /// APK to decompile before indexing (needs --decompiler-cmd).
    #[arg(long)]
    pub apk: Option<PathBuf>,
    /// Shell command with `{apk}` and `{out}` placeholders.
    #[arg(long)]
    pub decompiler_cmd: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct IndexArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Store file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also dump the code units as JSON Lines.
    #[arg(long)]
    pub units_out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct AnalysisArgs {
    #[arg(long)]
    pub max_turns: Option<usize>,
    #[arg(long)]
    pub single_turn: bool,
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Args, Clone)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub store: PathBuf,
    /// JSON Lines file of query specs (default: the standard eleven).
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Markdown,
    Structured,
}

#[derive(Debug, Args, Clone)]
pub struct ReportArgs {
    #[arg(long)]
    pub outcomes: PathBuf,
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: ReportFormat,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct EvalArgs {
    /// Verdict JSON Lines file, a report.json, or a directory of runs.
    #[arg(long)]
    pub verdicts: PathBuf,
    /// Labeled manifest, one JSON object per line.
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long)]
    pub queries: Option<PathBuf>,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Output directory (default from config).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomesFile {
    pub app_id: String,
    pub outcomes: Vec<QueryOutcome>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub sessions: usize,
    pub followup_resolutions: usize,
    pub aborted_sessions: usize,
    pub no_relevant_code: usize,
    pub failed_queries: Vec<String>,
}

impl AnalysisSummary {
    pub fn of(outcomes: &[QueryOutcome]) -> Self {
        let mut s = AnalysisSummary::default();
        for o in outcomes {
            match &o.result {
                QueryResult::NoRelevantCode => s.no_relevant_code += 1,
                QueryResult::Failed { .. } => s.failed_queries.push(o.query_id.to_string()),
                QueryResult::Analyzed { sessions } => {
                    s.sessions += sessions.len();
                    s.followup_resolutions += sessions.iter().map(|x| x.followup_resolutions()).sum::<usize>();
                    s.aborted_sessions += sessions.iter().filter(|x| x.aborted.is_some()).count();
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub llm_mode: LlmMode,
    pub model: String,
    pub embedder: String,
    pub max_turns: usize,
    pub top_k: usize,
    pub single_turn: bool,
    pub split_and_clean: bool,
    pub use_descriptions: bool,
    pub concurrency: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub app_id: String,
    pub package_name: String,
    pub sha256: String,
    pub settings: RunSettings,
    pub ingestion: IngestionStats,
    pub analysis: AnalysisSummary,
    pub gateway: GatewayStats,
    pub verdict_malicious: bool,
    pub detected_queries: Vec<String>,
    pub timings_ms: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

/// Exit status: 0 success, 1 fatal error, 2 configuration error, 3 some query failed.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match execute(&cli, &|k| std::env::var(k).ok()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.downcast_ref::<ConfigError>().is_some()) {
                2
            } else {
                1
            }
        }
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    let _ = tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr)
        .with_ansi(std::io::IsTerminal::is_terminal(&std::io::stderr()))
        .try_init();
}

type Env<'a> = &'a dyn Fn(&str) -> Option<String>;

fn resolve_config(cli: &Cli, env: Env<'_>) -> Result<Config, ConfigError> {
    let mut cfg = Config::layered(cli.config.as_deref(), env)?;
    if let Some(m) = cli.llm_mode {
        cfg.llm_mode = m;
    }
    if let Some(p) = cli.llm_provider {
        cfg.llm_provider = p;
    }
    if let Some(s) = &cli.script {
        cfg.script = Some(s.clone());
    }
    if let Some(m) = &cli.model {
        cfg.model = m.clone();
    }
    if let Some(u) = &cli.base_url {
        cfg.base_url = u.clone();
    }
    if let Some(c) = cli.concurrency {
        cfg.concurrency = c;
    }
    if let Some(t) = &cli.templates {
        cfg.templates_dir = Some(t.clone());
    }
    match &cli.command {
        Command::Index(a) => {
            apply_source(&mut cfg, &a.source);
            cfg.cache = a.cache.clone().or(cfg.cache.take());
        }
        Command::Analyze(a) => {
            apply_analysis(&mut cfg, &a.analysis);
            cfg.cache = a.cache.clone().or(cfg.cache.take());
        }
        Command::Report(a) => cfg.cache = a.cache.clone().or(cfg.cache.take()),
        Command::Run(a) => {
            apply_source(&mut cfg, &a.source);
            apply_analysis(&mut cfg, &a.analysis);
            cfg.cache = a.cache.clone().or(cfg.cache.take());
            if let Some(d) = &a.out_dir {
                cfg.output_dir = d.clone();
            }
        }
        Command::Eval(_) => return Ok(cfg),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply_source(cfg: &mut Config, s: &SourceArgs) {
    if s.no_split_clean {
        cfg.split_and_clean = false;
    }
    if s.raw_code_index {
        cfg.use_descriptions = false;
    }
    if let Some(p) = s.provider {
        cfg.embedding_provider = p;
    }
}

fn apply_analysis(cfg: &mut Config, a: &AnalysisArgs) {
    if let Some(n) = a.max_turns {
        cfg.max_turns = n;
    }
    if let Some(k) = a.top_k {
        cfg.top_k = k;
    }
    if a.single_turn {
        cfg.single_turn = true;
    }
}

fn build_gateway(cfg: &Config, env: Env<'_>) -> Result<Gateway> {
    let cache = match (cfg.llm_mode, &cfg.cache) {
        (LlmMode::Replay, Some(p)) => ReplayCache::load(p)?,
        (LlmMode::Record, Some(p)) => ReplayCache::open_or_create(p)?,
        _ => ReplayCache::in_memory(),
    };
    let provider: Option<Box<dyn crate::gateway::Provider>> = match (cfg.llm_mode, cfg.llm_provider) {
        (LlmMode::Replay, _) => None,
        (_, ProviderKind::Scripted) => {
            let path = cfg.script.as_ref().ok_or_else(|| ConfigError::Missing("scripted provider needs --script".into()))?;
            Some(Box::new(ScriptedProvider::load(path)?))
        }
        (_, ProviderKind::Http) => Some(Box::new(HttpProvider::new(
            &cfg.base_url,
            cfg.api_key(env)?,
            std::time::Duration::from_secs(cfg.timeout_secs),
        ))),
    };
    Ok(Gateway::new(cfg.llm_mode, provider, cache)
        .with_concurrency(cfg.concurrency)
        .with_retry(RetryPolicy { attempts: 3, base_delay: std::time::Duration::from_millis(cfg.retry_base_ms) }))
}

fn remote_embedder(cfg: &Config, model: &str, dim: usize, env: Env<'_>) -> Result<Box<dyn Embedder>> {
    let base = cfg.embedding_base_url.as_deref().unwrap_or(&cfg.base_url);
    let http = HttpProvider::new(base, cfg.api_key(env)?, std::time::Duration::from_secs(cfg.timeout_secs));
    Ok(Box::new(RemoteEmbedder::new(http, model, dim)))
}

fn index_embedder(cfg: &Config, env: Env<'_>) -> Result<Box<dyn Embedder>> {
    match cfg.embedding_provider {
        EmbeddingProvider::Mock => Ok(Box::new(mock_embedder())),
        EmbeddingProvider::Remote => remote_embedder(cfg, &cfg.embedding_model, cfg.embedding_dim, env),
    }
}

/// The embedder that built `store`, so queries land in the same space.
fn store_embedder(cfg: &Config, store: &VectorStore, env: Env<'_>) -> Result<Box<dyn Embedder>> {
    match EmbedderKind::parse(&store.meta().embedder) {
        Some(EmbedderKind::Mock { dim }) => Ok(Box::new(tracerag_core::embed::MockEmbedder::new(dim))),
        Some(EmbedderKind::Remote { model, dim }) => remote_embedder(cfg, &model, dim, env),
        None => bail!("store was built with unknown embedder `{}`", store.meta().embedder),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_queries(path: Option<&Path>) -> Result<Vec<QuerySpec>> {
    let Some(path) = path else { return Ok(default_battery()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let specs = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<Vec<QuerySpec>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    validate_battery(&specs).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(specs)
}

struct Prepared {
    meta: AppMeta,
    files: Vec<tracerag_core::java::SourceFile>,
    warnings: Vec<String>,
}

fn prepare_source(s: &SourceArgs, work_dir: &Path) -> Result<Prepared> {
    let root = match (&s.apk, &s.decompiler_cmd, &s.app_root) {
        (Some(apk), Some(cmd), _) => {
            let out = work_dir.join("decompiled");
            run_decompiler(cmd, apk, &out)?;
            out
        }
        (Some(_), None, None) => bail!(ConfigError::Missing("--apk needs --decompiler-cmd".into())),
        (_, _, Some(root)) => root.clone(),
        (None, _, None) => bail!(ConfigError::Missing("--app-root or --apk is required".into())),
    };
    let tree = read_source_tree(&root).context("indexing")?;
    let sha256 = match (&s.sha256, &s.apk) {
        (Some(h), _) => validate_sha256(&h.to_ascii_lowercase())?,
        (None, Some(apk)) => file_sha256(apk)?,
        (None, None) => tree_digest(&tree.files),
    };
    let package_name = manifest_package(&root)
        .or_else(|| s.package.clone())
        .or_else(|| dominant_package(&tree.files))
        .unwrap_or_default();
    Ok(Prepared {
        meta: AppMeta { app_id: s.app_id.clone(), package_name, sha256, source_root: root },
        files: tree.files,
        warnings: tree.warnings,
    })
}

pub fn execute(cli: &Cli, env: Env<'_>) -> Result<i32> {
    if let Command::Eval(a) = &cli.command {
        return cmd_eval(a);
    }
    let cfg = resolve_config(cli, env)?;
    let templates = cfg.templates()?;
    let gateway = build_gateway(&cfg, env)?;
    let code = match &cli.command {
        Command::Index(a) => cmd_index(&cfg, &templates, &gateway, a, env),
        Command::Analyze(a) => cmd_analyze(&cfg, &templates, &gateway, a, env),
        Command::Report(a) => cmd_report(&cfg, &templates, &gateway, a),
        Command::Run(a) => cmd_run(&cfg, &templates, &gateway, a, env),
        Command::Eval(_) => unreachable!("handled above"),
    };
    gateway.persist().context("writing replay cache")?;
    code
}

fn cmd_index(cfg: &Config, templates: &TemplateSet, gw: &Gateway, a: &IndexArgs, env: Env<'_>) -> Result<i32> {
    let work = a.out.parent().map(Path::to_path_buf).unwrap_or_default();
    let p = prepare_source(&a.source, &work)?;
    let embedder = index_embedder(cfg, env)?;
    if let Some(path) = &a.units_out {
        let mut w = p.warnings.clone();
        let units = units_for(&p.files, &cfg.pipeline(), &mut w);
        write_file(path, &units_jsonl(&units))?;
    }
    let llm = PromptRunner::new(gw, templates, &cfg.model);
    let (store, stats) =
        ingest_app(&p.meta, &p.files, &cfg.pipeline(), &llm, embedder.as_ref(), cfg.concurrency).context("indexing")?;
    save_store(&store, &a.out).context("indexing")?;
    for w in p.warnings.iter().chain(&stats.warnings) {
        tracing::warn!("{w}");
    }
    println!("indexed {} records from {} files into {}", stats.records, stats.files, a.out.display());
    Ok(0)
}

fn units_jsonl(units: &[CodeUnit]) -> String {
    units.iter().map(|u| serde_json::to_string(u).expect("units serialize") + "\n").collect()
}

fn cmd_analyze(cfg: &Config, templates: &TemplateSet, gw: &Gateway, a: &AnalyzeArgs, env: Env<'_>) -> Result<i32> {
    let store = load_store(&a.store).context("analysis")?;
    let queries = load_queries(a.queries.as_deref())?;
    let embedder = store_embedder(cfg, &store, env)?;
    let llm = PromptRunner::new(gw, templates, &cfg.model);
    let outcomes = Engine::new(&store, embedder.as_ref(), llm, cfg.analysis()).run_battery(&queries);
    let file = OutcomesFile { app_id: store.meta().app_id.clone(), outcomes };
    write_file(&a.out, &(serde_json::to_string_pretty(&file)? + "\n"))?;
    let summary = AnalysisSummary::of(&file.outcomes);
    println!(
        "analyzed {} queries: {} sessions, {} without relevant code",
        file.outcomes.len(),
        summary.sessions,
        summary.no_relevant_code
    );
    Ok(failure_code(&summary))
}

fn failure_code(s: &AnalysisSummary) -> i32 {
    if s.failed_queries.is_empty() {
        0
    } else {
        eprintln!("error: queries failed: {}", s.failed_queries.join(", "));
        3
    }
}

fn build_report(templates: &TemplateSet, gw: &Gateway, model: &str, store: &VectorStore, outcomes: &[QueryOutcome]) -> Result<FinalReport> {
    let llm = PromptRunner::new(gw, templates, model);
    ReportBuilder::new(llm, store).build(outcomes).context("report")
}

fn cmd_report(cfg: &Config, templates: &TemplateSet, gw: &Gateway, a: &ReportArgs) -> Result<i32> {
    let store = load_store(&a.store).context("report")?;
    let text = fs::read_to_string(&a.outcomes).with_context(|| format!("reading {}", a.outcomes.display()))?;
    let file: OutcomesFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.outcomes.display()))?;
    if file.app_id != store.meta().app_id {
        bail!("outcomes are for app {} but the store is for {}", file.app_id, store.meta().app_id);
    }
    let report = build_report(templates, gw, &cfg.model, &store, &file.outcomes)?;
    let out = match a.format {
        ReportFormat::Markdown => render_markdown(&report),
        ReportFormat::Structured => serde_json::to_string_pretty(&report)? + "\n",
    };
    write_file(&a.out, &out)?;
    Ok(0)
}

fn cmd_eval(a: &EvalArgs) -> Result<i32> {
    let truth = load_truth(&a.truth)?;
    let verdicts = load_verdicts(&a.verdicts)?;
    let report = evaluate(&verdicts, &truth).context("evaluation")?;
    write_file(&a.out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
    let fmt = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{:.4}", tracerag_core::metrics::round4(v)));
    println!(
        "accuracy {} precision {} recall {} f1 {} behavior accuracy {}",
        fmt(report.binary.accuracy),
        fmt(report.binary.precision),
        fmt(report.binary.recall),
        fmt(report.binary.f1),
        fmt(report.behavior_accuracy)
    );
    Ok(0)
}

fn cmd_run(cfg: &Config, templates: &TemplateSet, gw: &Gateway, a: &RunArgs, env: Env<'_>) -> Result<i32> {
    let out = &cfg.output_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut timings = BTreeMap::new();
    let mut warnings = Vec::new();
    let llm = PromptRunner::new(gw, templates, &cfg.model);

    let t = Instant::now();
    let p = prepare_source(&a.source, out)?;
    warnings.extend(p.warnings.iter().cloned());
    let embedder = index_embedder(cfg, env)?;
    let (store, ingestion) =
        ingest_app(&p.meta, &p.files, &cfg.pipeline(), &llm, embedder.as_ref(), cfg.concurrency).context("indexing")?;
    warnings.extend(ingestion.warnings.iter().cloned());
    let store_path = out.join("store.jsonl");
    save_store(&store, &store_path).context("indexing")?;
    timings.insert("index".to_string(), t.elapsed().as_millis() as u64);

    let t = Instant::now();
    let queries = load_queries(a.queries.as_deref())?;
    let outcomes = Engine::new(&store, embedder.as_ref(), llm, cfg.analysis()).run_battery(&queries);
    for o in &outcomes {
        warnings.extend(o.warnings.iter().map(|w| format!("{}: {w}", o.query_id)));
    }
    let file = OutcomesFile { app_id: p.meta.app_id.clone(), outcomes };
    write_file(&out.join("outcomes.json"), &(serde_json::to_string_pretty(&file)? + "\n"))?;
    timings.insert("analyze".to_string(), t.elapsed().as_millis() as u64);

    let t = Instant::now();
    let report = build_report(templates, gw, &cfg.model, &store, &file.outcomes)?;
    write_file(&out.join("report.md"), &render_markdown(&report))?;
    write_file(&out.join("report.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    timings.insert("report".to_string(), t.elapsed().as_millis() as u64);

    let analysis = AnalysisSummary::of(&file.outcomes);
    let manifest = RunManifest {
        app_id: p.meta.app_id.clone(),
        package_name: p.meta.package_name.clone(),
        sha256: p.meta.sha256.clone(),
        settings: RunSettings {
            llm_mode: cfg.llm_mode,
            model: cfg.model.clone(),
            embedder: embedder.descriptor(),
            max_turns: cfg.max_turns,
            top_k: cfg.top_k,
            single_turn: cfg.single_turn,
            split_and_clean: cfg.split_and_clean,
            use_descriptions: cfg.use_descriptions,
            concurrency: cfg.concurrency,
        },
        ingestion,
        gateway: gw.stats(),
        verdict_malicious: report.verdict.is_malicious,
        detected_queries: report.verdict.detected_queries().iter().map(|q| q.to_string()).collect(),
        timings_ms: timings,
        warnings,
        artifacts: ["store.jsonl", "outcomes.json", "report.md", "report.json", "manifest.json"]
            .map(String::from)
            .to_vec(),
        analysis,
    };
    write_file(&out.join("manifest.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    println!(
        "{}: {} ({} records, {} completions, report in {})",
        manifest.app_id,
        if report.verdict.is_malicious { "MALICIOUS" } else { "benign" },
        store.count(),
        manifest.gateway.total_calls(),
        out.display()
    );
    Ok(failure_code(&manifest.analysis))
}
