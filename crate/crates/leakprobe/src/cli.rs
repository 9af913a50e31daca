//! Subcommand pipeline over a single config file.
//!
//! `dataset build` → `generate` → `score` → `report` stage their outputs in
//! the configured directory (`instances.jsonl`, `cache.jsonl`,
//! `results.jsonl`, `manifest.json`, `report.{md,csv,json}`), and `run`
//! chains all four. Generation is the only expensive stage; the split lets a
//! cached run be re-scored under different backends or ε without touching
//! the model again.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod config;

pub use config::{
    BackendSource, BackendSpec, ConfigError, DatasetSelection, HarnessConfig, MockKind,
    ProviderSelection,
};

use crate::dataset::{
    builtin_category3_instances, builtin_color_vocabulary, builtin_templates, expand_templates,
    load_instances, load_templates, save_instances, validate_instance, Category, DatasetError,
    PromptInstance,
};
use crate::genclient::{
    cache::CacheError, run_batch, ConstantProvider, EchoConceptProvider, GenError,
    GenerationCache, GenerationKind, GenerationProvider, GenerationRecord, HttpProvider,
    ProviderError, ScriptedProvider,
};
use crate::leakrate::{
    aggregate, attach_context, score_run, Grouping, LeakError, LeakFlag, ResultRecord,
};
use crate::report::{
    render_table2, render_table3, ReportError, ReportFormat, RunManifest,
};
use crate::similarity::{RemoteEmbedder, ScoringBackend, TrigramEmbedder};

/// Control-prompt continuation used by the echo mock; deliberately unlike
/// any concept so echoed concepts always win the similarity comparison.
pub const ECHO_CONTROL_TEXT: &str = " the committee adjourned without further comment";

/// Continuation used by the constant mock. Any fixed text works: identical
/// test and control generations tie by construction.
pub const CONSTANT_TEXT: &str = " the usual answer.";

const INSTANCES_FILE: &str = "instances.jsonl";
const CACHE_FILE: &str = "cache.jsonl";
const RESULTS_FILE: &str = "results.jsonl";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Leak(#[from] LeakError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("generation failed: {0}")]
    Generation(GenError),
    #[error("{failed} of {total} instance(s) failed during generation; partial outputs kept in {}", out_dir.display())]
    PartialRun {
        failed: usize,
        total: usize,
        out_dir: PathBuf,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Parser)]
#[command(name = "leakprobe", version, about = "Measure semantic leakage of text-generation models")]
pub struct Cli {
    /// TOML config file; flags override file values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Default, Clone)]
pub struct Overrides {
    /// Offline provider: echo, constant, or script:<path>.
    #[arg(long, global = true)]
    pub mock: Option<String>,
    /// Completion endpoint URL (switches the provider to HTTP).
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Model id sent to the provider.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// External dataset file (JSONL instances).
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    /// Tie tolerance for the leak decision.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Restrict scoring to these backend ids (repeatable).
    #[arg(long, global = true)]
    pub backend: Vec<String>,
    /// Report format mirrored to stdout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Output directory for all pipeline files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Concurrent provider requests.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Pin timestamps (unix seconds) for byte-reproducible runs.
    #[arg(long, global = true)]
    pub run_epoch: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Markdown,
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Markdown => ReportFormat::Markdown,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Dataset operations.
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
    /// Elicit test/control generations into the cache.
    Generate,
    /// Score cached generations into results.jsonl.
    Score,
    /// Render reports from results.jsonl.
    Report,
    /// Full pipeline: dataset build, generate, score, report.
    Run,
}

#[derive(Subcommand)]
pub enum DatasetAction {
    /// Write instances.jsonl and print per-category counts.
    Build,
}

/// Entry point used by the `leakprobe` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn apply_overrides(config: &mut HarnessConfig, overrides: &Overrides) -> Result<(), CliError> {
    if let Some(mock) = &overrides.mock {
        config.provider = ProviderSelection::Mock(MockKind::parse(mock)?);
    }
    if let Some(endpoint) = &overrides.endpoint {
        let api = match &config.provider {
            ProviderSelection::Http { api, .. } => *api,
            _ => crate::genclient::ApiStyle::Completions,
        };
        config.provider = ProviderSelection::Http {
            endpoint: endpoint.clone(),
            api,
        };
    }
    if let Some(model) = &overrides.model {
        config.generation.model_id = model.clone();
    }
    if let Some(path) = &overrides.dataset {
        config.dataset_id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "external".into());
        config.dataset = DatasetSelection::External { path: path.clone() };
    }
    if let Some(epsilon) = overrides.epsilon {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(CliError::Invalid(
                "--epsilon must be finite and non-negative".into(),
            ));
        }
        config.epsilon = epsilon;
    }
    config.select_backends(&overrides.backend)?;
    if let Some(format) = overrides.format {
        config.format = format.into();
    }
    if let Some(dir) = &overrides.out_dir {
        config.out_dir = dir.clone();
    }
    if let Some(parallelism) = overrides.parallelism {
        if parallelism == 0 {
            return Err(CliError::Invalid("--parallelism must be positive".into()));
        }
        config.generation.parallelism = parallelism;
    }
    if let Some(epoch) = overrides.run_epoch {
        config.generation.run_epoch = Some(epoch);
    }
    if config.generation.model_id.is_empty()
        && matches!(config.provider, ProviderSelection::Mock(_))
    {
        config.generation.model_id = "mock".into();
    }
    Ok(())
}

/// Parses flags, loads the config, and dispatches one subcommand.
pub fn execute(cli: Cli) -> Result<(), CliError> {
    let mut config = HarnessConfig::load(cli.config.as_deref())?;
    apply_overrides(&mut config, &cli.overrides)?;
    match cli.command {
        Command::Dataset {
            action: DatasetAction::Build,
        } => {
            let summary = cmd_dataset_build(&config)?;
            println!("{summary}");
        }
        Command::Generate => {
            let summary = cmd_generate(&config)?;
            println!("{summary}");
            if !summary.failures.is_empty() {
                return Err(CliError::PartialRun {
                    failed: summary.failures.len(),
                    total: summary.instances,
                    out_dir: config.out_dir.clone(),
                });
            }
        }
        Command::Score => {
            let summary = cmd_score(&config)?;
            println!("{summary}");
        }
        Command::Report => {
            let summary = cmd_report(&config)?;
            print!("{}", summary.stdout_text);
        }
        Command::Run => {
            let failures = {
                let summary = cmd_run(&config)?;
                println!("{}", summary.dataset);
                println!("{}", summary.generate);
                println!("{}", summary.score);
                print!("{}", summary.report.stdout_text);
                summary.generate.failures.len()
            };
            if failures > 0 {
                return Err(CliError::PartialRun {
                    failed: failures,
                    total: 0,
                    out_dir: config.out_dir.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Builds the configured dataset in memory, validating every instance.
pub fn load_dataset(config: &HarnessConfig) -> Result<Vec<PromptInstance>, CliError> {
    let instances = match &config.dataset {
        DatasetSelection::BuiltinColor { templates_path } => {
            let templates = match templates_path {
                Some(path) => load_templates(path)?,
                None => builtin_templates(),
            };
            let mut instances = expand_templates(&templates, &builtin_color_vocabulary())?;
            instances.extend(builtin_category3_instances());
            instances
        }
        DatasetSelection::External { path } => load_instances(path)?,
    };
    for instance in &instances {
        let violations = validate_instance(instance);
        if !violations.is_empty() {
            return Err(DatasetError::Validation {
                id: instance.id.clone(),
                violations,
            }
            .into());
        }
    }
    Ok(instances)
}

/// Constructs the configured provider. The echo mock needs the instance list
/// to know which prompt carries which concept.
pub fn build_provider(
    config: &HarnessConfig,
    instances: &[PromptInstance],
) -> Result<Box<dyn GenerationProvider>, CliError> {
    match &config.provider {
        ProviderSelection::Http { endpoint, api } => {
            Ok(Box::new(HttpProvider::new(endpoint.clone(), *api)))
        }
        ProviderSelection::Mock(MockKind::Echo) => Ok(Box::new(
            EchoConceptProvider::from_instances(instances, ECHO_CONTROL_TEXT),
        )),
        ProviderSelection::Mock(MockKind::Constant) => {
            Ok(Box::new(ConstantProvider::new(CONSTANT_TEXT)))
        }
        ProviderSelection::Mock(MockKind::Script(path)) => {
            Ok(Box::new(ScriptedProvider::from_path(path)?))
        }
        ProviderSelection::Unconfigured => Err(CliError::Invalid(
            "no provider configured; set [provider] in the config file, or pass --mock or --endpoint".into(),
        )),
    }
}

/// Builds the scoring backend for one spec.
pub fn build_backend(spec: &BackendSpec, config: &HarnessConfig) -> ScoringBackend {
    let embedder: Arc<dyn crate::similarity::Embedder> = match &spec.source {
        BackendSource::Trigram => Arc::new(TrigramEmbedder),
        BackendSource::Remote { endpoint, model } => Arc::new(RemoteEmbedder::new(
            spec.id.clone(),
            endpoint.clone(),
            model.clone(),
            config.generation.request_timeout,
            config.generation.max_retries,
        )),
    };
    ScoringBackend {
        id: spec.id.clone(),
        mode: spec.mode,
        component: config.token_score_component,
        embedder,
    }
}

fn now_or_epoch(config: &HarnessConfig) -> u64 {
    config.generation.run_epoch.unwrap_or_else(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

#[derive(Debug)]
pub struct DatasetSummary {
    pub path: PathBuf,
    pub counts: BTreeMap<Category, usize>,
    pub total: usize,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts = self
            .counts
            .iter()
            .map(|(category, count)| format!("{category}: {count}"))
            .collect::<Vec<_>>()
            .join(", ");
        write!(
            f,
            "wrote {} instances to {} ({counts})",
            self.total,
            self.path.display()
        )
    }
}

/// Builds the dataset, writes `instances.jsonl`, and reports per-category
/// counts.
pub fn cmd_dataset_build(config: &HarnessConfig) -> Result<DatasetSummary, CliError> {
    std::fs::create_dir_all(&config.out_dir)?;
    let instances = load_dataset(config)?;
    let path = config.out_dir.join(INSTANCES_FILE);
    save_instances(&path, &instances)?;
    let mut counts = BTreeMap::new();
    for instance in &instances {
        *counts.entry(instance.category).or_insert(0) += 1;
    }
    Ok(DatasetSummary {
        path,
        counts,
        total: instances.len(),
    })
}

#[derive(Debug)]
pub struct GenerateSummary {
    pub cache_path: PathBuf,
    pub instances: usize,
    pub records: Vec<GenerationRecord>,
    pub failures: Vec<(String, GenError)>,
}

impl fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "generated {} records for {} instances into {} ({} failure(s))",
            self.records.len(),
            self.instances,
            self.cache_path.display(),
            self.failures.len()
        )
    }
}

fn ensure_instances(config: &HarnessConfig) -> Result<Vec<PromptInstance>, CliError> {
    let path = config.out_dir.join(INSTANCES_FILE);
    if path.exists() {
        Ok(load_instances(&path)?)
    } else {
        load_dataset(config)
    }
}

/// Elicits test and control generations for every instance into the cache.
/// Per-instance failures do not abort the batch; they are returned in the
/// summary for the caller to turn into an exit code.
pub fn cmd_generate(config: &HarnessConfig) -> Result<GenerateSummary, CliError> {
    std::fs::create_dir_all(&config.out_dir)?;
    let instances = ensure_instances(config)?;
    let provider = build_provider(config, &instances)?;
    let cache_path = config.out_dir.join(CACHE_FILE);
    let cache = GenerationCache::open(&cache_path)?;
    let (records, failures) =
        match run_batch(&instances, &config.generation, provider.as_ref(), &cache) {
            Ok(records) => (records, Vec::new()),
            Err(partial) => (partial.completed, partial.failures),
        };
    Ok(GenerateSummary {
        cache_path,
        instances: instances.len(),
        records,
        failures,
    })
}

#[derive(Debug)]
pub struct ScoreSummary {
    pub results_path: PathBuf,
    pub results: usize,
    pub backends: usize,
    pub skipped_instances: usize,
    pub manifest: RunManifest,
}

impl fmt::Display for ScoreSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scored {} result rows across {} backend(s) into {}",
            self.results,
            self.backends,
            self.results_path.display()
        )?;
        if self.skipped_instances > 0 {
            write!(f, " (skipped {} incomplete instance(s))", self.skipped_instances)?;
        }
        Ok(())
    }
}

/// Scores every cached instance pair under each configured backend, writing
/// `results.jsonl` and `manifest.json`. Instances without a complete
/// test/control pair in the cache are skipped and counted.
pub fn cmd_score(config: &HarnessConfig) -> Result<ScoreSummary, CliError> {
    std::fs::create_dir_all(&config.out_dir)?;
    let started_at = now_or_epoch(config);
    let instances = ensure_instances(config)?;
    let fingerprint = config.generation.fingerprint();
    let model_id = &config.generation.model_id;
    let cache = GenerationCache::open(&config.out_dir.join(CACHE_FILE))?;
    let records = cache.records_for(&fingerprint, model_id);
    if records.is_empty() {
        return Err(CliError::Invalid(format!(
            "cache has no records for model `{model_id}` with fingerprint {fingerprint}; run `generate` first"
        )));
    }

    let mut have: std::collections::HashSet<(&str, GenerationKind)> =
        std::collections::HashSet::new();
    for record in &records {
        have.insert((record.instance_id.as_str(), record.kind));
    }
    let complete: Vec<PromptInstance> = instances
        .iter()
        .filter(|i| {
            have.contains(&(i.id.as_str(), GenerationKind::Test))
                && have.contains(&(i.id.as_str(), GenerationKind::Control))
        })
        .cloned()
        .collect();
    let skipped_instances = instances.len() - complete.len();
    if complete.is_empty() {
        return Err(CliError::Invalid(
            "cache contains no complete test/control pairs for this config".into(),
        ));
    }

    let mut rows: Vec<ResultRecord> = Vec::new();
    for spec in &config.backends {
        let backend = build_backend(spec, config);
        let results = score_run(&complete, &records, &backend, config.epsilon)?;
        rows.extend(attach_context(
            &results,
            &complete,
            &config.dataset_id,
            model_id,
            spec.mode,
            &fingerprint,
        ));
    }

    let mut instance_counts: BTreeMap<String, usize> = BTreeMap::new();
    for instance in &complete {
        *instance_counts
            .entry(instance.category.key().to_string())
            .or_insert(0) += 1;
    }
    let manifest = RunManifest {
        dataset_id: config.dataset_id.clone(),
        model_id: model_id.clone(),
        config_fingerprint: fingerprint,
        backend_ids: config.backends.iter().map(|b| b.id.clone()).collect(),
        epsilon: config.epsilon,
        token_score_component: config.token_score_component,
        idf_weighting: false,
        baseline_rescaling: false,
        started_at,
        finished_at: now_or_epoch(config),
        instance_counts,
        tie_count: rows
            .iter()
            .filter(|r| r.flags.contains(&LeakFlag::Tie))
            .count(),
        degenerate_count: rows
            .iter()
            .filter(|r| {
                r.flags.contains(&LeakFlag::DegenerateTest)
                    || r.flags.contains(&LeakFlag::DegenerateControl)
            })
            .count(),
    };

    let results_path = config.out_dir.join(RESULTS_FILE);
    let mut body = String::new();
    for row in &rows {
        body.push_str(&serde_json::to_string(row).expect("row serializes"));
        body.push('\n');
    }
    std::fs::write(&results_path, body)?;
    std::fs::write(
        config.out_dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;

    Ok(ScoreSummary {
        results_path,
        results: rows.len(),
        backends: config.backends.len(),
        skipped_instances,
        manifest,
    })
}

#[derive(Debug)]
pub struct ReportSummary {
    pub files: Vec<PathBuf>,
    pub stdout_text: String,
}

fn combined_csv(overall: &str, by_category: &str) -> String {
    // both renders share the manifest comment and header; keep them once
    let tail: String = by_category
        .lines()
        .skip(2)
        .flat_map(|line| [line, "\n"])
        .collect();
    format!("{overall}{tail}")
}

/// Renders both table shapes from `results.jsonl` in all three formats,
/// writing `report.md`, `report.csv`, and `report.json`.
pub fn cmd_report(config: &HarnessConfig) -> Result<ReportSummary, CliError> {
    let results_path = config.out_dir.join(RESULTS_FILE);
    if !results_path.exists() {
        return Err(CliError::Invalid(format!(
            "{} not found; run `score` first",
            results_path.display()
        )));
    }
    let text = std::fs::read_to_string(&results_path)?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: ResultRecord = serde_json::from_str(line).map_err(|err| {
            CliError::Invalid(format!("{}:{}: {err}", results_path.display(), idx + 1))
        })?;
        rows.push(row);
    }
    let manifest_text = std::fs::read_to_string(config.out_dir.join(MANIFEST_FILE))
        .map_err(|_| CliError::Invalid("manifest.json not found; run `score` first".into()))?;
    let manifest: RunManifest = serde_json::from_str(&manifest_text)
        .map_err(|err| CliError::Invalid(format!("manifest.json: {err}")))?;

    let overall = aggregate(&rows, Grouping::ModelDatasetBackend, &manifest)?;
    let by_category = aggregate(&rows, Grouping::CategoryModelBackend, &manifest)?;

    let md = format!(
        "{}\n{}",
        render_table2(&overall, ReportFormat::Markdown)?,
        render_table3(&by_category, ReportFormat::Markdown)?
    );
    let csv_text = combined_csv(
        &render_table2(&overall, ReportFormat::Csv)?,
        &render_table3(&by_category, ReportFormat::Csv)?,
    );
    let json_text = {
        let overall: serde_json::Value =
            serde_json::from_str(&render_table2(&overall, ReportFormat::Json)?)
                .expect("rendered json parses");
        let by_category: serde_json::Value =
            serde_json::from_str(&render_table3(&by_category, ReportFormat::Json)?)
                .expect("rendered json parses");
        let combined = serde_json::json!({
            "overall": overall,
            "by_category": by_category,
        });
        let mut text = serde_json::to_string_pretty(&combined).expect("report serializes");
        text.push('\n');
        text
    };

    let md_path = config.out_dir.join("report.md");
    let csv_path = config.out_dir.join("report.csv");
    let json_path = config.out_dir.join("report.json");
    std::fs::write(&md_path, &md)?;
    std::fs::write(&csv_path, &csv_text)?;
    std::fs::write(&json_path, &json_text)?;

    let stdout_text = match config.format {
        ReportFormat::Markdown => md,
        ReportFormat::Csv => csv_text,
        ReportFormat::Json => json_text,
    };
    Ok(ReportSummary {
        files: vec![md_path, csv_path, json_path],
        stdout_text,
    })
}

#[derive(Debug)]
pub struct RunSummary {
    pub dataset: DatasetSummary,
    pub generate: GenerateSummary,
    pub score: ScoreSummary,
    pub report: ReportSummary,
}

/// The full pipeline. Partial generation failures do not stop scoring and
/// reporting of the completed subset, but the caller is expected to exit
/// nonzero when `generate.failures` is not empty. A run with no completed
/// records at all fails before scoring, with no report emitted.
pub fn cmd_run(config: &HarnessConfig) -> Result<RunSummary, CliError> {
    let dataset = cmd_dataset_build(config)?;
    let generate = cmd_generate(config)?;
    if generate.records.is_empty() {
        return match generate.failures.into_iter().next() {
            Some((_, err)) => Err(CliError::Generation(err)),
            None => Err(CliError::Invalid("dataset produced no instances".into())),
        };
    }
    let score = cmd_score(config)?;
    let report = cmd_report(config)?;
    Ok(RunSummary {
        dataset,
        generate,
        score,
        report,
    })
}
