//! Harness configuration: a TOML file with env-var interpolation, overridden
//! by command-line flags. A fully defaulted config reproduces the reference
//! protocol (temperature 0.5, 10 new tokens, truncation on, ε = 1e-9) over
//! the built-in color dataset with both built-in scoring backends.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::genclient::{ApiStyle, GenerationConfig};
use crate::leakrate::DEFAULT_EPSILON;
use crate::report::ReportFormat;
use crate::similarity::{SimilarityMode, TokenScoreComponent};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("environment variable `{0}` referenced in config is not set")]
    MissingEnvVar(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which prompt set to evaluate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSelection {
    /// The built-in color dataset, optionally with a template override file.
    BuiltinColor { templates_path: Option<PathBuf> },
    /// An externally annotated JSONL instance file.
    External { path: PathBuf },
}

/// Offline provider kinds selectable via `--mock`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockKind {
    /// Answers test prompts with their concept: the full-leakage oracle.
    Echo,
    /// Same continuation everywhere: the no-leakage null.
    Constant,
    /// Replays prompt → response pairs from a JSONL script.
    Script(PathBuf),
}

impl MockKind {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        match text {
            "echo" => Ok(MockKind::Echo),
            "constant" => Ok(MockKind::Constant),
            other => match other.strip_prefix("script:") {
                Some(path) if !path.is_empty() => Ok(MockKind::Script(PathBuf::from(path))),
                _ => Err(ConfigError::Invalid(format!(
                    "unknown mock `{other}`; expected echo, constant, or script:<path>"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProviderSelection {
    Http { endpoint: String, api: ApiStyle },
    Mock(MockKind),
    Unconfigured,
}

/// How one scoring backend embeds text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSource {
    Trigram,
    Remote { endpoint: String, model: String },
}

/// One scoring backend to run: mode plus embedding source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendSpec {
    pub id: String,
    pub mode: SimilarityMode,
    pub source: BackendSource,
}

/// Fully resolved harness settings for one invocation.
#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub dataset: DatasetSelection,
    pub dataset_id: String,
    pub provider: ProviderSelection,
    pub generation: GenerationConfig,
    pub epsilon: f64,
    pub token_score_component: TokenScoreComponent,
    pub backends: Vec<BackendSpec>,
    pub out_dir: PathBuf,
    pub format: ReportFormat,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSelection::BuiltinColor {
                templates_path: None,
            },
            dataset_id: "color-related".into(),
            provider: ProviderSelection::Unconfigured,
            generation: GenerationConfig::default(),
            epsilon: DEFAULT_EPSILON,
            token_score_component: TokenScoreComponent::F1,
            backends: default_backends(),
            out_dir: PathBuf::from("out"),
            format: ReportFormat::Markdown,
        }
    }
}

fn default_backends() -> Vec<BackendSpec> {
    vec![
        BackendSpec {
            id: "token-f1-trigram".into(),
            mode: SimilarityMode::TokenF1,
            source: BackendSource::Trigram,
        },
        BackendSpec {
            id: "cosine-trigram".into(),
            mode: SimilarityMode::SentenceCosine,
            source: BackendSource::Trigram,
        },
    ]
}

// ---- TOML file schema ----

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    dataset: DatasetSection,
    provider: ProviderSection,
    generation: GenerationSection,
    scoring: ScoringSection,
    output: OutputSection,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct DatasetSection {
    source: Option<String>,
    path: Option<PathBuf>,
    id: Option<String>,
    templates_path: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct ProviderSection {
    kind: Option<String>,
    endpoint: Option<String>,
    api: Option<ApiStyle>,
    model: Option<String>,
    mock: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct GenerationSection {
    temperature: Option<f64>,
    max_new_tokens: Option<u32>,
    truncate_at_sentence_end: Option<bool>,
    request_timeout_secs: Option<u64>,
    max_retries: Option<u32>,
    parallelism: Option<usize>,
    seed: Option<u64>,
    run_epoch: Option<u64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct ScoringSection {
    epsilon: Option<f64>,
    token_score_component: Option<TokenScoreComponent>,
    backends: Vec<BackendSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BackendSection {
    id: Option<String>,
    mode: SimilarityMode,
    source: Option<String>,
    endpoint: Option<String>,
    model: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct OutputSection {
    dir: Option<PathBuf>,
    format: Option<ReportFormat>,
}

/// Replaces `${NAME}` references with environment variable values. Unset
/// variables are an error naming the variable, not a silent empty string.
pub fn interpolate_env(text: &str) -> Result<String, ConfigError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("${") {
        out.push_str(&rest[..start]);
        let tail = &rest[start + 2..];
        let end = tail
            .find('}')
            .ok_or_else(|| ConfigError::Invalid("unterminated ${...} in config".into()))?;
        let name = &tail[..end];
        let value =
            std::env::var(name).map_err(|_| ConfigError::MissingEnvVar(name.to_string()))?;
        out.push_str(&value);
        rest = &tail[end + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl HarnessConfig {
    /// Loads the file (when given) on top of defaults. Flag overrides are
    /// applied separately by the CLI layer.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        let Some(path) = path else {
            return Ok(config);
        };
        let raw = std::fs::read_to_string(path)?;
        let interpolated = interpolate_env(&raw)?;
        let file: FileConfig =
            toml::from_str(&interpolated).map_err(|err| ConfigError::Parse {
                path: path.display().to_string(),
                message: err.to_string(),
            })?;
        config.apply_file(file)?;
        Ok(config)
    }

    fn apply_file(&mut self, file: FileConfig) -> Result<(), ConfigError> {
        match file.dataset.source.as_deref() {
            None | Some("builtin-color") => {
                self.dataset = DatasetSelection::BuiltinColor {
                    templates_path: file.dataset.templates_path,
                };
                if let Some(id) = file.dataset.id {
                    self.dataset_id = id;
                }
            }
            Some("external") => {
                let path = file.dataset.path.ok_or_else(|| {
                    ConfigError::Invalid("dataset.source = \"external\" requires dataset.path".into())
                })?;
                self.dataset_id = file.dataset.id.unwrap_or_else(|| {
                    path.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "external".into())
                });
                self.dataset = DatasetSelection::External { path };
            }
            Some(other) => {
                return Err(ConfigError::Invalid(format!(
                    "unknown dataset.source `{other}`; expected builtin-color or external"
                )));
            }
        }

        match file.provider.kind.as_deref() {
            None => {}
            Some("http") => {
                let endpoint = file.provider.endpoint.clone().ok_or_else(|| {
                    ConfigError::Invalid("provider.kind = \"http\" requires provider.endpoint".into())
                })?;
                self.provider = ProviderSelection::Http {
                    endpoint,
                    api: file.provider.api.unwrap_or(ApiStyle::Completions),
                };
            }
            Some("mock") => {
                let mock = file.provider.mock.as_deref().unwrap_or("constant");
                self.provider = ProviderSelection::Mock(MockKind::parse(mock)?);
            }
            Some(other) => {
                return Err(ConfigError::Invalid(format!(
                    "unknown provider.kind `{other}`; expected http or mock"
                )));
            }
        }
        if let Some(model) = file.provider.model {
            self.generation.model_id = model;
        }

        let generation = file.generation;
        if let Some(v) = generation.temperature {
            self.generation.temperature = v;
        }
        if let Some(v) = generation.max_new_tokens {
            self.generation.max_new_tokens = v;
        }
        if let Some(v) = generation.truncate_at_sentence_end {
            self.generation.truncate_at_sentence_end = v;
        }
        if let Some(v) = generation.request_timeout_secs {
            self.generation.request_timeout = Duration::from_secs(v);
        }
        if let Some(v) = generation.max_retries {
            self.generation.max_retries = v;
        }
        if let Some(v) = generation.parallelism {
            if v == 0 {
                return Err(ConfigError::Invalid("generation.parallelism must be positive".into()));
            }
            self.generation.parallelism = v;
        }
        self.generation.seed = generation.seed.or(self.generation.seed);
        self.generation.run_epoch = generation.run_epoch.or(self.generation.run_epoch);

        if let Some(epsilon) = file.scoring.epsilon {
            if !epsilon.is_finite() || epsilon < 0.0 {
                return Err(ConfigError::Invalid(
                    "scoring.epsilon must be finite and non-negative".into(),
                ));
            }
            self.epsilon = epsilon;
        }
        if let Some(component) = file.scoring.token_score_component {
            self.token_score_component = component;
        }
        if !file.scoring.backends.is_empty() {
            self.backends = file
                .scoring
                .backends
                .into_iter()
                .map(resolve_backend)
                .collect::<Result<_, _>>()?;
        }

        if let Some(dir) = file.output.dir {
            self.out_dir = dir;
        }
        if let Some(format) = file.output.format {
            self.format = format;
        }
        Ok(())
    }

    /// Restricts scoring to the named backend ids.
    pub fn select_backends(&mut self, ids: &[String]) -> Result<(), ConfigError> {
        if ids.is_empty() {
            return Ok(());
        }
        let available: Vec<String> = self.backends.iter().map(|b| b.id.clone()).collect();
        for id in ids {
            if !available.contains(id) {
                return Err(ConfigError::Invalid(format!(
                    "unknown backend `{id}`; configured: {}",
                    available.join(", ")
                )));
            }
        }
        self.backends.retain(|b| ids.contains(&b.id));
        Ok(())
    }
}

fn resolve_backend(section: BackendSection) -> Result<BackendSpec, ConfigError> {
    let source = match section.source.as_deref() {
        None | Some("trigram") => BackendSource::Trigram,
        Some("remote") => {
            let endpoint = section.endpoint.clone().ok_or_else(|| {
                ConfigError::Invalid("remote backend requires an endpoint".into())
            })?;
            let model = section
                .model
                .clone()
                .ok_or_else(|| ConfigError::Invalid("remote backend requires a model".into()))?;
            BackendSource::Remote { endpoint, model }
        }
        Some(other) => {
            return Err(ConfigError::Invalid(format!(
                "unknown backend source `{other}`; expected trigram or remote"
            )));
        }
    };
    let id = section.id.unwrap_or_else(|| match (&source, section.mode) {
        (BackendSource::Trigram, SimilarityMode::TokenF1) => "token-f1-trigram".into(),
        (BackendSource::Trigram, SimilarityMode::SentenceCosine) => "cosine-trigram".into(),
        (BackendSource::Remote { model, .. }, mode) => format!("{mode}:{model}"),
    });
    Ok(BackendSpec {
        id,
        mode: section.mode,
        source,
    })
}
