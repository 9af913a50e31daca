//! Generation providers: HTTP completion endpoints and offline mocks.
//!
//! All mocks count their provider calls so tests can assert cache and
//! dedup behavior.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{bearer_token_from_env, GenerationConfig};
use crate::dataset::PromptInstance;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    /// Network-level failure or a retryable HTTP status (5xx, 408, 429).
    #[error("transport: {detail}")]
    Transport { detail: String },
    /// Non-retryable HTTP failure (auth, bad request, missing model).
    #[error("HTTP {status}: {detail}")]
    Http { status: u16, detail: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("no scripted response for prompt {0:?}")]
    UnknownPrompt(String),
}

/// Anything that can turn a prompt into a continuation. Implementations must
/// be callable from multiple threads at once.
pub trait GenerationProvider: Send + Sync {
    fn id(&self) -> &str;

    /// Returns the provider's raw output for this prompt; prompt echo is
    /// handled by the caller.
    fn complete(&self, prompt: &str, config: &GenerationConfig) -> Result<String, ProviderError>;
}

/// Request shape spoken by an HTTP endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApiStyle {
    /// `{"model", "prompt", ...}` with `choices[].text` responses.
    Completions,
    /// `{"model", "messages": [{"role": "user", ...}], ...}` with
    /// `choices[].message.content` responses.
    Chat,
}

/// Client for an OpenAI-compatible completion or chat endpoint. Prompts are
/// sent as-is (completions) or as a single instruction-free user turn (chat);
/// only temperature, the token budget, and an optional seed are set, leaving
/// all other sampler fields at provider defaults.
pub struct HttpProvider {
    id: String,
    endpoint: String,
    style: ApiStyle,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(endpoint: impl Into<String>, style: ApiStyle) -> Self {
        let endpoint = endpoint.into();
        Self {
            id: format!("http:{endpoint}"),
            endpoint,
            style,
            client: reqwest::blocking::Client::new(),
        }
    }

    fn request_body(&self, prompt: &str, config: &GenerationConfig) -> serde_json::Value {
        let mut body = match self.style {
            ApiStyle::Completions => serde_json::json!({
                "model": config.model_id,
                "prompt": prompt,
                "temperature": config.temperature,
                "max_tokens": config.max_new_tokens,
            }),
            ApiStyle::Chat => serde_json::json!({
                "model": config.model_id,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": config.temperature,
                "max_tokens": config.max_new_tokens,
            }),
        };
        if let Some(seed) = config.seed {
            body["seed"] = seed.into();
        }
        body
    }

    fn extract_text(&self, value: &serde_json::Value) -> Option<String> {
        let choice = value.get("choices")?.get(0)?;
        let text = match self.style {
            ApiStyle::Completions => choice.get("text")?,
            ApiStyle::Chat => choice.get("message")?.get("content")?,
        };
        text.as_str().map(str::to_string)
    }
}

impl GenerationProvider for HttpProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn complete(&self, prompt: &str, config: &GenerationConfig) -> Result<String, ProviderError> {
        let mut request = self
            .client
            .post(&self.endpoint)
            .timeout(config.request_timeout)
            .json(&self.request_body(prompt, config));
        if let Some(token) = bearer_token_from_env() {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|err| ProviderError::Transport {
            detail: format!("{}: {err}", self.endpoint),
        })?;
        let status = response.status();
        if !status.is_success() {
            let mut detail = response.text().unwrap_or_default();
            detail.truncate(200);
            return if status.is_server_error() || matches!(status.as_u16(), 408 | 429) {
                Err(ProviderError::Transport {
                    detail: format!("{} returned HTTP {status}: {detail}", self.endpoint),
                })
            } else {
                Err(ProviderError::Http {
                    status: status.as_u16(),
                    detail,
                })
            };
        }
        let value: serde_json::Value = response
            .json()
            .map_err(|err| ProviderError::Malformed(err.to_string()))?;
        self.extract_text(&value).ok_or_else(|| {
            let mut body = value.to_string();
            body.truncate(200);
            ProviderError::Malformed(format!("no generated text in response: {body}"))
        })
    }
}

/// Returns the same continuation for every prompt. With identical test and
/// control outputs every instance scores an exact tie, which makes this the
/// no-leakage null provider.
pub struct ConstantProvider {
    text: String,
    calls: AtomicUsize,
}

impl ConstantProvider {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl GenerationProvider for ConstantProvider {
    fn id(&self) -> &str {
        "mock:constant"
    }

    fn complete(&self, _prompt: &str, _config: &GenerationConfig) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self.text.clone())
    }
}

/// Answers each instance's test prompt with its concept and every other
/// prompt with a fixed unrelated text. Under any self-maximal similarity
/// this makes every instance leak, which makes it the full-leakage oracle
/// provider.
pub struct EchoConceptProvider {
    concept_by_test_prompt: HashMap<String, String>,
    control_text: String,
    calls: AtomicUsize,
}

impl EchoConceptProvider {
    pub fn from_instances(instances: &[PromptInstance], control_text: impl Into<String>) -> Self {
        Self {
            concept_by_test_prompt: instances
                .iter()
                .map(|i| (i.test_prompt.clone(), i.concept.clone()))
                .collect(),
            control_text: control_text.into(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl GenerationProvider for EchoConceptProvider {
    fn id(&self) -> &str {
        "mock:echo"
    }

    fn complete(&self, prompt: &str, _config: &GenerationConfig) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        match self.concept_by_test_prompt.get(prompt) {
            Some(concept) => Ok(format!(" {concept}")),
            None => Ok(self.control_text.clone()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ScriptEntry {
    prompt: String,
    response: String,
}

/// Replays prompt → response pairs from a script. A `"*"` prompt acts as the
/// fallback; without one, unknown prompts are an error.
pub struct ScriptedProvider {
    responses: HashMap<String, String>,
    default: Option<String>,
    calls: AtomicUsize,
}

impl ScriptedProvider {
    pub fn from_pairs<'a>(
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
        default: Option<&str>,
    ) -> Self {
        Self {
            responses: pairs
                .into_iter()
                .map(|(p, r)| (p.to_string(), r.to_string()))
                .collect(),
            default: default.map(str::to_string),
            calls: AtomicUsize::new(0),
        }
    }

    /// Loads a JSONL script of `{"prompt": ..., "response": ...}` records.
    pub fn from_path(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| ProviderError::Malformed(format!("{}: {err}", path.display())))?;
        let mut responses = HashMap::new();
        let mut default = None;
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScriptEntry = serde_json::from_str(line).map_err(|err| {
                ProviderError::Malformed(format!("{}:{}: {err}", path.display(), idx + 1))
            })?;
            if entry.prompt == "*" {
                default = Some(entry.response);
            } else {
                responses.insert(entry.prompt, entry.response);
            }
        }
        Ok(Self {
            responses,
            default,
            calls: AtomicUsize::new(0),
        })
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl GenerationProvider for ScriptedProvider {
    fn id(&self) -> &str {
        "mock:script"
    }

    fn complete(&self, prompt: &str, _config: &GenerationConfig) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        match self.responses.get(prompt).or(self.default.as_ref()) {
            Some(response) => Ok(response.clone()),
            None => Err(ProviderError::UnknownPrompt(prompt.to_string())),
        }
    }
}

/// Fails with a transport error a fixed number of times, then answers with a
/// constant. Exercises the retry path.
pub struct FlakyProvider {
    failures_left: Mutex<u32>,
    text: String,
    calls: AtomicUsize,
}

impl FlakyProvider {
    pub fn new(failures: u32, text: impl Into<String>) -> Self {
        Self {
            failures_left: Mutex::new(failures),
            text: text.into(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl GenerationProvider for FlakyProvider {
    fn id(&self) -> &str {
        "mock:flaky"
    }

    fn complete(&self, _prompt: &str, _config: &GenerationConfig) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut left = self.failures_left.lock().unwrap();
        if *left > 0 {
            *left -= 1;
            return Err(ProviderError::Transport {
                detail: "simulated outage".into(),
            });
        }
        Ok(self.text.clone())
    }
}
