//! Elicits test and control generations from a model behind an HTTP
//! completion endpoint, or from scripted offline providers.
//!
//! The decoding protocol is fixed by [`GenerationConfig`]: temperature 0.5,
//! at most 10 new tokens, and the continuation capped after the first
//! sentence terminator. Every generation is persisted to an append-only JSONL
//! [`cache::GenerationCache`] keyed by instance, kind, model, and config
//! fingerprint, so runs are resumable and scoring is reproducible after the
//! fact.

use std::fmt;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub mod cache;
pub mod providers;

pub use cache::GenerationCache;
pub use providers::{
    ApiStyle, ConstantProvider, EchoConceptProvider, FlakyProvider, GenerationProvider,
    HttpProvider, ProviderError, ScriptedProvider,
};

use crate::dataset::PromptInstance;

/// Environment variable holding the bearer token for HTTP providers and
/// embedding endpoints.
pub const API_KEY_ENV: &str = "LEAKPROBE_API_KEY";

pub(crate) const BACKOFF_BASE: Duration = Duration::from_millis(100);

pub(crate) fn bearer_token_from_env() -> Option<String> {
    std::env::var(API_KEY_ENV).ok().filter(|t| !t.is_empty())
}

/// Decoding protocol and transport settings for one run. The defaults
/// reproduce the reference protocol exactly: temperature 0.5, 10 new tokens,
/// truncation at the first sentence terminator.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationConfig {
    pub model_id: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
    pub truncate_at_sentence_end: bool,
    pub request_timeout: Duration,
    pub max_retries: u32,
    pub parallelism: usize,
    /// Provider-side sampling seed, sent only when set; most endpoints
    /// ignore it, some honor it.
    pub seed: Option<u64>,
    /// Pins `created_at` timestamps (unix seconds) so that two runs with the
    /// same config produce byte-identical caches. Unset means wall clock.
    pub run_epoch: Option<u64>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            model_id: String::new(),
            temperature: 0.5,
            max_new_tokens: 10,
            truncate_at_sentence_end: true,
            request_timeout: Duration::from_secs(30),
            max_retries: 3,
            parallelism: 4,
            seed: None,
            run_epoch: None,
        }
    }
}

impl GenerationConfig {
    pub fn for_model(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            ..Self::default()
        }
    }

    /// Short stable hash over everything that changes what a model returns:
    /// model id, temperature, token budget, truncation flag, and seed.
    /// Transport settings (timeout, retries, parallelism) do not enter.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.model_id.as_bytes());
        hasher.update([0]);
        hasher.update(format!("{:?}", self.temperature).as_bytes());
        hasher.update([0]);
        hasher.update(self.max_new_tokens.to_le_bytes());
        hasher.update([u8::from(self.truncate_at_sentence_end)]);
        match self.seed {
            Some(seed) => {
                hasher.update([1]);
                hasher.update(seed.to_le_bytes());
            }
            None => hasher.update([0]),
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    fn timestamp(&self) -> u64 {
        self.run_epoch.unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
    }
}

/// Whether a record answers the concept-bearing prompt or the control prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationKind {
    Test,
    Control,
}

impl fmt::Display for GenerationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenerationKind::Test => f.write_str("test"),
            GenerationKind::Control => f.write_str("control"),
        }
    }
}

/// One model continuation. `raw_text` is the provider output after prompt
/// echo stripping; `text` is the scored form after truncation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub instance_id: String,
    pub kind: GenerationKind,
    pub raw_text: String,
    pub text: String,
    pub model_id: String,
    pub config_fingerprint: String,
    pub created_at: u64,
    #[serde(default)]
    pub retries: u32,
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("provider failed after {attempts} attempts: {last}")]
    Transport { attempts: u32, last: ProviderError },
    #[error(transparent)]
    Provider(ProviderError),
    #[error("generation cache: {0}")]
    Cache(#[from] cache::CacheError),
}

/// A batch that finished with at least one per-instance failure. Completed
/// records are kept (and were already written to the cache); failures list
/// one entry per affected instance.
#[derive(Debug, Error)]
#[error("{} instance(s) failed during generation; first: {}", failures.len(), failures.first().map(|(id, err)| format!("{id}: {err}")).unwrap_or_default())]
pub struct PartialRunError {
    pub completed: Vec<GenerationRecord>,
    pub failures: Vec<(String, GenError)>,
}

/// Caps a continuation after the first `.`, `!`, or `?`; text without a
/// terminator passes through. Surrounding whitespace is trimmed either way.
pub fn truncate_generation(raw: &str) -> String {
    for (idx, ch) in raw.char_indices() {
        if matches!(ch, '.' | '!' | '?') {
            return raw[..idx + ch.len_utf8()].trim().to_string();
        }
    }
    raw.trim().to_string()
}

/// Strips the longest common prefix between prompt and provider output, so
/// endpoints that echo the prompt and endpoints that return only the
/// continuation normalize to the same raw text.
pub fn strip_prompt_echo(prompt: &str, returned: &str) -> String {
    let shared = prompt
        .char_indices()
        .zip(returned.char_indices())
        .take_while(|((_, a), (_, b))| a == b)
        .last()
        .map(|(_, (idx, ch))| idx + ch.len_utf8())
        .unwrap_or(0);
    returned[shared..].to_string()
}

fn complete_with_retries(
    provider: &dyn GenerationProvider,
    prompt: &str,
    config: &GenerationConfig,
) -> Result<(String, u32), GenError> {
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        match provider.complete(prompt, config) {
            Ok(returned) => return Ok((returned, attempts - 1)),
            Err(err @ ProviderError::Transport { .. }) => {
                if attempts > config.max_retries {
                    return Err(GenError::Transport {
                        attempts,
                        last: err,
                    });
                }
                std::thread::sleep(BACKOFF_BASE * 2u32.pow(attempts - 1));
            }
            Err(err) => return Err(GenError::Provider(err)),
        }
    }
}

fn build_record(
    instance_id: &str,
    kind: GenerationKind,
    prompt: &str,
    returned: &str,
    retries: u32,
    config: &GenerationConfig,
) -> GenerationRecord {
    let raw_text = strip_prompt_echo(prompt, returned);
    let text = if config.truncate_at_sentence_end {
        truncate_generation(&raw_text)
    } else {
        raw_text.trim().to_string()
    };
    GenerationRecord {
        instance_id: instance_id.to_string(),
        kind,
        raw_text,
        text,
        model_id: config.model_id.clone(),
        config_fingerprint: config.fingerprint(),
        created_at: config.timestamp(),
        retries,
    }
}

/// Requests one continuation, retrying transport failures with exponential
/// backoff, and normalizes it into a [`GenerationRecord`].
pub fn generate_one(
    instance_id: &str,
    kind: GenerationKind,
    prompt: &str,
    config: &GenerationConfig,
    provider: &dyn GenerationProvider,
) -> Result<GenerationRecord, GenError> {
    let (returned, retries) = complete_with_retries(provider, prompt, config)?;
    Ok(build_record(
        instance_id,
        kind,
        prompt,
        &returned,
        retries,
        config,
    ))
}

/// Identifies what a parallel task is fetching.
enum TaskTarget {
    /// Test prompt of the instance at this index.
    Test(usize),
    /// A control prompt shared by the instances at these indices; generated
    /// once and fanned out.
    Control(Vec<usize>),
}

struct Task {
    prompt: String,
    target: TaskTarget,
}

/// Produces (or reuses from cache) one test and one control record for every
/// instance. Each distinct control prompt is requested at most once per run;
/// up to `config.parallelism` provider requests run concurrently. A failed
/// instance never aborts the batch: completed records are returned (and
/// cached) inside [`PartialRunError`].
pub fn run_batch(
    instances: &[PromptInstance],
    config: &GenerationConfig,
    provider: &dyn GenerationProvider,
    cache: &GenerationCache,
) -> Result<Vec<GenerationRecord>, PartialRunError> {
    let fingerprint = config.fingerprint();
    let cached = |instance: &PromptInstance, kind| {
        cache.get(&instance.id, kind, &fingerprint, &config.model_id)
    };

    // plan provider work: missing test prompts, then distinct missing controls
    let mut tasks: Vec<Task> = Vec::new();
    let mut control_slot: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    for (idx, instance) in instances.iter().enumerate() {
        if cached(instance, GenerationKind::Test).is_none() {
            tasks.push(Task {
                prompt: instance.test_prompt.clone(),
                target: TaskTarget::Test(idx),
            });
        }
        if cached(instance, GenerationKind::Control).is_none() {
            match control_slot.get(instance.control_prompt.as_str()) {
                Some(&slot) => match &mut tasks[slot].target {
                    TaskTarget::Control(indices) => indices.push(idx),
                    TaskTarget::Test(_) => unreachable!("control slots only index controls"),
                },
                None => {
                    control_slot.insert(instance.control_prompt.as_str(), tasks.len());
                    tasks.push(Task {
                        prompt: instance.control_prompt.clone(),
                        target: TaskTarget::Control(vec![idx]),
                    });
                }
            }
        }
    }

    let outcomes = run_tasks(&tasks, config, provider);

    // map task outcomes back onto instances
    let mut test_outcome: Vec<Option<&Result<(String, u32), GenError>>> =
        vec![None; instances.len()];
    let mut control_outcome: Vec<Option<&Result<(String, u32), GenError>>> =
        vec![None; instances.len()];
    for (task, outcome) in tasks.iter().zip(&outcomes) {
        match &task.target {
            TaskTarget::Test(idx) => test_outcome[*idx] = Some(outcome),
            TaskTarget::Control(indices) => {
                for idx in indices {
                    control_outcome[*idx] = Some(outcome);
                }
            }
        }
    }

    // assemble in instance order so cache writes and output are deterministic
    let mut records = Vec::with_capacity(instances.len() * 2);
    let mut failures: Vec<(String, GenError)> = Vec::new();
    for (idx, instance) in instances.iter().enumerate() {
        let mut failed = false;
        for (kind, prompt, outcome) in [
            (
                GenerationKind::Test,
                &instance.test_prompt,
                test_outcome[idx],
            ),
            (
                GenerationKind::Control,
                &instance.control_prompt,
                control_outcome[idx],
            ),
        ] {
            if let Some(record) = cached(instance, kind) {
                records.push(record);
                continue;
            }
            match outcome.expect("every non-cached prompt was planned") {
                Ok((returned, retries)) => {
                    let record =
                        build_record(&instance.id, kind, prompt, returned, *retries, config);
                    if let Err(err) = cache.insert(record.clone()) {
                        if !failed {
                            failures.push((instance.id.clone(), GenError::Cache(err)));
                            failed = true;
                        }
                        continue;
                    }
                    records.push(record);
                }
                Err(err) => {
                    if !failed {
                        failures.push((instance.id.clone(), clone_gen_error(err)));
                        failed = true;
                    }
                }
            }
        }
    }

    if failures.is_empty() {
        Ok(records)
    } else {
        Err(PartialRunError {
            completed: records,
            failures,
        })
    }
}

// GenError is not Clone (io errors inside); rebuild an equivalent error for
// fan-out to multiple instances.
fn clone_gen_error(err: &GenError) -> GenError {
    match err {
        GenError::Transport { attempts, last } => GenError::Transport {
            attempts: *attempts,
            last: last.clone(),
        },
        GenError::Provider(err) => GenError::Provider(err.clone()),
        GenError::Cache(err) => GenError::Cache(cache::CacheError::Context(err.to_string())),
    }
}

fn run_tasks(
    tasks: &[Task],
    config: &GenerationConfig,
    provider: &dyn GenerationProvider,
) -> Vec<Result<(String, u32), GenError>> {
    let workers = config.parallelism.max(1).min(tasks.len().max(1));
    if workers <= 1 {
        return tasks
            .iter()
            .map(|task| complete_with_retries(provider, &task.prompt, config))
            .collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<(String, u32), GenError>>>> =
        (0..tasks.len()).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if idx >= tasks.len() {
                    break;
                }
                let outcome = complete_with_retries(provider, &tasks[idx].prompt, config);
                *slots[idx].lock().unwrap() = Some(outcome);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled slot"))
        .collect()
}
