//! Concept/generation similarity with pluggable embedding backends.
//!
//! Two scoring modes are supported:
//!
//! - [`token_f1_similarity`]: both strings are tokenized, every token is
//!   embedded, and tokens are greedily matched by maximum cosine. Precision
//!   averages over generation tokens, recall over concept tokens, and the
//!   score is their harmonic mean. No IDF weighting, no baseline rescaling.
//! - [`sentence_similarity`]: each whole string is embedded once and the
//!   score is the cosine of the two embeddings.
//!
//! The built-in [`TrigramEmbedder`] hashes character trigrams into 512
//! buckets. It is fully deterministic and has no notion of semantics beyond
//! surface overlap; its job is to give the metric layer a stable similarity
//! function for offline runs and tests. [`remote::RemoteEmbedder`] calls an
//! HTTP embedding endpoint for real backbones.
//!
//! Similarity involving a degenerate side (empty text, zero embedding) is
//! defined as 0 and flagged rather than treated as an error — empty
//! generations are data.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod remote;

pub use remote::RemoteEmbedder;

/// Dimension of the built-in hashed-trigram embedding space.
pub const TRIGRAM_DIMENSION: usize = 512;

/// Backend id reported by the built-in embedder.
pub const TRIGRAM_BACKEND_ID: &str = "trigram-512";

/// A fixed-length real vector produced by an embedding backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Which similarity computation produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMode {
    TokenF1,
    SentenceCosine,
}

impl fmt::Display for SimilarityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimilarityMode::TokenF1 => f.write_str("token_f1"),
            SimilarityMode::SentenceCosine => f.write_str("sentence_cosine"),
        }
    }
}

/// Which component of the greedy-matching score to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenScoreComponent {
    Precision,
    Recall,
    #[default]
    F1,
}

/// A concept/generation similarity from one backend. `degenerate` marks
/// scores produced under the zero-vector policy (empty text or zero
/// embedding on either side) rather than by an actual comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub value: f64,
    pub backend_id: String,
    pub mode: SimilarityMode,
    #[serde(default)]
    pub degenerate: bool,
}

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("embedding transport failed after {attempts} attempts: {detail}")]
    Transport { attempts: u32, detail: String },
    #[error("embedding endpoint returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("inconsistent embedding dimensions within one batch: {first} then {second}")]
    DimensionDrift { first: usize, second: usize },
    #[error("embedding endpoint returned malformed body: {0}")]
    MalformedResponse(String),
}

/// An embedding backend. `embed_batch` must be order-preserving; `tokenize`
/// defines the token boundaries used by the token-F1 mode (whitespace by
/// default).
pub trait Embedder: Send + Sync {
    fn id(&self) -> &str;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError>;

    fn tokenize<'a>(&self, text: &'a str) -> Vec<&'a str> {
        text.split_whitespace().collect()
    }

    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, SimilarityError> {
        let mut vectors = self.embed_batch(&[text])?;
        Ok(vectors.remove(0))
    }
}

/// Cosine of the angle between two vectors: `dot(u,v) / (|u|*|v|)`, in
/// `[-1, 1]`. Zero vectors are an error here; callers decide the policy
/// (the scoring functions map them to a flagged 0).
pub fn cosine_similarity(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, SimilarityError> {
    if u.dimension() != v.dimension() {
        return Err(SimilarityError::DimensionMismatch {
            left: u.dimension(),
            right: v.dimension(),
        });
    }
    let mut dot = 0.0;
    let mut norm_u = 0.0;
    let mut norm_v = 0.0;
    for (a, b) in u.values.iter().zip(&v.values) {
        dot += a * b;
        norm_u += a * a;
        norm_v += b * b;
    }
    if norm_u == 0.0 || norm_v == 0.0 {
        return Err(SimilarityError::ZeroVector);
    }
    // rounding can push self-similarity a ulp past 1; keep the contract range
    Ok((dot / (norm_u.sqrt() * norm_v.sqrt())).clamp(-1.0, 1.0))
}

// FNV-1a, fixed here so trigram buckets never move between platforms or
// std releases.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in bytes {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Embeds text by counting character trigrams into 512 hashed buckets.
/// The text is lowercased, runs of whitespace collapse to single spaces, and
/// `#` markers pad the boundaries; the bucket counts are L2-normalized.
/// Empty or whitespace-only text yields the zero vector.
pub fn trigram_embed(text: &str) -> EmbeddingVector {
    let normalized = text
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");
    let mut values = vec![0.0; TRIGRAM_DIMENSION];
    if normalized.is_empty() {
        return EmbeddingVector::new(values);
    }
    let chars: Vec<char> = std::iter::once('#')
        .chain(normalized.chars())
        .chain(std::iter::once('#'))
        .collect();
    let mut buf = [0u8; 12];
    for window in chars.windows(3) {
        let mut len = 0;
        for ch in window {
            len += ch.encode_utf8(&mut buf[len..]).len();
        }
        let bucket = (fnv1a64(&buf[..len]) % TRIGRAM_DIMENSION as u64) as usize;
        values[bucket] += 1.0;
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut values {
            *v /= norm;
        }
    }
    EmbeddingVector::new(values)
}

/// The deterministic built-in backend over [`trigram_embed`].
#[derive(Debug, Clone, Default)]
pub struct TrigramEmbedder;

impl Embedder for TrigramEmbedder {
    fn id(&self) -> &str {
        TRIGRAM_BACKEND_ID
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        Ok(texts.iter().map(|text| trigram_embed(text)).collect())
    }
}

/// Whole-string cosine similarity: embeds each side once and returns the
/// cosine, applying the zero-vector policy (flagged 0) to degenerate sides.
pub fn sentence_similarity(
    concept: &str,
    generation: &str,
    embedder: &dyn Embedder,
) -> Result<SimilarityScore, SimilarityError> {
    let vectors = embedder.embed_batch(&[concept, generation])?;
    let score = |value, degenerate| SimilarityScore {
        value,
        backend_id: embedder.id().to_string(),
        mode: SimilarityMode::SentenceCosine,
        degenerate,
    };
    match cosine_similarity(&vectors[0], &vectors[1]) {
        Ok(value) => Ok(score(value, false)),
        Err(SimilarityError::ZeroVector) => Ok(score(0.0, true)),
        Err(err) => Err(err),
    }
}

fn max_cosine(vector: &EmbeddingVector, others: &[EmbeddingVector]) -> f64 {
    others
        .iter()
        .map(|other| match cosine_similarity(vector, other) {
            Ok(value) => value,
            // zero-vector tokens contribute nothing to a match
            Err(_) => 0.0,
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Token-level greedy-matching similarity. Precision is the mean over
/// generation tokens of the best cosine against any concept token; recall is
/// the mean over concept tokens of the best cosine against any generation
/// token; F1 is their harmonic mean. Either side tokenizing to nothing gives
/// a flagged 0.
pub fn token_f1_similarity(
    concept: &str,
    generation: &str,
    embedder: &dyn Embedder,
    component: TokenScoreComponent,
) -> Result<SimilarityScore, SimilarityError> {
    let score = |value, degenerate| SimilarityScore {
        value,
        backend_id: embedder.id().to_string(),
        mode: SimilarityMode::TokenF1,
        degenerate,
    };
    let concept_tokens = embedder.tokenize(concept);
    let generation_tokens = embedder.tokenize(generation);
    if concept_tokens.is_empty() || generation_tokens.is_empty() {
        return Ok(score(0.0, true));
    }
    let concept_vectors = embedder.embed_batch(&concept_tokens)?;
    let generation_vectors = embedder.embed_batch(&generation_tokens)?;

    let precision = generation_vectors
        .iter()
        .map(|v| max_cosine(v, &concept_vectors))
        .sum::<f64>()
        / generation_vectors.len() as f64;
    let recall = concept_vectors
        .iter()
        .map(|v| max_cosine(v, &generation_vectors))
        .sum::<f64>()
        / concept_vectors.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let value = match component {
        TokenScoreComponent::Precision => precision,
        TokenScoreComponent::Recall => recall,
        TokenScoreComponent::F1 => f1,
    };
    Ok(score(value, false))
}

/// One configured similarity backend: an embedder plus the mode (and, for
/// token mode, the score component) to apply.
#[derive(Clone)]
pub struct ScoringBackend {
    pub id: String,
    pub mode: SimilarityMode,
    pub component: TokenScoreComponent,
    pub embedder: Arc<dyn Embedder>,
}

impl ScoringBackend {
    /// Built-in token-level greedy-matching F1 backend.
    pub fn trigram_token_f1() -> Self {
        Self {
            id: "token-f1-trigram".into(),
            mode: SimilarityMode::TokenF1,
            component: TokenScoreComponent::F1,
            embedder: Arc::new(TrigramEmbedder),
        }
    }

    /// Built-in whole-string cosine backend.
    pub fn trigram_cosine() -> Self {
        Self {
            id: "cosine-trigram".into(),
            mode: SimilarityMode::SentenceCosine,
            component: TokenScoreComponent::F1,
            embedder: Arc::new(TrigramEmbedder),
        }
    }

    /// Scores one concept/generation pair under this backend's mode. The
    /// reported `backend_id` is the backend's configured id.
    pub fn score(
        &self,
        concept: &str,
        generation: &str,
    ) -> Result<SimilarityScore, SimilarityError> {
        let mut score = match self.mode {
            SimilarityMode::TokenF1 => {
                token_f1_similarity(concept, generation, self.embedder.as_ref(), self.component)?
            }
            SimilarityMode::SentenceCosine => {
                sentence_similarity(concept, generation, self.embedder.as_ref())?
            }
        };
        score.backend_id = self.id.clone();
        Ok(score)
    }
}

impl fmt::Debug for ScoringBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScoringBackend")
            .field("id", &self.id)
            .field("mode", &self.mode)
            .field("component", &self.component)
            .field("embedder", &self.embedder.id())
            .finish()
    }
}
