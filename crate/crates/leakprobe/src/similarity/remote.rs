//! HTTP embedding backend with per-text memoization.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;

use super::{Embedder, EmbeddingVector, SimilarityError};
use crate::genclient::{bearer_token_from_env, BACKOFF_BASE};

/// Client for an embeddings endpoint that accepts
/// `{"model": ..., "input": [texts]}` and returns one vector per text in
/// `{"data": [{"index": n, "embedding": [..]}]}`. Results are memoized per
/// text for the lifetime of the client, so duplicate texts (shared control
/// generations, repeated tokens) hit the endpoint once.
pub struct RemoteEmbedder {
    backend_id: String,
    endpoint: String,
    model: String,
    client: reqwest::blocking::Client,
    max_retries: u32,
    memo: Mutex<HashMap<String, EmbeddingVector>>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingEntry>,
}

#[derive(Deserialize)]
struct EmbeddingEntry {
    #[serde(default)]
    index: Option<usize>,
    embedding: Vec<f64>,
}

impl RemoteEmbedder {
    pub fn new(
        backend_id: impl Into<String>,
        endpoint: impl Into<String>,
        model: impl Into<String>,
        timeout: Duration,
        max_retries: u32,
    ) -> Self {
        Self {
            backend_id: backend_id.into(),
            endpoint: endpoint.into(),
            model: model.into(),
            client: reqwest::blocking::Client::builder()
                .timeout(timeout)
                .build()
                .expect("reqwest client"),
            max_retries,
            memo: Mutex::new(HashMap::new()),
        }
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        let body = serde_json::json!({ "model": self.model, "input": texts });
        let mut attempts = 0;
        let response = loop {
            attempts += 1;
            let mut request = self.client.post(&self.endpoint).json(&body);
            if let Some(token) = bearer_token_from_env() {
                request = request.bearer_auth(token);
            }
            match request.send() {
                Ok(response) if response.status().is_success() => break response,
                Ok(response) => {
                    let status = response.status();
                    let retryable = status.is_server_error() || status.as_u16() == 429;
                    if !retryable || attempts > self.max_retries {
                        return Err(SimilarityError::Transport {
                            attempts,
                            detail: format!("{} returned HTTP {status}", self.endpoint),
                        });
                    }
                }
                Err(err) => {
                    if attempts > self.max_retries {
                        return Err(SimilarityError::Transport {
                            attempts,
                            detail: format!("{}: {err}", self.endpoint),
                        });
                    }
                }
            }
            std::thread::sleep(BACKOFF_BASE * 2u32.pow(attempts - 1));
        };

        let parsed: EmbeddingResponse = response
            .json()
            .map_err(|err| SimilarityError::MalformedResponse(err.to_string()))?;
        if parsed.data.len() != texts.len() {
            return Err(SimilarityError::CountMismatch {
                expected: texts.len(),
                got: parsed.data.len(),
            });
        }
        let mut entries = parsed.data;
        // honor explicit indices when the endpoint provides them
        if entries.iter().all(|e| e.index.is_some()) {
            entries.sort_by_key(|e| e.index.unwrap());
        }
        let mut vectors = Vec::with_capacity(entries.len());
        let mut dimension = None;
        for entry in entries {
            match dimension {
                None => dimension = Some(entry.embedding.len()),
                Some(first) if first != entry.embedding.len() => {
                    return Err(SimilarityError::DimensionDrift {
                        first,
                        second: entry.embedding.len(),
                    });
                }
                Some(_) => {}
            }
            vectors.push(EmbeddingVector::new(entry.embedding));
        }
        Ok(vectors)
    }
}

impl Embedder for RemoteEmbedder {
    fn id(&self) -> &str {
        &self.backend_id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, SimilarityError> {
        let mut missing: Vec<&str> = Vec::new();
        {
            let memo = self.memo.lock().unwrap();
            for text in texts {
                if !memo.contains_key(*text) && !missing.contains(text) {
                    missing.push(text);
                }
            }
        }
        if !missing.is_empty() {
            let fetched = self.request(&missing)?;
            let mut memo = self.memo.lock().unwrap();
            for (text, vector) in missing.iter().zip(fetched) {
                memo.insert((*text).to_string(), vector);
            }
        }
        let memo = self.memo.lock().unwrap();
        Ok(texts
            .iter()
            .map(|text| memo.get(*text).expect("memoized above").clone())
            .collect())
    }
}
