//! Per-prompt leak values and their grouped means.
//!
//! A prompt leaks (value 100) when the concept is more similar to the test
//! generation than to the control generation, does not leak (value 0) when
//! the opposite holds, and ties (value 50) when the two similarities are
//! indistinguishable. The mean over a prompt set is the Mean Leak-Rate;
//! all-ties averaging to exactly 50 is the no-signal baseline.
//!
//! Exact equality of floating-point similarities is fragile once scores
//! round-trip through files, so the tie branch applies within an absolute
//! `epsilon` band (default 1e-9). Setting `epsilon` to 0 recovers strict
//! equality semantics.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Category, PromptInstance};
use crate::genclient::{GenerationKind, GenerationRecord};
use crate::report::RunManifest;
use crate::similarity::{ScoringBackend, SimilarityError, SimilarityMode};

/// Default width of the tie band around equal similarities.
pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum LeakFlag {
    DegenerateTest,
    DegenerateControl,
    Tie,
}

/// One instance's leak outcome: the similarity pair and the 100/0/50 value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakRateResult {
    pub instance_id: String,
    pub sim_test: f64,
    pub sim_control: f64,
    pub leak_value: u8,
    pub backend_id: String,
    pub flags: BTreeSet<LeakFlag>,
}

/// A [`LeakRateResult`] enriched with everything needed to group and persist
/// it: category, model, dataset, scoring mode, and the generation config
/// fingerprint. This is the row format of `results.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub instance_id: String,
    pub dataset_id: String,
    pub model_id: String,
    pub category: Category,
    pub backend_id: String,
    pub mode: SimilarityMode,
    pub sim_test: f64,
    pub sim_control: f64,
    pub leak_value: u8,
    pub flags: BTreeSet<LeakFlag>,
    pub config_fingerprint: String,
}

/// How rows of an [`AggregateReport`] are keyed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// One row per model × dataset × backend (overall table shape).
    ModelDatasetBackend,
    /// One row per category × model × backend (category table shape).
    CategoryModelBackend,
}

impl std::fmt::Display for Grouping {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Grouping::ModelDatasetBackend => f.write_str("model x dataset x backend"),
            Grouping::CategoryModelBackend => f.write_str("category x model x backend"),
        }
    }
}

/// One aggregated group: the mean leak value over `n` instances plus tie and
/// degenerate counts. `category` is set only under
/// [`Grouping::CategoryModelBackend`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub dataset_id: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    pub backend_id: String,
    pub mean_leak_rate: f64,
    pub n: usize,
    pub tie_count: usize,
    pub degenerate_count: usize,
}

/// Grouped Mean Leak-Rates plus the manifest of the run they summarize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub grouping: Grouping,
    pub manifest: RunManifest,
    pub rows: Vec<AggregateRow>,
}

#[derive(Debug, Error)]
pub enum LeakError {
    #[error("similarity inputs must be finite")]
    NonFiniteInput,
    #[error("epsilon must be finite and non-negative")]
    InvalidEpsilon,
    #[error("empty input")]
    EmptyInput,
    #[error("missing generation records for {} instance(s), first: {}", ids.len(), ids.first().map(String::as_str).unwrap_or(""))]
    MissingRecord { ids: Vec<String> },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// The per-prompt leak value: 100 when `sim_test` exceeds `sim_control` by
/// more than `epsilon`, 0 in the mirrored case, and 50 inside the tie band.
pub fn leak_rate_single(sim_test: f64, sim_control: f64, epsilon: f64) -> Result<u8, LeakError> {
    if !sim_test.is_finite() || !sim_control.is_finite() {
        return Err(LeakError::NonFiniteInput);
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(LeakError::InvalidEpsilon);
    }
    Ok(if sim_test > sim_control + epsilon {
        100
    } else if sim_test < sim_control - epsilon {
        0
    } else {
        50
    })
}

/// Unweighted arithmetic mean of per-prompt leak values, as a percentage.
pub fn mean_leak_rate(values: &[u8]) -> Result<f64, LeakError> {
    if values.is_empty() {
        return Err(LeakError::EmptyInput);
    }
    Ok(values.iter().map(|v| f64::from(*v)).sum::<f64>() / values.len() as f64)
}

/// Scores every instance against its pair of generation records under one
/// backend. Fails up front (listing ids) if any instance is missing a test
/// or control record; degenerate generations score under the zero policy and
/// are flagged, not skipped.
pub fn score_run(
    instances: &[PromptInstance],
    records: &[GenerationRecord],
    backend: &ScoringBackend,
    epsilon: f64,
) -> Result<Vec<LeakRateResult>, LeakError> {
    let mut by_key: HashMap<(&str, GenerationKind), &GenerationRecord> = HashMap::new();
    for record in records {
        by_key.insert((record.instance_id.as_str(), record.kind), record);
    }

    let mut missing = Vec::new();
    for instance in instances {
        let id = instance.id.as_str();
        if !by_key.contains_key(&(id, GenerationKind::Test))
            || !by_key.contains_key(&(id, GenerationKind::Control))
        {
            missing.push(instance.id.clone());
        }
    }
    if !missing.is_empty() {
        return Err(LeakError::MissingRecord { ids: missing });
    }

    let mut results = Vec::with_capacity(instances.len());
    for instance in instances {
        let id = instance.id.as_str();
        let test = by_key[&(id, GenerationKind::Test)];
        let control = by_key[&(id, GenerationKind::Control)];
        let sim_test = backend.score(&instance.concept, &test.text)?;
        let sim_control = backend.score(&instance.concept, &control.text)?;
        let leak_value = leak_rate_single(sim_test.value, sim_control.value, epsilon)?;
        let mut flags = BTreeSet::new();
        if sim_test.degenerate {
            flags.insert(LeakFlag::DegenerateTest);
        }
        if sim_control.degenerate {
            flags.insert(LeakFlag::DegenerateControl);
        }
        if leak_value == 50 {
            flags.insert(LeakFlag::Tie);
        }
        results.push(LeakRateResult {
            instance_id: instance.id.clone(),
            sim_test: sim_test.value,
            sim_control: sim_control.value,
            leak_value,
            backend_id: sim_test.backend_id,
            flags,
        });
    }
    Ok(results)
}

/// Joins leak results with their instances' categories and the run identity,
/// producing the persistable row format.
pub fn attach_context(
    results: &[LeakRateResult],
    instances: &[PromptInstance],
    dataset_id: &str,
    model_id: &str,
    mode: SimilarityMode,
    config_fingerprint: &str,
) -> Vec<ResultRecord> {
    let category_of: HashMap<&str, Category> = instances
        .iter()
        .map(|i| (i.id.as_str(), i.category))
        .collect();
    results
        .iter()
        .map(|r| ResultRecord {
            instance_id: r.instance_id.clone(),
            dataset_id: dataset_id.to_string(),
            model_id: model_id.to_string(),
            category: category_of
                .get(r.instance_id.as_str())
                .copied()
                .unwrap_or(Category::External),
            backend_id: r.backend_id.clone(),
            mode,
            sim_test: r.sim_test,
            sim_control: r.sim_control,
            leak_value: r.leak_value,
            flags: r.flags.clone(),
            config_fingerprint: config_fingerprint.to_string(),
        })
        .collect()
}

/// Groups result records and computes the unweighted mean per group. Row
/// order is deterministic: dataset, then category, then model, then backend.
pub fn aggregate(
    results: &[ResultRecord],
    grouping: Grouping,
    manifest: &RunManifest,
) -> Result<AggregateReport, LeakError> {
    if results.is_empty() {
        return Err(LeakError::EmptyInput);
    }
    type Key = (String, Option<Category>, String, String);
    let mut groups: BTreeMap<Key, Vec<&ResultRecord>> = BTreeMap::new();
    for record in results {
        let category = match grouping {
            Grouping::ModelDatasetBackend => None,
            Grouping::CategoryModelBackend => Some(record.category),
        };
        let key = (
            record.dataset_id.clone(),
            category,
            record.model_id.clone(),
            record.backend_id.clone(),
        );
        groups.entry(key).or_default().push(record);
    }
    let rows = groups
        .into_iter()
        .map(|((dataset_id, category, model_id, backend_id), members)| {
            let values: Vec<u8> = members.iter().map(|r| r.leak_value).collect();
            AggregateRow {
                dataset_id,
                model_id,
                category,
                backend_id,
                mean_leak_rate: mean_leak_rate(&values).expect("groups are non-empty"),
                n: members.len(),
                tie_count: members
                    .iter()
                    .filter(|r| r.flags.contains(&LeakFlag::Tie))
                    .count(),
                degenerate_count: members
                    .iter()
                    .filter(|r| {
                        r.flags.contains(&LeakFlag::DegenerateTest)
                            || r.flags.contains(&LeakFlag::DegenerateControl)
                    })
                    .count(),
            }
        })
        .collect();
    Ok(AggregateReport {
        grouping,
        manifest: manifest.clone(),
        rows,
    })
}
