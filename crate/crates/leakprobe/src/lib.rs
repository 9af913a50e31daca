//! leakprobe measures *semantic leakage* in text-generation models: the
//! tendency of a concept mentioned in a prompt (a color, a color-bearing name,
//! an idiom) to pull the model's continuation toward semantically related
//! content.
//!
//! The harness is built from five layers, each usable on its own:
//!
//! - [`dataset`] constructs paired test/control prompts: a built-in
//!   color-focused dataset expanded from templates, plus a loader for
//!   externally annotated prompt files.
//! - [`genclient`] elicits generations from any HTTP completion endpoint (or
//!   from offline mock providers) under a fixed decoding protocol, with
//!   retries and a JSONL cache.
//! - [`similarity`] scores concept/generation similarity with two modes:
//!   token-level greedy-matching F1 and whole-string embedding cosine, over
//!   pluggable embedding backends (a deterministic built-in one, or a remote
//!   embedding service).
//! - [`leakrate`] turns similarity pairs into per-prompt leak values
//!   (100 / 0 / 50) and aggregates them into grouped means.
//! - [`report`] renders the aggregates as markdown, CSV, or JSON tables with
//!   full run metadata.
//!
//! The [`cli`] module wires the layers into subcommands (`dataset-build`,
//!   `generate`, `score`, `report`, `run`); `src/bin/leakprobe.rs` is a thin
//! wrapper around it. The `examples/` directory has one runnable program per
//! capability — start with `offline_run` for the whole pipeline without any
//! network access.

pub mod cli;
pub mod dataset;
pub mod genclient;
pub mod leakrate;
pub mod report;
pub mod similarity;

pub use dataset::{Category, ColorTerm, PromptInstance, PromptTemplate};
pub use genclient::{GenerationConfig, GenerationKind, GenerationRecord};
pub use leakrate::{AggregateReport, LeakRateResult, ResultRecord};
pub use report::RunManifest;
pub use similarity::{EmbeddingVector, SimilarityMode, SimilarityScore};
