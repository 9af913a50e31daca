//! Rendering of aggregated leak rates as markdown, CSV, and JSON tables.
//!
//! Two table shapes are supported: the overall shape (one row per dataset and
//! model, one column per backend) and the category shape (per-category blocks
//! of model rows, plus a derived cross-model average row). Markdown prints
//! scores at two decimals and bolds the best cell; the machine formats carry
//! full-precision values and an explicit `best` flag. Every rendering embeds
//! the manifest of the run it summarizes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Category;
use crate::leakrate::{AggregateReport, AggregateRow, Grouping};
use crate::similarity::TokenScoreComponent;

/// Everything needed to interpret (or re-score) a run: identity, protocol
/// fingerprint, scoring settings, and headline counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset_id: String,
    pub model_id: String,
    pub config_fingerprint: String,
    pub backend_ids: Vec<String>,
    pub epsilon: f64,
    pub token_score_component: TokenScoreComponent,
    /// Recorded scoring choices: greedy token matching runs without IDF
    /// weighting or baseline rescaling.
    pub idf_weighting: bool,
    pub baseline_rescaling: bool,
    pub started_at: u64,
    pub finished_at: u64,
    pub instance_counts: BTreeMap<String, usize>,
    pub tie_count: usize,
    pub degenerate_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report grouped by {got}, expected {expected}")]
    WrongGrouping { expected: Grouping, got: Grouping },
}

/// A derived row: the unweighted mean of the per-model means inside one
/// category, per backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAverage {
    pub category: Category,
    pub backend_id: String,
    pub mean_leak_rate: f64,
    pub models: usize,
}

#[derive(Serialize)]
struct RenderedRow<'a> {
    #[serde(flatten)]
    row: &'a AggregateRow,
    best: bool,
}

fn backend_columns(rows: &[AggregateRow]) -> Vec<String> {
    let set: BTreeSet<&str> = rows.iter().map(|r| r.backend_id.as_str()).collect();
    set.into_iter().map(str::to_string).collect()
}

fn manifest_line(manifest: &RunManifest) -> String {
    format!(
        "Manifest: {}",
        serde_json::to_string(manifest).expect("manifest serializes")
    )
}

fn csv_text(
    report: &AggregateReport,
    best: &dyn Fn(&AggregateRow) -> bool,
) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "grouping",
            "dataset",
            "category",
            "model",
            "backend",
            "mean_leak_rate",
            "n",
            "tie_count",
            "degenerate_count",
            "best",
        ])
        .expect("csv header");
    for row in &report.rows {
        writer
            .write_record([
                match report.grouping {
                    Grouping::ModelDatasetBackend => "overall",
                    Grouping::CategoryModelBackend => "by_category",
                }
                .to_string(),
                row.dataset_id.clone(),
                row.category.map(|c| c.key().to_string()).unwrap_or_default(),
                row.model_id.clone(),
                row.backend_id.clone(),
                row.mean_leak_rate.to_string(),
                row.n.to_string(),
                row.tie_count.to_string(),
                row.degenerate_count.to_string(),
                best(row).to_string(),
            ])
            .expect("csv row");
    }
    let body = String::from_utf8(writer.into_inner().expect("csv buffer")).expect("csv utf8");
    format!(
        "# manifest: {}\n{body}",
        serde_json::to_string(&report.manifest).expect("manifest serializes")
    )
}

fn markdown_cell(value: f64, bold: bool) -> String {
    if bold {
        format!("**{value:.2}**")
    } else {
        format!("{value:.2}")
    }
}

/// Renders the overall table: one row per dataset and model, one score
/// column per backend, with the highest score per dataset and backend across
/// models marked.
pub fn render_table2(
    report: &AggregateReport,
    format: ReportFormat,
) -> Result<String, ReportError> {
    if report.grouping != Grouping::ModelDatasetBackend {
        return Err(ReportError::WrongGrouping {
            expected: Grouping::ModelDatasetBackend,
            got: report.grouping,
        });
    }

    // highest mean per (dataset, backend); ties all marked
    let mut max_by: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for row in &report.rows {
        let key = (row.dataset_id.as_str(), row.backend_id.as_str());
        let entry = max_by.entry(key).or_insert(f64::NEG_INFINITY);
        *entry = entry.max(row.mean_leak_rate);
    }
    let is_best = |row: &AggregateRow| {
        max_by[&(row.dataset_id.as_str(), row.backend_id.as_str())] == row.mean_leak_rate
    };

    match format {
        ReportFormat::Csv => Ok(csv_text(report, &is_best)),
        ReportFormat::Json => {
            let rows: Vec<RenderedRow> = report
                .rows
                .iter()
                .map(|row| RenderedRow {
                    row,
                    best: is_best(row),
                })
                .collect();
            let value = serde_json::json!({
                "grouping": report.grouping,
                "manifest": report.manifest,
                "rows": rows,
            });
            Ok(serde_json::to_string_pretty(&value).expect("report serializes"))
        }
        ReportFormat::Markdown => {
            let backends = backend_columns(&report.rows);
            let mut cells: BTreeMap<(&str, &str), BTreeMap<&str, &AggregateRow>> = BTreeMap::new();
            for row in &report.rows {
                cells
                    .entry((row.dataset_id.as_str(), row.model_id.as_str()))
                    .or_default()
                    .insert(row.backend_id.as_str(), row);
            }
            let mut out = String::from("## Mean Leak-Rate by dataset and model\n\n");
            out.push_str(&format!("| dataset | model | {} |\n", backends.join(" | ")));
            out.push_str(&format!("|---|---|{}\n", "---|".repeat(backends.len())));
            for ((dataset, model), by_backend) in &cells {
                let mut line = format!("| {dataset} | {model} |");
                for backend in &backends {
                    match by_backend.get(backend.as_str()) {
                        Some(row) => {
                            line.push_str(&format!(
                                " {} |",
                                markdown_cell(row.mean_leak_rate, is_best(row))
                            ));
                        }
                        None => line.push_str(" — |"),
                    }
                }
                out.push_str(&line);
                out.push('\n');
            }
            out.push('\n');
            out.push_str(&manifest_line(&report.manifest));
            out.push('\n');
            Ok(out)
        }
    }
}

/// The derived cross-model average rows for a category-grouped report.
pub fn category_averages(report: &AggregateReport) -> Vec<CategoryAverage> {
    let mut groups: BTreeMap<(Option<Category>, &str), Vec<f64>> = BTreeMap::new();
    for row in &report.rows {
        groups
            .entry((row.category, row.backend_id.as_str()))
            .or_default()
            .push(row.mean_leak_rate);
    }
    groups
        .into_iter()
        .filter_map(|((category, backend_id), means)| {
            Some(CategoryAverage {
                category: category?,
                backend_id: backend_id.to_string(),
                mean_leak_rate: means.iter().sum::<f64>() / means.len() as f64,
                models: means.len(),
            })
        })
        .collect()
}

/// Renders the per-category table: one block per category with one row per
/// model, the highest score per model and backend across categories marked,
/// and a derived cross-model average row per block.
pub fn render_table3(
    report: &AggregateReport,
    format: ReportFormat,
) -> Result<String, ReportError> {
    if report.grouping != Grouping::CategoryModelBackend {
        return Err(ReportError::WrongGrouping {
            expected: Grouping::CategoryModelBackend,
            got: report.grouping,
        });
    }

    // highest mean per (model, backend) across categories; ties all marked
    let mut max_by: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for row in &report.rows {
        let key = (row.model_id.as_str(), row.backend_id.as_str());
        let entry = max_by.entry(key).or_insert(f64::NEG_INFINITY);
        *entry = entry.max(row.mean_leak_rate);
    }
    let is_best = |row: &AggregateRow| {
        max_by[&(row.model_id.as_str(), row.backend_id.as_str())] == row.mean_leak_rate
    };

    match format {
        ReportFormat::Csv => Ok(csv_text(report, &is_best)),
        ReportFormat::Json => {
            let rows: Vec<RenderedRow> = report
                .rows
                .iter()
                .map(|row| RenderedRow {
                    row,
                    best: is_best(row),
                })
                .collect();
            let value = serde_json::json!({
                "grouping": report.grouping,
                "manifest": report.manifest,
                "rows": rows,
                "category_averages": category_averages(report),
            });
            Ok(serde_json::to_string_pretty(&value).expect("report serializes"))
        }
        ReportFormat::Markdown => {
            let backends = backend_columns(&report.rows);
            let averages = category_averages(report);
            let mut categories: Vec<Category> = Vec::new();
            for row in &report.rows {
                let category = row.category.expect("category grouping carries categories");
                if !categories.contains(&category) {
                    categories.push(category);
                }
            }
            categories.sort();

            let mut out = String::from("## Mean Leak-Rate by category and model\n\n");
            for category in categories {
                out.push_str(&format!("### {}\n\n", category.label()));
                out.push_str(&format!("| model | {} |\n", backends.join(" | ")));
                out.push_str(&format!("|---|{}\n", "---|".repeat(backends.len())));
                let mut models: BTreeMap<&str, BTreeMap<&str, &AggregateRow>> = BTreeMap::new();
                for row in &report.rows {
                    if row.category == Some(category) {
                        models
                            .entry(row.model_id.as_str())
                            .or_default()
                            .insert(row.backend_id.as_str(), row);
                    }
                }
                for (model, by_backend) in &models {
                    let mut line = format!("| {model} |");
                    for backend in &backends {
                        match by_backend.get(backend.as_str()) {
                            Some(row) => line.push_str(&format!(
                                " {} |",
                                markdown_cell(row.mean_leak_rate, is_best(row))
                            )),
                            None => line.push_str(" — |"),
                        }
                    }
                    out.push_str(&line);
                    out.push('\n');
                }
                let mut line = String::from("| _category average_ |");
                for backend in &backends {
                    match averages
                        .iter()
                        .find(|a| a.category == category && &a.backend_id == backend)
                    {
                        Some(avg) => line.push_str(&format!(" {:.2} |", avg.mean_leak_rate)),
                        None => line.push_str(" — |"),
                    }
                }
                out.push_str(&line);
                out.push_str("\n\n");
            }
            out.push_str(&manifest_line(&report.manifest));
            out.push('\n');
            Ok(out)
        }
    }
}
