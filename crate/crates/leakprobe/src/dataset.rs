//! Prompt-pair dataset construction, validation, and persistence.
//!
//! An evaluation unit is a [`PromptInstance`]: a leakage-triggering `concept`,
//! a `test_prompt` containing it, and a concept-free `control_prompt`. The
//! built-in dataset covers three categories of color prompts:
//!
//! - category 1: a color in the prompt, a non-color item expected in the
//!   generation ("He likes red. He works as a ...");
//! - category 2: a color in the prompt, another color expected ("Her scarf
//!   was red. Her gloves were dyed ...");
//! - category 3: a color-bearing proper name, toponym, or idiom in the
//!   prompt, a color expected ("Ivory is a student. Her favorite color
//!   is ...").
//!
//! Categories 1 and 2 are expanded from 20 templates crossed with 33 color
//! fillers (11 basic terms plus two shade variations each); category 3 is a
//! curated list. Externally annotated datasets load from JSONL via
//! [`load_instances`].

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod builtin;

pub use builtin::{builtin_category3_instances, builtin_color_vocabulary, builtin_templates};

/// Placeholder token replaced by a color filler during template expansion.
pub const INSERT_PLACEHOLDER: &str = "{INSERT}";

/// Prompt category. `External` marks instances loaded from user files whose
/// records carry no category of their own.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Cat1,
    Cat2,
    Cat3,
    #[default]
    External,
}

impl Category {
    /// Short identifier used in ids and file names.
    pub fn key(self) -> &'static str {
        match self {
            Category::Cat1 => "cat1",
            Category::Cat2 => "cat2",
            Category::Cat3 => "cat3",
            Category::External => "external",
        }
    }

    /// Human-readable label used in rendered reports.
    pub fn label(self) -> &'static str {
        match self {
            Category::Cat1 => "1) color in prompt; non-color generation expected",
            Category::Cat2 => "2) color in prompt; color generation expected",
            Category::Cat3 => "3) name or set expression in prompt; color generation expected",
            Category::External => "external",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// What kind of continuation a template is written to elicit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedGeneration {
    NonColor,
    Color,
}

/// One basic color term plus its two multi-word shade variations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorTerm {
    pub basic: String,
    pub variations: Vec<String>,
}

impl ColorTerm {
    /// All filler strings this term contributes: the basic term followed by
    /// its variations.
    pub fn fillers(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.basic.as_str()).chain(self.variations.iter().map(String::as_str))
    }
}

/// A slot-filling template for category 1/2 prompts. `test_pattern` holds the
/// `{INSERT}` placeholder exactly once; `control_prompt` is the concept-free
/// tail sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub category: Category,
    pub test_pattern: String,
    pub control_prompt: String,
    pub expected_generation: ExpectedGeneration,
}

/// One evaluation unit: the concept, the prompt containing it, and the
/// concept-free control prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub id: String,
    #[serde(default)]
    pub category: Category,
    pub concept: String,
    pub test_prompt: String,
    pub control_prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_id: Option<String>,
}

/// A violated [`PromptInstance`] invariant. Violations are data, not errors:
/// [`validate_instance`] reports all of them at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    EmptyConcept,
    ConceptMissingFromTest,
    ConceptInControl,
    TestEqualsControl,
    ControlNotSuffixOfTest,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Violation::EmptyConcept => "concept is empty",
            Violation::ConceptMissingFromTest => "concept does not appear in test_prompt",
            Violation::ConceptInControl => "concept appears in control_prompt",
            Violation::TestEqualsControl => "test equals control",
            Violation::ControlNotSuffixOfTest => {
                "control_prompt is not a suffix of test_prompt"
            }
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("template `{id}`: {reason}")]
    MalformedTemplate { id: String, reason: String },
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("instance `{id}` failed validation: {}", format_violations(.violations))]
    Validation {
        id: String,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(Violation::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks every [`PromptInstance`] invariant and returns the violated ones.
/// An empty result means the instance is well-formed. The suffix rule applies
/// only to category 1/2 instances, whose control is the tail of the test
/// prompt by construction.
pub fn validate_instance(instance: &PromptInstance) -> Vec<Violation> {
    let mut violations = Vec::new();
    if instance.concept.is_empty() {
        violations.push(Violation::EmptyConcept);
    } else {
        if !instance.test_prompt.contains(&instance.concept) {
            violations.push(Violation::ConceptMissingFromTest);
        }
        if instance.control_prompt.contains(&instance.concept) {
            violations.push(Violation::ConceptInControl);
        }
    }
    if instance.test_prompt == instance.control_prompt {
        violations.push(Violation::TestEqualsControl);
    }
    if matches!(instance.category, Category::Cat1 | Category::Cat2)
        && !instance
            .test_prompt
            .ends_with(instance.control_prompt.trim_start())
    {
        violations.push(Violation::ControlNotSuffixOfTest);
    }
    violations
}

/// Lowercases and reduces a string to `[a-z0-9-]` for use in instance ids.
pub fn slugify(text: &str) -> String {
    let mut slug = String::with_capacity(text.len());
    let mut last_dash = true;
    for ch in text.chars() {
        if ch.is_ascii_alphanumeric() {
            slug.push(ch.to_ascii_lowercase());
            last_dash = false;
        } else if !last_dash {
            slug.push('-');
            last_dash = true;
        }
    }
    while slug.ends_with('-') {
        slug.pop();
    }
    slug
}

fn check_template(template: &PromptTemplate) -> Result<(), DatasetError> {
    let malformed = |reason: String| DatasetError::MalformedTemplate {
        id: template.id.clone(),
        reason,
    };
    let count = template.test_pattern.matches(INSERT_PLACEHOLDER).count();
    if count != 1 {
        return Err(malformed(format!(
            "test_pattern must contain {INSERT_PLACEHOLDER} exactly once, found {count}"
        )));
    }
    if template.control_prompt.contains(INSERT_PLACEHOLDER) {
        return Err(malformed("control_prompt must not contain a placeholder".into()));
    }
    match (template.category, template.expected_generation) {
        (Category::Cat1, ExpectedGeneration::NonColor) => Ok(()),
        (Category::Cat2, ExpectedGeneration::Color) => Ok(()),
        (Category::Cat1, _) | (Category::Cat2, _) => Err(malformed(
            "expected_generation does not match category".into(),
        )),
        _ => Err(malformed(format!(
            "expansion only supports cat1/cat2 templates, got {}",
            template.category
        ))),
    }
}

/// Expands every template with every filler (basic terms and variations).
/// Output is templates-major, vocabulary-minor, with deterministic ids of the
/// form `"{template_id}:{slugified filler}"`.
pub fn expand_templates(
    templates: &[PromptTemplate],
    vocab: &[ColorTerm],
) -> Result<Vec<PromptInstance>, DatasetError> {
    let mut instances = Vec::with_capacity(templates.len() * vocab.len() * 3);
    let mut seen = HashSet::new();
    for template in templates {
        check_template(template)?;
        for term in vocab {
            for filler in term.fillers() {
                let id = format!("{}:{}", template.id, slugify(filler));
                if !seen.insert(id.clone()) {
                    return Err(DatasetError::DuplicateId(id));
                }
                instances.push(PromptInstance {
                    id,
                    category: template.category,
                    concept: filler.to_string(),
                    test_prompt: template.test_pattern.replace(INSERT_PLACEHOLDER, filler),
                    control_prompt: template.control_prompt.clone(),
                    template_id: Some(template.id.clone()),
                });
            }
        }
    }
    Ok(instances)
}

/// The full built-in dataset: both expanded color categories plus the curated
/// category 3 instances.
pub fn builtin_dataset() -> Vec<PromptInstance> {
    let mut instances = expand_templates(&builtin_templates(), &builtin_color_vocabulary())
        .expect("built-in templates are well-formed");
    instances.extend(builtin_category3_instances());
    instances
}

/// Writes instances as UTF-8 JSONL, one flat record per line.
pub fn save_instances(path: &Path, instances: &[PromptInstance]) -> Result<(), DatasetError> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    for instance in instances {
        let line = serde_json::to_string(instance).expect("instance serializes");
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Loads and validates instances from a JSONL file. Records missing a
/// `category` field default to [`Category::External`]; unknown fields are
/// ignored. Blank lines are skipped.
pub fn load_instances(path: &Path) -> Result<Vec<PromptInstance>, DatasetError> {
    let text = fs::read_to_string(path)?;
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let instance: PromptInstance =
            serde_json::from_str(line).map_err(|err| DatasetError::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: err.to_string(),
            })?;
        let violations = validate_instance(&instance);
        if !violations.is_empty() {
            return Err(DatasetError::Validation {
                id: instance.id,
                violations,
            });
        }
        if !seen.insert(instance.id.clone()) {
            return Err(DatasetError::DuplicateId(instance.id));
        }
        instances.push(instance);
    }
    Ok(instances)
}

/// Loads templates from a JSONL file, overriding the built-in set. Each
/// record mirrors [`PromptTemplate`]; every template is checked before use.
pub fn load_templates(path: &Path) -> Result<Vec<PromptTemplate>, DatasetError> {
    let text = fs::read_to_string(path)?;
    let mut templates = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let template: PromptTemplate =
            serde_json::from_str(line).map_err(|err| DatasetError::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: err.to_string(),
            })?;
        check_template(&template)?;
        templates.push(template);
    }
    Ok(templates)
}
