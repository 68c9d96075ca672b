//! Taxonomy and configuration files.
//!
//! All documents are JSON objects carrying a `schema_version` (currently 1)
//! and one array field (`templates`, `languages` or `models`). A bare array
//! of entries is accepted as well.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use elicit_core::taxonomy::check_templates;
use elicit_core::{LanguageConfig, ModelConfig, PromptTemplate, TaskType, TaxonomyError};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: unsupported schema_version {version} (expected {SCHEMA_VERSION})", path.display())]
    UnsupportedSchema { path: PathBuf, version: u32 },
    #[error("{}: {source}", path.display())]
    Invalid {
        path: PathBuf,
        #[source]
        source: TaxonomyError,
    },
    #[error("{}: duplicate {kind} `{id}`", path.display())]
    Duplicate {
        path: PathBuf,
        kind: &'static str,
        id: String,
    },
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, e: serde_json::Error) -> ConfigError {
    ConfigError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

#[derive(Deserialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(alias = "templates", alias = "languages", alias = "models")]
    entries: Vec<T>,
}

/// Parses either a versioned document or a bare array.
fn parse_entries<T: DeserializeOwned>(path: &Path, text: &str) -> Result<Vec<T>, ConfigError> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| parse_error(path, e));
    }
    let doc: Versioned<T> = serde_json::from_str(text).map_err(|e| parse_error(path, e))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::UnsupportedSchema {
            path: path.to_path_buf(),
            version: doc.schema_version,
        });
    }
    Ok(doc.entries)
}

/// Loads one taxonomy file and rejects empty sets and duplicate ids.
pub fn load_taxonomy(path: &Path) -> Result<Vec<PromptTemplate>, ConfigError> {
    let text = read_to_string(path)?;
    let invalid = |source| ConfigError::Invalid {
        path: path.to_path_buf(),
        source,
    };
    if text.trim().is_empty() {
        return Err(invalid(TaxonomyError::Empty));
    }
    let templates: Vec<PromptTemplate> = parse_entries(path, &text)?;
    check_templates(&templates).map_err(invalid)?;
    let counts: Vec<String> = TaskType::ALL
        .iter()
        .map(|t| format!("{t}={}", templates.iter().filter(|p| p.task_type == *t).count()))
        .collect();
    log::info!(
        "loaded {} templates from {} ({})",
        templates.len(),
        path.display(),
        counts.join(", ")
    );
    Ok(templates)
}

/// `path` may be a single taxonomy file shared by every language or a
/// directory holding `<iso_code>.json` per language.
pub fn load_taxonomy_for(path: &Path, iso_code: &str) -> Result<Vec<PromptTemplate>, ConfigError> {
    if path.is_dir() {
        load_taxonomy(&path.join(format!("{iso_code}.json")))
    } else {
        load_taxonomy(path)
    }
}

pub fn load_languages(path: &Path) -> Result<Vec<LanguageConfig>, ConfigError> {
    let langs: Vec<LanguageConfig> = parse_entries(path, &read_to_string(path)?)?;
    let mut seen = BTreeSet::new();
    for lang in &langs {
        lang.validate().map_err(|source| ConfigError::Invalid {
            path: path.to_path_buf(),
            source,
        })?;
        if !seen.insert(lang.iso_code.as_str()) {
            return Err(ConfigError::Duplicate {
                path: path.to_path_buf(),
                kind: "language",
                id: lang.iso_code.clone(),
            });
        }
    }
    Ok(langs)
}

pub fn load_models(path: &Path) -> Result<Vec<ModelConfig>, ConfigError> {
    let models: Vec<ModelConfig> = parse_entries(path, &read_to_string(path)?)?;
    let mut seen = BTreeSet::new();
    for model in &models {
        model.validate().map_err(|source| ConfigError::Invalid {
            path: path.to_path_buf(),
            source,
        })?;
        if !seen.insert(model.model_id.as_str()) {
            return Err(ConfigError::Duplicate {
                path: path.to_path_buf(),
                kind: "model",
                id: model.model_id.clone(),
            });
        }
    }
    Ok(models)
}
