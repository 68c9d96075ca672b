//! Seed corpora, reference corpora and external LID predictions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use elicit_core::lid::{train_profiles, BuiltinBackend};
use elicit_core::{ExternalPredictionRow, ExternalPredictions, LidError};
use thiserror::Error;

use crate::config::{read_to_string, ConfigError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Read(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Dir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: no `<label>.txt` seed files found", path.display())]
    NoSeeds { path: PathBuf },
    #[error("{}:{line}: {message}", path.display())]
    Row {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Lid(#[from] LidError),
}

/// Non-blank lines of a UTF-8 text file, trimmed.
pub fn read_lines(path: &Path) -> Result<Vec<String>, CorpusError> {
    Ok(read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// Reads `<dir>/<lid_label>.txt`, one sentence per line.
pub fn load_seed_corpora(dir: &Path) -> Result<BTreeMap<String, Vec<String>>, CorpusError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Dir {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut corpora = BTreeMap::new();
    for entry in entries {
        let path = entry
            .map_err(|source| CorpusError::Dir {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(label) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        corpora.insert(label.to_string(), read_lines(&path)?);
    }
    if corpora.is_empty() {
        return Err(CorpusError::NoSeeds {
            path: dir.to_path_buf(),
        });
    }
    Ok(corpora)
}

pub fn builtin_backend(seed_dir: &Path) -> Result<BuiltinBackend, CorpusError> {
    let corpora = load_seed_corpora(seed_dir)?;
    Ok(BuiltinBackend::new(train_profiles(&corpora)?))
}

/// Reads a JSON-lines predictions file. Blank lines are skipped; the backend
/// is named after the file name.
pub fn load_external_predictions(path: &Path) -> Result<ExternalPredictions, CorpusError> {
    let text = read_to_string(path)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut predictions = ExternalPredictions::new(name);
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row_error = |message: String| CorpusError::Row {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let row: ExternalPredictionRow =
            serde_json::from_str(line).map_err(|e| row_error(e.to_string()))?;
        predictions
            .insert(row)
            .map_err(|e| row_error(e.to_string()))?;
    }
    Ok(predictions)
}
