//! On-disk layout of run and results directories.
//!
//! A run directory holds one `<model>/<language>/<task_type>/<prompt_id>.json`
//! per completed call plus `manifest.json`. A results directory holds
//! `evaluations.jsonl`, `summary.json`, `summary.csv` and optionally
//! `overlap.json`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use elicit_core::{ConditionSummary, EvaluationRecord, GenerationRecord, OverlapResult};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MANIFEST: &str = "manifest.json";
pub const EVALUATIONS: &str = "evaluations.jsonl";
pub const SUMMARY: &str = "summary.json";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const OVERLAP: &str = "overlap.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: record has output_id `{output_id}`, which does not match its location", path.display())]
    Misplaced { path: PathBuf, output_id: String },
    #[error("{}: duplicate output_id `{output_id}`", path.display())]
    Duplicate { path: PathBuf, output_id: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn json_err(path: &Path) -> impl FnOnce(serde_json::Error) -> StoreError + '_ {
    move |source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder.tempfile_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| StoreError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable value");
    bytes.push(b'\n');
    bytes
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<(), StoreError> {
    write_atomic(path, &to_json_bytes(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(json_err(path))
}

pub fn record_path(out_dir: &Path, output_id: &str) -> PathBuf {
    out_dir.join(format!("{output_id}.json"))
}

pub fn write_record(out_dir: &Path, record: &GenerationRecord) -> Result<(), StoreError> {
    write_json_atomic(&record_path(out_dir, &record.output_id), record)
}

/// Every record under `out_dir`, sorted by output id. Files other than
/// `*.json` at depth four (such as interrupted temporaries) are ignored.
pub fn load_records(out_dir: &Path) -> Result<Vec<GenerationRecord>, StoreError> {
    if !out_dir.is_dir() {
        return Err(StoreError::Io {
            path: out_dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let mut records = Vec::new();
    for entry in walkdir::WalkDir::new(out_dir)
        .min_depth(4)
        .max_depth(4)
        .sort_by_file_name()
    {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(out_dir).to_path_buf();
            StoreError::Io {
                path,
                source: e.into(),
            }
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().and_then(|e| e.to_str()) != Some("json")
        {
            continue;
        }
        let record: GenerationRecord = read_json(path)?;
        if record_path(out_dir, &record.output_id) != path {
            return Err(StoreError::Misplaced {
                path: path.to_path_buf(),
                output_id: record.output_id,
            });
        }
        records.push(record);
    }
    records.sort_by(|a, b| a.output_id.cmp(&b.output_id));
    Ok(records)
}

pub fn write_evaluations(path: &Path, records: &[EvaluationRecord]) -> Result<(), StoreError> {
    let mut bytes = Vec::new();
    for r in records {
        serde_json::to_writer(&mut bytes, r).map_err(json_err(path))?;
        bytes.push(b'\n');
    }
    write_atomic(path, &bytes)
}

pub fn read_evaluations(path: &Path) -> Result<Vec<EvaluationRecord>, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut records: Vec<EvaluationRecord> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        records.push(serde_json::from_str(line).map_err(json_err(path))?);
    }
    records.sort_by(|a, b| a.output_id.cmp(&b.output_id));
    if let Some(w) = records.windows(2).find(|w| w[0].output_id == w[1].output_id) {
        return Err(StoreError::Duplicate {
            path: path.to_path_buf(),
            output_id: w[0].output_id.clone(),
        });
    }
    Ok(records)
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub lid_backend: String,
    pub validity_threshold: usize,
    pub quality_formula: String,
    pub conditions: Vec<ConditionSummary>,
}

/// Contents of `overlap.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapFile {
    pub threshold: f64,
    pub granularity: elicit_core::OverlapGranularity,
    /// One entry per language with a reference corpus.
    pub languages: Vec<LanguageOverlap>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanguageOverlap {
    pub language: String,
    pub reference: String,
    pub results: Vec<OverlapResult>,
}
