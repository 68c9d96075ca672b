//! Evaluation and filtering over a whole run directory.

use std::collections::BTreeMap;
use std::path::Path;

use elicit_core::{
    aggregate, evaluate_output, filter_usable, reference_overlap, EvalConfig, EvalError,
    EvaluationRecord, GenerationRecord, LanguageConfig, LidBackend, OverlapGranularity,
    UsableCorpus, MEMORIZATION_THRESHOLD,
};
use serde::Serialize;
use thiserror::Error;

use crate::report::{build_table, render, Format, TableKind};
use crate::store::{
    write_atomic, write_evaluations, write_json_atomic, LanguageOverlap, OverlapFile, StoreError,
    SummaryFile, EVALUATIONS, OVERLAP, SUMMARY, SUMMARY_CSV,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{output_id}: language `{language}` is not configured")]
    UnknownLanguage { output_id: String, language: String },
    #[error("evaluation for `{0}` has no generation record")]
    MissingRecord(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn language<'a>(
    languages: &'a [LanguageConfig],
    record: &GenerationRecord,
) -> Result<&'a LanguageConfig, PipelineError> {
    languages
        .iter()
        .find(|l| l.iso_code == record.language)
        .ok_or_else(|| PipelineError::UnknownLanguage {
            output_id: record.output_id.clone(),
            language: record.language.clone(),
        })
}

/// Evaluates every record, in output id order.
pub fn evaluate_records(
    records: &[GenerationRecord],
    languages: &[LanguageConfig],
    backend: &dyn LidBackend,
    config: &EvalConfig,
) -> Result<Vec<EvaluationRecord>, PipelineError> {
    let mut sorted: Vec<&GenerationRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.output_id.cmp(&b.output_id));
    sorted
        .into_iter()
        .map(|r| Ok(evaluate_output(r, language(languages, r)?, backend, config)?))
        .collect()
}

pub fn summarize(
    evaluations: &[EvaluationRecord],
    backend: &dyn LidBackend,
    config: &EvalConfig,
) -> SummaryFile {
    SummaryFile {
        lid_backend: backend.name(),
        validity_threshold: config.validity_threshold,
        quality_formula: config.weights.formula(),
        conditions: aggregate(evaluations),
    }
}

/// Writes `evaluations.jsonl`, `summary.json` and `summary.csv`.
pub fn write_results(
    dir: &Path,
    evaluations: &[EvaluationRecord],
    summary: &SummaryFile,
) -> Result<(), PipelineError> {
    write_evaluations(&dir.join(EVALUATIONS), evaluations)?;
    write_json_atomic(&dir.join(SUMMARY), summary)?;
    let table = build_table(TableKind::FullSummary, summary, None)
        .expect("summary tables need no overlap data");
    write_atomic(&dir.join(SUMMARY_CSV), render(&table, Format::Csv).as_bytes())?;
    Ok(())
}

/// Overlap of each language's outputs with its reference corpus.
pub fn overlap(
    records: &[GenerationRecord],
    references: &[(String, String, Vec<String>)],
    granularity: OverlapGranularity,
) -> Result<OverlapFile, PipelineError> {
    let mut languages = Vec::new();
    for (iso, source, corpus) in references {
        let subset: Vec<GenerationRecord> =
            records.iter().filter(|r| &r.language == iso).cloned().collect();
        languages.push(LanguageOverlap {
            language: iso.clone(),
            reference: source.clone(),
            results: reference_overlap(&subset, corpus, granularity)?,
        });
    }
    languages.sort_by(|a, b| a.language.cmp(&b.language));
    Ok(OverlapFile {
        threshold: MEMORIZATION_THRESHOLD,
        granularity,
        languages,
    })
}

pub fn write_overlap(dir: &Path, overlap: Option<&OverlapFile>) -> Result<(), PipelineError> {
    let path = dir.join(OVERLAP);
    match overlap {
        Some(o) => write_json_atomic(&path, o)?,
        None if path.exists() => std::fs::remove_file(&path).map_err(|source| StoreError::Io {
            path: path.clone(),
            source,
        })?,
        None => {}
    }
    Ok(())
}

/// Joins evaluations with their records and keeps the usable ones.
pub fn usable_corpus(
    records: &[GenerationRecord],
    evaluations: &[EvaluationRecord],
    min_quality: Option<f64>,
) -> Result<UsableCorpus, PipelineError> {
    let by_id: BTreeMap<&str, &GenerationRecord> =
        records.iter().map(|r| (r.output_id.as_str(), r)).collect();
    let pairs = evaluations
        .iter()
        .map(|e| {
            by_id
                .get(e.output_id.as_str())
                .map(|g| ((*g).clone(), e.clone()))
                .ok_or_else(|| PipelineError::MissingRecord(e.output_id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(filter_usable(&pairs, min_quality)?)
}

#[derive(Serialize)]
struct Provenance<'a> {
    output_id: &'a str,
    model_id: &'a str,
    task_type: elicit_core::TaskType,
    word_count: usize,
    quality: f64,
}

/// Writes `<iso>.txt` (outputs separated by blank lines) and
/// `<iso>.provenance.jsonl` for every language, including languages with no
/// usable output. Returns `(iso, outputs, words)` per language.
pub fn write_corpus(
    dir: &Path,
    corpus: &UsableCorpus,
    languages: &[&str],
) -> Result<Vec<(String, usize, usize)>, PipelineError> {
    let mut totals = Vec::new();
    for &iso in languages {
        let mut text = String::new();
        let mut provenance = Vec::new();
        let mut count = 0;
        for e in corpus.for_language(iso) {
            if count > 0 {
                text.push('\n');
            }
            text.push_str(e.text.trim());
            text.push('\n');
            serde_json::to_writer(
                &mut provenance,
                &Provenance {
                    output_id: &e.output_id,
                    model_id: &e.model_id,
                    task_type: e.task_type,
                    word_count: e.word_count,
                    quality: e.quality,
                },
            )
            .expect("serializable provenance");
            provenance.push(b'\n');
            count += 1;
        }
        write_atomic(&dir.join(format!("{iso}.txt")), text.as_bytes())?;
        write_atomic(&dir.join(format!("{iso}.provenance.jsonl")), &provenance)?;
        totals.push((iso.to_string(), count, corpus.words_for(iso)));
    }
    Ok(totals)
}
