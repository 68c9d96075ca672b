#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use elicit::batch::{plan_batch, run_batch, BatchOptions, BatchOutcome, BatchPlan};
use elicit::client::{Auth, RetryPolicy};
use elicit::config::{load_languages, load_models, load_taxonomy_for};
use elicit::corpus::builtin_backend;
use elicit::mock::MockBackend;
use elicit::pipeline;
use elicit::report::{build_table, render, Format, TableKind};
use elicit::store::{load_records, OverlapFile, SummaryFile};
use elicit_core::{
    BuiltinBackend, EvalConfig, EvaluationRecord, LanguageConfig, ModelConfig,
    OverlapGranularity,
};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn languages() -> Vec<LanguageConfig> {
    load_languages(&root().join("config/languages.json")).unwrap()
}

pub fn models() -> Vec<ModelConfig> {
    load_models(&root().join("config/models.json")).unwrap()
}

pub fn canonical_plan() -> BatchPlan {
    let per_language: Vec<_> = languages()
        .into_iter()
        .map(|l| {
            let t = load_taxonomy_for(&root().join("taxonomy"), &l.iso_code).unwrap();
            (l, t)
        })
        .collect();
    plan_batch(&per_language, &models(), Auth::None).unwrap()
}

pub fn shipped_mock() -> MockBackend {
    MockBackend::load(&root().join("fixtures/mock_responses.json")).unwrap()
}

/// No backoff sleeps; jitter still drawn from the seeded stream.
pub fn fast_options(parallelism: usize, max_requests: Option<usize>) -> BatchOptions {
    BatchOptions {
        parallelism,
        max_requests,
        policy: RetryPolicy {
            base_delay: std::time::Duration::ZERO,
            ..RetryPolicy::default()
        },
    }
}

pub fn generate(out: &Path, backend: &MockBackend, options: &BatchOptions) -> BatchOutcome {
    run_batch(&canonical_plan(), out, backend, options).unwrap()
}

pub fn seed_backend() -> BuiltinBackend {
    builtin_backend(&root().join("seeds")).unwrap()
}

pub fn evaluate(outputs: &Path, results: &Path) -> (Vec<EvaluationRecord>, SummaryFile) {
    let records = load_records(outputs).unwrap();
    let backend = seed_backend();
    let config = EvalConfig::default();
    let evals = pipeline::evaluate_records(&records, &languages(), &backend, &config).unwrap();
    let summary = pipeline::summarize(&evals, &backend, &config);
    pipeline::write_results(results, &evals, &summary).unwrap();
    (evals, summary)
}

pub fn hausa_overlap(outputs: &Path) -> OverlapFile {
    let records = load_records(outputs).unwrap();
    let reference = elicit::corpus::read_lines(&root().join("fixtures/reference/hau.txt")).unwrap();
    pipeline::overlap(
        &records,
        &[("hau".into(), "hau.txt".into(), reference)],
        OverlapGranularity::PerCondition,
    )
    .unwrap()
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Every table kind in every format for the shipped mock fixture run,
/// keyed by golden file name.
pub fn fixture_reports() -> Vec<(String, String)> {
    let dir = tempfile::tempdir().unwrap();
    let outputs = dir.path().join("outputs");
    generate(&outputs, &shipped_mock(), &fast_options(4, None));
    let (_, summary) = evaluate(&outputs, &dir.path().join("results"));
    let overlap = hausa_overlap(&outputs);
    let mut reports = Vec::new();
    for kind in TableKind::ALL {
        for format in [Format::Csv, Format::Latex, Format::Json] {
            let table = build_table(kind, &summary, Some(&overlap)).unwrap();
            reports.push((
                format!("{}.{}", kind.as_str(), format.extension()),
                render(&table, format),
            ));
        }
    }
    reports
}

/// Compares against `tests/golden`, or rewrites it when `UPDATE_GOLDEN` is set.
/// Returns the names of mismatching files.
pub fn check_golden() -> Vec<String> {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut mismatches = Vec::new();
    for (name, text) in fixture_reports() {
        let path = golden_dir().join(&name);
        if update {
            std::fs::create_dir_all(golden_dir()).unwrap();
            std::fs::write(&path, &text).unwrap();
        } else if std::fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
            mismatches.push(name);
        }
    }
    mismatches
}

pub fn attempt_one_counts(log: &[elicit::mock::CallLogEntry]) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for e in log.iter().filter(|e| e.attempt == 1) {
        *counts.entry(e.output_id.clone()).or_insert(0) += 1;
    }
    counts
}
