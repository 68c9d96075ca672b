//! Per-output evaluation, per-condition aggregation, reference overlap and
//! usable-corpus filtering.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::lid::{assess_fidelity, FidelityResult, LidBackend};
use crate::record::{ConditionKey, GenerationRecord};
use crate::taxonomy::{LanguageConfig, TaskType};
use crate::text::{
    cosine, diacritic_stats, diversity, ngram_repetition, segment_sentences, sentence_repetition,
    tokenize, DiacriticStats, DiversityStats, TrigramProfile,
};

pub const DEFAULT_VALIDITY_THRESHOLD: usize = 20;

/// Cosine above which a group is flagged as a possible memorization of the
/// reference corpus.
pub const MEMORIZATION_THRESHOLD: f64 = 0.15;

const REPETITION_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityWeights {
    pub conf: f64,
    pub code_switch: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        Self {
            conf: 0.5,
            code_switch: 0.5,
        }
    }
}

impl QualityWeights {
    /// Weights for `w·conf + (1 − w)·(1 − code_switch)`.
    pub fn from_conf_weight(w: f64) -> Result<Self, EvalError> {
        let weights = Self {
            conf: w,
            code_switch: 1.0 - w,
        };
        weights.check()?;
        Ok(weights)
    }

    pub fn check(&self) -> Result<(), EvalError> {
        let ok = self.conf >= 0.0
            && self.code_switch >= 0.0
            && libm::fabs(self.conf + self.code_switch - 1.0) <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(EvalError::InvalidWeights {
                conf: self.conf,
                code_switch: self.code_switch,
            })
        }
    }

    /// Human-readable formula, printed alongside reports.
    pub fn formula(&self) -> String {
        alloc::format!(
            "quality = {}*lang_conf + {}*(1 - code_switch)",
            self.conf,
            self.code_switch
        )
    }
}

pub fn composite_quality(
    lang_conf: f64,
    code_switch: f64,
    weights: QualityWeights,
) -> Result<f64, EvalError> {
    weights.check()?;
    let q = weights.conf * lang_conf + weights.code_switch * (1.0 - code_switch);
    Ok(q.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Minimum token count for a valid output (inclusive).
    pub validity_threshold: usize,
    pub weights: QualityWeights,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            validity_threshold: DEFAULT_VALIDITY_THRESHOLD,
            weights: QualityWeights::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub output_id: String,
    pub model_id: String,
    pub language: String,
    pub task_type: TaskType,
    pub word_count: usize,
    pub is_valid: bool,
    pub diversity: DiversityStats,
    pub fidelity: FidelityResult,
    pub repetition_4gram: f64,
    pub repetition_sentence: f64,
    /// Present only for languages with tonal orthography.
    pub diacritics: Option<DiacriticStats>,
    pub quality: f64,
}

impl EvaluationRecord {
    pub fn condition(&self) -> ConditionKey {
        ConditionKey {
            model_id: self.model_id.clone(),
            language: self.language.clone(),
            task_type: self.task_type,
        }
    }

    /// Valid and identified as the target language.
    pub fn is_usable(&self) -> bool {
        self.is_valid && self.fidelity.is_target
    }
}

pub fn evaluate_output(
    record: &GenerationRecord,
    lang: &LanguageConfig,
    backend: &dyn LidBackend,
    config: &EvalConfig,
) -> Result<EvaluationRecord, EvalError> {
    let text = record.response_text.as_str();
    let tokens = tokenize(text);
    let fidelity = assess_fidelity(&record.output_id, text, &lang.target_lid_label, backend)
        .map_err(|source| EvalError::Lid {
            output_id: record.output_id.clone(),
            source,
        })?;
    let quality = composite_quality(
        fidelity.target_confidence,
        fidelity.code_switch_rate,
        config.weights,
    )?;
    Ok(EvaluationRecord {
        output_id: record.output_id.clone(),
        model_id: record.model_id.clone(),
        language: record.language.clone(),
        task_type: record.task_type,
        word_count: tokens.len(),
        is_valid: tokens.len() >= config.validity_threshold,
        diversity: diversity(tokens.as_slice()),
        repetition_4gram: ngram_repetition(tokens.as_slice(), REPETITION_ORDER)?,
        repetition_sentence: sentence_repetition(&segment_sentences(text)),
        diacritics: lang.tonal_orthography.then(|| diacritic_stats(text)),
        fidelity,
        quality,
    })
}

/// Aggregate over one (model, language, task type) cell. Means run over all
/// outputs in the cell, valid or not.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub model_id: String,
    pub language: String,
    pub task_type: TaskType,
    pub n_outputs: usize,
    pub valid_pct: f64,
    pub avg_words: f64,
    pub doc_fidelity_pct: f64,
    pub avg_ttr: f64,
    pub avg_hapax: f64,
    pub avg_vocab: f64,
    pub avg_code_switch: f64,
    pub avg_lang_conf: f64,
    pub avg_quality: f64,
    pub usable_words_per_call: f64,
    pub diacritic_presence_pct: Option<f64>,
    pub avg_diacritic_ratio: Option<f64>,
}

impl ConditionSummary {
    pub fn key(&self) -> ConditionKey {
        ConditionKey {
            model_id: self.model_id.clone(),
            language: self.language.clone(),
            task_type: self.task_type,
        }
    }
}

fn mean(records: &[&EvaluationRecord], f: impl Fn(&EvaluationRecord) -> f64) -> f64 {
    records.iter().map(|r| f(r)).sum::<f64>() / records.len() as f64
}

fn pct(records: &[&EvaluationRecord], f: impl Fn(&EvaluationRecord) -> bool) -> f64 {
    100.0 * records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64
}

fn summarize(key: ConditionKey, mut cell: Vec<&EvaluationRecord>) -> ConditionSummary {
    // fixed summation order regardless of input order
    cell.sort_by(|a, b| a.output_id.cmp(&b.output_id));
    let cell = cell.as_slice();
    let words = |r: &EvaluationRecord| r.word_count as f64;
    let with_diacritics: Vec<&EvaluationRecord> =
        cell.iter().copied().filter(|r| r.diacritics.is_some()).collect();
    let (diacritic_presence_pct, avg_diacritic_ratio) = if with_diacritics.is_empty() {
        (None, None)
    } else {
        let d = |r: &EvaluationRecord| r.diacritics.unwrap_or_default();
        (
            Some(pct(&with_diacritics, |r| d(r).has_diacritics)),
            Some(mean(&with_diacritics, |r| d(r).diacritic_ratio)),
        )
    };
    ConditionSummary {
        n_outputs: cell.len(),
        valid_pct: pct(cell, |r| r.is_valid),
        avg_words: mean(cell, words),
        doc_fidelity_pct: pct(cell, |r| r.fidelity.is_target),
        avg_ttr: mean(cell, |r| r.diversity.ttr),
        avg_hapax: mean(cell, |r| r.diversity.hapax_ratio),
        avg_vocab: mean(cell, |r| r.diversity.vocab_size as f64),
        avg_code_switch: mean(cell, |r| r.fidelity.code_switch_rate),
        avg_lang_conf: mean(cell, |r| r.fidelity.target_confidence),
        avg_quality: mean(cell, |r| r.quality),
        usable_words_per_call: mean(cell, |r| if r.is_usable() { words(r) } else { 0.0 }),
        diacritic_presence_pct,
        avg_diacritic_ratio,
        model_id: key.model_id,
        language: key.language,
        task_type: key.task_type,
    }
}

/// One summary per occupied condition cell, sorted by condition key.
pub fn aggregate(records: &[EvaluationRecord]) -> Vec<ConditionSummary> {
    let mut cells: BTreeMap<ConditionKey, Vec<&EvaluationRecord>> = BTreeMap::new();
    for r in records {
        cells.entry(r.condition()).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|(key, cell)| summarize(key, cell))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapGranularity {
    PerCondition,
    PerOutput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapResult {
    pub key: String,
    pub cosine: f64,
    pub memorization_suspect: bool,
}

/// Trigram cosine between generated text (grouped per condition or per
/// output) and a reference corpus.
pub fn reference_overlap<S: AsRef<str>>(
    generated: &[GenerationRecord],
    reference_corpus: &[S],
    granularity: OverlapGranularity,
) -> Result<Vec<OverlapResult>, EvalError> {
    let reference = TrigramProfile::from_documents(reference_corpus.iter().map(AsRef::as_ref));
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let mut groups: BTreeMap<String, TrigramProfile> = BTreeMap::new();
    let mut ordered: Vec<&GenerationRecord> = generated.iter().collect();
    ordered.sort_by(|a, b| a.output_id.cmp(&b.output_id));
    for r in ordered {
        let key = match granularity {
            OverlapGranularity::PerCondition => r.condition().to_string(),
            OverlapGranularity::PerOutput => r.output_id.clone(),
        };
        groups
            .entry(key)
            .or_default()
            .merge(&TrigramProfile::from_text(&r.response_text));
    }
    Ok(groups
        .into_iter()
        .map(|(key, profile)| {
            let c = cosine(&profile, &reference);
            OverlapResult {
                key,
                cosine: c,
                memorization_suspect: c > MEMORIZATION_THRESHOLD,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UsableEntry {
    pub output_id: String,
    pub model_id: String,
    pub language: String,
    pub task_type: TaskType,
    pub word_count: usize,
    pub quality: f64,
    pub text: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UsableCorpus {
    pub entries: Vec<UsableEntry>,
    pub total_words: usize,
}

impl UsableCorpus {
    pub fn words_for(&self, language: &str) -> usize {
        self.entries
            .iter()
            .filter(|e| e.language == language)
            .map(|e| e.word_count)
            .sum()
    }

    pub fn for_language<'a>(&'a self, language: &'a str) -> impl Iterator<Item = &'a UsableEntry> {
        self.entries.iter().filter(move |e| e.language == language)
    }
}

/// Keeps outputs that are valid and identified as the target language, and,
/// if `min_quality` is given, whose quality reaches it. Entries come out in
/// output id order.
pub fn filter_usable(
    records: &[(GenerationRecord, EvaluationRecord)],
    min_quality: Option<f64>,
) -> Result<UsableCorpus, EvalError> {
    let mut seen = BTreeSet::new();
    for (g, e) in records {
        if g.output_id != e.output_id {
            return Err(EvalError::MismatchedPair {
                generation: g.output_id.clone(),
                evaluation: e.output_id.clone(),
            });
        }
        if !seen.insert(g.output_id.as_str()) {
            return Err(EvalError::DuplicateOutputId(g.output_id.clone()));
        }
    }
    let mut entries: Vec<UsableEntry> = records
        .iter()
        .filter(|(_, e)| e.is_usable() && min_quality.is_none_or(|q| e.quality >= q))
        .map(|(g, e)| UsableEntry {
            output_id: g.output_id.clone(),
            model_id: g.model_id.clone(),
            language: g.language.clone(),
            task_type: g.task_type,
            word_count: e.word_count,
            quality: e.quality,
            text: g.response_text.clone(),
        })
        .collect();
    entries.sort_by(|a, b| a.output_id.cmp(&b.output_id));
    let total_words = entries.iter().map(|e| e.word_count).sum();
    Ok(UsableCorpus {
        entries,
        total_words,
    })
}
