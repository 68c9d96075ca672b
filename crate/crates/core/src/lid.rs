//! Language identification backends and document/sentence fidelity scoring.
//!
//! The built-in backend is a nearest-profile classifier over character
//! trigram cosine with a softmax confidence. It is a desk-scale stand-in;
//! for real measurements run an external classifier offline and ingest its
//! predictions through [`ExternalPredictions`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::LidError;
use crate::text::{cosine_with_norms, normalize_for_profile, segment_sentences, TrigramProfile};

/// Label assigned to text with no usable trigrams.
pub const UNDETERMINED: &str = "und";

/// Sentences shorter than this (in characters, after normalization) take the
/// document-level prediction.
pub const MIN_SENTENCE_CHARS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LidPrediction {
    pub label: String,
    pub confidence: f64,
}

impl LidPrediction {
    pub fn undetermined() -> Self {
        LidPrediction {
            label: UNDETERMINED.to_string(),
            confidence: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub document_prediction: LidPrediction,
    pub is_target: bool,
    pub target_confidence: f64,
    pub sentence_predictions: Vec<LidPrediction>,
    pub code_switch_rate: f64,
}

/// Trigram profiles keyed by LID label, e.g. `hau_Latn`.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageProfileSet {
    profiles: BTreeMap<String, TrigramProfile>,
    norms: BTreeMap<String, f64>,
}

// f64 norms are finite, so equality is total here.
impl Eq for LanguageProfileSet {}

impl LanguageProfileSet {
    /// Labels in lexicographic order.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }

    pub fn profile(&self, label: &str) -> Option<&TrigramProfile> {
        self.profiles.get(label)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Cosine of `profile` against every label, in label order.
    pub fn scores(&self, profile: &TrigramProfile) -> Scores<'_> {
        let norm = profile.norm();
        Scores(
            self.profiles
                .iter()
                .map(|(label, p)| {
                    let c = cosine_with_norms(profile, norm, p, self.norms[label]);
                    (label.as_str(), c)
                })
                .collect(),
        )
    }
}

/// Per-label cosine scores for one text.
#[derive(Clone, Debug, PartialEq)]
pub struct Scores<'a>(Vec<(&'a str, f64)>);

impl<'a> Scores<'a> {
    pub fn as_slice(&self) -> &[(&'a str, f64)] {
        &self.0
    }

    /// Highest score; ties go to the lexicographically smallest label.
    pub fn best(&self) -> Option<(&'a str, f64)> {
        let mut best: Option<(&str, f64)> = None;
        for &(label, s) in &self.0 {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((label, s));
            }
        }
        best
    }

    /// Softmax mass (temperature 1) at `label`; 0 for an unknown label.
    pub fn softmax(&self, label: &str) -> f64 {
        let Some(&(_, at)) = self.0.iter().find(|(l, _)| *l == label) else {
            return 0.0;
        };
        let denom: f64 = self.0.iter().map(|&(_, s)| libm::exp(s - at)).sum();
        1.0 / denom
    }
}

/// Builds one merged profile per label from seed documents.
pub fn train_profiles<S: AsRef<str>>(
    seed_corpora: &BTreeMap<String, Vec<S>>,
) -> Result<LanguageProfileSet, LidError> {
    if seed_corpora.is_empty() {
        return Err(LidError::NoProfiles);
    }
    let mut profiles = BTreeMap::new();
    for (label, docs) in seed_corpora {
        let profile = TrigramProfile::from_documents(docs.iter().map(AsRef::as_ref));
        if profile.is_empty() {
            return Err(LidError::EmptyCorpus(label.clone()));
        }
        profiles.insert(label.clone(), profile);
    }
    let norms = profiles.iter().map(|(l, p)| (l.clone(), p.norm())).collect();
    Ok(LanguageProfileSet { profiles, norms })
}

fn classify_profile(profile: &TrigramProfile, profiles: &LanguageProfileSet) -> LidPrediction {
    if profile.is_empty() {
        return LidPrediction::undetermined();
    }
    let scores = profiles.scores(profile);
    match scores.best() {
        Some((label, _)) => LidPrediction {
            label: label.to_string(),
            confidence: scores.softmax(label),
        },
        None => LidPrediction::undetermined(),
    }
}

/// Nearest-profile label with softmax confidence. Empty text yields
/// `("und", 0)`.
pub fn classify(text: &str, profiles: &LanguageProfileSet) -> LidPrediction {
    classify_profile(&TrigramProfile::from_text(text), profiles)
}

/// What a backend reports for one output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionBundle {
    pub document: LidPrediction,
    /// Confidence the backend assigns to the target label for the whole
    /// document.
    pub target_confidence: f64,
    pub sentences: Vec<LidPrediction>,
}

pub trait LidBackend {
    /// Short identifier printed in reports.
    fn name(&self) -> String;

    fn predict(&self, output_id: &str, text: &str, target: &str)
        -> Result<PredictionBundle, LidError>;
}

/// Trigram-cosine classifier over a trained profile set.
#[derive(Clone, Debug)]
pub struct BuiltinBackend {
    profiles: LanguageProfileSet,
}

impl BuiltinBackend {
    pub fn new(profiles: LanguageProfileSet) -> Self {
        Self { profiles }
    }

    pub fn profiles(&self) -> &LanguageProfileSet {
        &self.profiles
    }
}

impl LidBackend for BuiltinBackend {
    fn name(&self) -> String {
        let labels: Vec<&str> = self.profiles.labels().collect();
        alloc::format!("builtin-trigram[{}]", labels.join(","))
    }

    fn predict(
        &self,
        _output_id: &str,
        text: &str,
        target: &str,
    ) -> Result<PredictionBundle, LidError> {
        let doc_profile = TrigramProfile::from_text(text);
        let document = classify_profile(&doc_profile, &self.profiles);
        let target_confidence = if doc_profile.is_empty() {
            0.0
        } else {
            self.profiles.scores(&doc_profile).softmax(target)
        };
        let sentences = segment_sentences(text)
            .iter()
            .map(|s| {
                if normalize_for_profile(s).chars().count() < MIN_SENTENCE_CHARS {
                    document.clone()
                } else {
                    classify(s, &self.profiles)
                }
            })
            .collect();
        Ok(PredictionBundle {
            document,
            target_confidence,
            sentences,
        })
    }
}

/// One row of an externally produced predictions file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalPredictionRow {
    pub output_id: String,
    pub doc_label: String,
    pub doc_conf: f64,
    #[serde(default)]
    pub sentence_labels: Vec<String>,
    #[serde(default)]
    pub sentence_confs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExternalBundle {
    pub document: LidPrediction,
    pub sentences: Vec<LidPrediction>,
}

/// Pass-through backend over ingested predictions.
///
/// Only the winning document label's confidence is known, so the target
/// confidence is `doc_conf` when that label is the target and 0 otherwise.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExternalPredictions {
    source: String,
    bundles: BTreeMap<String, ExternalBundle>,
}

fn check_conf(output_id: &str, conf: f64) -> Result<(), LidError> {
    if (0.0..=1.0).contains(&conf) {
        Ok(())
    } else {
        Err(LidError::MalformedPrediction {
            output_id: output_id.to_string(),
            reason: alloc::format!("confidence {conf} outside [0, 1]"),
        })
    }
}

impl ExternalPredictions {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            bundles: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, row: ExternalPredictionRow) -> Result<(), LidError> {
        if self.bundles.contains_key(&row.output_id) {
            return Err(LidError::DuplicateOutputId(row.output_id));
        }
        if row.sentence_labels.len() != row.sentence_confs.len() {
            return Err(LidError::MalformedPrediction {
                output_id: row.output_id,
                reason: alloc::format!(
                    "{} sentence labels but {} confidences",
                    row.sentence_labels.len(),
                    row.sentence_confs.len()
                ),
            });
        }
        check_conf(&row.output_id, row.doc_conf)?;
        for &c in &row.sentence_confs {
            check_conf(&row.output_id, c)?;
        }
        let sentences = row
            .sentence_labels
            .into_iter()
            .zip(row.sentence_confs)
            .map(|(label, confidence)| LidPrediction { label, confidence })
            .collect();
        self.bundles.insert(
            row.output_id,
            ExternalBundle {
                document: LidPrediction {
                    label: row.doc_label,
                    confidence: row.doc_conf,
                },
                sentences,
            },
        );
        Ok(())
    }

    pub fn get(&self, output_id: &str) -> Option<&ExternalBundle> {
        self.bundles.get(output_id)
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }
}

impl LidBackend for ExternalPredictions {
    fn name(&self) -> String {
        alloc::format!("external[{}]", self.source)
    }

    fn predict(
        &self,
        output_id: &str,
        _text: &str,
        target: &str,
    ) -> Result<PredictionBundle, LidError> {
        let bundle = self
            .bundles
            .get(output_id)
            .ok_or_else(|| LidError::MissingPrediction(output_id.to_string()))?;
        let target_confidence = if bundle.document.label == target {
            bundle.document.confidence
        } else {
            0.0
        };
        Ok(PredictionBundle {
            document: bundle.document.clone(),
            target_confidence,
            sentences: bundle.sentences.clone(),
        })
    }
}

/// Document-level identity and sentence-level code-switching rate.
pub fn assess_fidelity(
    output_id: &str,
    text: &str,
    target: &str,
    backend: &dyn LidBackend,
) -> Result<FidelityResult, LidError> {
    let bundle = backend.predict(output_id, text, target)?;
    let off_target = bundle
        .sentences
        .iter()
        .filter(|p| p.label != target)
        .count();
    let code_switch_rate = if bundle.sentences.is_empty() {
        0.0
    } else {
        off_target as f64 / bundle.sentences.len() as f64
    };
    Ok(FidelityResult {
        is_target: bundle.document.label == target,
        document_prediction: bundle.document,
        target_confidence: bundle.target_confidence,
        sentence_predictions: bundle.sentences,
        code_switch_rate,
    })
}
