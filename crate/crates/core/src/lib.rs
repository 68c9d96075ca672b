#![no_std]

//! Core of the elicitation pipeline: prompt taxonomy rendering, Unicode text
//! statistics, trigram language identification, and the evaluation and
//! aggregation framework for LLM-generated low-resource language text.
//!
//! This crate depends only on [`core`] and [`alloc`]. File formats, HTTP,
//! batch execution and the command line live in the `elicit` crate.

extern crate alloc;

pub mod error;
pub mod eval;
pub mod lid;
pub mod record;
pub mod taxonomy;
pub mod text;

pub use error::{EvalError, LidError, TaxonomyError, TextError};
pub use eval::{
    aggregate, composite_quality, evaluate_output, filter_usable, reference_overlap,
    ConditionSummary, EvalConfig, EvaluationRecord, OverlapGranularity, OverlapResult,
    QualityWeights, UsableCorpus, UsableEntry, DEFAULT_VALIDITY_THRESHOLD,
    MEMORIZATION_THRESHOLD,
};
pub use lid::{
    assess_fidelity, classify, train_profiles, BuiltinBackend, ExternalPredictionRow,
    ExternalPredictions, FidelityResult, LanguageProfileSet, LidBackend, LidPrediction,
    PredictionBundle,
};
pub use record::{output_id, ConditionKey, GenerationRecord, SamplingParams};
pub use taxonomy::{
    render_prompt, validate_taxonomy, LanguageConfig, ModelConfig, PromptInstance,
    PromptTemplate, TaskType, ValidationReport,
};
pub use text::{
    cosine, diacritic_stats, diversity, ngram_repetition, segment_sentences, sentence_repetition,
    tokenize, trigram_profile, DiacriticStats, DiversityStats, TokenSequence, TrigramProfile,
};
