use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidNgramOrder(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaxonomyError {
    #[error("no templates")]
    Empty,
    #[error("duplicate template id `{id}` (entries {first} and {second})")]
    DuplicateId {
        id: String,
        first: usize,
        second: usize,
    },
    #[error("template `{template_id}`: placeholder `{{{placeholder}}}` cannot be resolved")]
    UnresolvablePlaceholder {
        template_id: String,
        placeholder: String,
    },
    #[error("invalid configuration for `{subject}`: {reason}")]
    InvalidConfig { subject: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LidError {
    #[error("seed corpus for `{0}` has no usable documents")]
    EmptyCorpus(String),
    #[error("no seed corpora supplied")]
    NoProfiles,
    #[error("duplicate prediction for output `{0}`")]
    DuplicateOutputId(String),
    #[error("malformed prediction for output `{output_id}`: {reason}")]
    MalformedPrediction { output_id: String, reason: String },
    #[error("no prediction available for output `{0}`")]
    MissingPrediction(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("quality weights must be nonnegative and sum to 1 (got {conf} + {code_switch})")]
    InvalidWeights { conf: f64, code_switch: f64 },
    #[error("reference corpus is empty")]
    EmptyReference,
    #[error("duplicate output id `{0}`")]
    DuplicateOutputId(String),
    #[error("generation record `{generation}` paired with evaluation `{evaluation}`")]
    MismatchedPair {
        generation: String,
        evaluation: String,
    },
    #[error("language identification failed for `{output_id}`: {source}")]
    Lid {
        output_id: String,
        #[source]
        source: LidError,
    },
    #[error(transparent)]
    Text(#[from] TextError),
}
