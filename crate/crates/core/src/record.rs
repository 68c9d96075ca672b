use alloc::format;
use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::taxonomy::TaskType;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: u32,
}

/// One chat-completion call and its response. This is the unit persisted in
/// the run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub output_id: String,
    pub prompt_id: String,
    pub model_id: String,
    pub language: String,
    pub task_type: TaskType,
    pub rendered_prompt: String,
    pub system_prompt: String,
    pub sampling: SamplingParams,
    pub response_text: String,
    pub finish_reason: String,
    /// RFC 3339, UTC.
    pub request_timestamp: String,
    pub latency_ms: u64,
    pub attempt_count: u32,
}

impl GenerationRecord {
    pub fn condition(&self) -> ConditionKey {
        ConditionKey {
            model_id: self.model_id.clone(),
            language: self.language.clone(),
            task_type: self.task_type,
        }
    }
}

/// `<model_id>/<iso_code>/<task_type>/<prompt_id>`
pub fn output_id(model_id: &str, iso_code: &str, task_type: TaskType, prompt_id: &str) -> String {
    format!("{model_id}/{iso_code}/{task_type}/{prompt_id}")
}

/// One experimental cell. Orders by model, then language, then task type.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConditionKey {
    pub model_id: String,
    pub language: String,
    pub task_type: TaskType,
}

impl fmt::Display for ConditionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.model_id, self.language, self.task_type)
    }
}
