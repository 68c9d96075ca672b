//! Prompt taxonomy, language and model configuration, and placeholder
//! rendering.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::TaxonomyError;

/// Elicitation task type.
///
/// Variants are declared in the lexicographic order of their serialized
/// names so that the derived `Ord` matches report sort order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Constrained,
    Creative,
    Dialogue,
    Functional,
    Structured,
    TopicSwitch,
}

impl TaskType {
    pub const ALL: [TaskType; 6] = [
        TaskType::Constrained,
        TaskType::Creative,
        TaskType::Dialogue,
        TaskType::Functional,
        TaskType::Structured,
        TaskType::TopicSwitch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Constrained => "constrained",
            TaskType::Creative => "creative",
            TaskType::Dialogue => "dialogue",
            TaskType::Functional => "functional",
            TaskType::Structured => "structured",
            TaskType::TopicSwitch => "topic_switch",
        }
    }

    /// Template id prefix (`cg_01` is a constrained template).
    pub fn id_prefix(self) -> &'static str {
        match self {
            TaskType::Constrained => "cg",
            TaskType::Creative => "cw",
            TaskType::Dialogue => "dl",
            TaskType::Functional => "ft",
            TaskType::Structured => "sk",
            TaskType::TopicSwitch => "ts",
        }
    }

    pub fn from_id_prefix(prefix: &str) -> Option<TaskType> {
        TaskType::ALL.into_iter().find(|t| t.id_prefix() == prefix)
    }

    pub fn parse(name: &str) -> Option<TaskType> {
        TaskType::ALL.into_iter().find(|t| t.as_str() == name)
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub task_type: TaskType,
    pub subtask: String,
    #[serde(rename = "template")]
    pub template_text: String,
}

impl PromptTemplate {
    pub fn required_placeholders(&self) -> BTreeSet<String> {
        placeholders(&self.template_text)
            .map(|p| p.name.to_string())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Placeholder<'a> {
    /// Byte range of `{name}` in the source text.
    pub start: usize,
    pub end: usize,
    pub name: &'a str,
}

fn is_placeholder_char(b: u8) -> bool {
    b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_'
}

/// Occurrences of `{[a-z_0-9]+}` in `text`, left to right.
pub fn placeholders(text: &str) -> impl Iterator<Item = Placeholder<'_>> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    core::iter::from_fn(move || {
        while pos < bytes.len() {
            let open = pos + bytes[pos..].iter().position(|&b| b == b'{')?;
            let len = bytes[open + 1..]
                .iter()
                .take_while(|&&b| is_placeholder_char(b))
                .count();
            let close = open + 1 + len;
            if len > 0 && bytes.get(close) == Some(&b'}') {
                pos = close + 1;
                return Some(Placeholder {
                    start: open,
                    end: close + 1,
                    name: &text[open + 1..close],
                });
            }
            pos = open + 1;
        }
        None
    })
}

/// `language`, `language_culture`, `colonial_language` or `word_list_<k>`.
pub fn is_known_placeholder(name: &str) -> bool {
    match name {
        "language" | "language_culture" | "colonial_language" => true,
        _ => name
            .strip_prefix("word_list_")
            .is_some_and(|k| !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit())),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageConfig {
    pub name: String,
    pub iso_code: String,
    pub target_lid_label: String,
    pub culture_name: String,
    pub colonial_language: String,
    pub tonal_orthography: bool,
    #[serde(default)]
    pub word_lists: BTreeMap<String, Vec<String>>,
}

impl LanguageConfig {
    pub fn validate(&self) -> Result<(), TaxonomyError> {
        let fail = |reason: &str| {
            Err(TaxonomyError::InvalidConfig {
                subject: self.iso_code.clone(),
                reason: reason.to_string(),
            })
        };
        if self.iso_code.is_empty() || self.iso_code.contains('/') {
            return fail("iso_code must be nonempty and contain no `/`");
        }
        if self.target_lid_label.is_empty() {
            return fail("target_lid_label is empty");
        }
        if self.colonial_language.is_empty() {
            return fail("colonial_language is empty");
        }
        Ok(())
    }

    /// Value substituted for `{name}`, if this configuration provides one.
    pub fn resolve(&self, name: &str) -> Option<String> {
        match name {
            "language" => Some(self.name.clone()),
            "language_culture" => Some(self.culture_name.clone()),
            "colonial_language" => Some(self.colonial_language.clone()),
            _ if is_known_placeholder(name) => self.word_lists.get(name).map(|w| w.join(", ")),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model_id: String,
    pub endpoint_url: String,
    pub api_key_env_var: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_output_tokens: u32,
    pub system_prompt_template: String,
    pub max_retries: u32,
    #[serde(default)]
    pub min_request_interval_ms: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), TaxonomyError> {
        let reason = if self.model_id.is_empty() || self.model_id.contains('/') {
            "model_id must be nonempty and contain no `/`"
        } else if self.temperature.is_nan() || self.temperature < 0.0 {
            "temperature must be >= 0"
        } else if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            "top_p must be in (0, 1]"
        } else if self.max_output_tokens == 0 {
            "max_output_tokens must be > 0"
        } else {
            return Ok(());
        };
        Err(TaxonomyError::InvalidConfig {
            subject: self.model_id.clone(),
            reason: reason.to_string(),
        })
    }
}

/// Rejects an empty set or repeated ids.
pub fn check_templates(templates: &[PromptTemplate]) -> Result<(), TaxonomyError> {
    if templates.is_empty() {
        return Err(TaxonomyError::Empty);
    }
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, t) in templates.iter().enumerate() {
        if let Some(&first) = seen.get(t.id.as_str()) {
            return Err(TaxonomyError::DuplicateId {
                id: t.id.clone(),
                first,
                second: i,
            });
        }
        seen.insert(&t.id, i);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnknownPlaceholder {
    pub template_id: String,
    pub placeholder: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixMismatch {
    pub template_id: String,
    pub task_type: TaskType,
    pub expected_prefix: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub counts: BTreeMap<TaskType, usize>,
    pub unknown_placeholders: Vec<UnknownPlaceholder>,
    pub prefix_mismatches: Vec<PrefixMismatch>,
    pub ok: bool,
}

/// Checks placeholders and id prefixes. Uneven per-type counts are reported
/// but do not make the report fail.
pub fn validate_taxonomy(templates: &[PromptTemplate]) -> ValidationReport {
    let mut counts: BTreeMap<TaskType, usize> = TaskType::ALL.iter().map(|&t| (t, 0)).collect();
    let mut unknown_placeholders = Vec::new();
    let mut prefix_mismatches = Vec::new();

    for t in templates {
        *counts.entry(t.task_type).or_default() += 1;
        for name in t.required_placeholders() {
            if !is_known_placeholder(&name) {
                unknown_placeholders.push(UnknownPlaceholder {
                    template_id: t.id.clone(),
                    placeholder: name,
                });
            }
        }
        let well_formed = t.id.split_once('_').is_some_and(|(prefix, num)| {
            prefix == t.task_type.id_prefix()
                && num.len() == 2
                && num.bytes().all(|b| b.is_ascii_digit())
        });
        if !well_formed {
            prefix_mismatches.push(PrefixMismatch {
                template_id: t.id.clone(),
                task_type: t.task_type,
                expected_prefix: format!("{}_NN", t.task_type.id_prefix()),
            });
        }
    }

    let ok = unknown_placeholders.is_empty() && prefix_mismatches.is_empty();
    ValidationReport {
        counts,
        unknown_placeholders,
        prefix_mismatches,
        ok,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub template_id: String,
    pub task_type: TaskType,
    pub iso_code: String,
    pub rendered_text: String,
}

/// Substitutes every placeholder in `text` from `lang`. On failure returns
/// the first placeholder that could not be resolved.
pub fn render_text(text: &str, lang: &LanguageConfig) -> Result<String, String> {
    let mut out = String::with_capacity(text.len() + 64);
    let mut last = 0;
    for p in placeholders(text) {
        let value = lang.resolve(p.name).ok_or_else(|| p.name.to_string())?;
        out.push_str(&text[last..p.start]);
        out.push_str(&value);
        last = p.end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

pub fn render_prompt(
    template: &PromptTemplate,
    lang: &LanguageConfig,
) -> Result<PromptInstance, TaxonomyError> {
    let rendered_text = render_text(&template.template_text, lang).map_err(|placeholder| {
        TaxonomyError::UnresolvablePlaceholder {
            template_id: template.id.clone(),
            placeholder,
        }
    })?;
    Ok(PromptInstance {
        template_id: template.id.clone(),
        task_type: template.task_type,
        iso_code: lang.iso_code.clone(),
        rendered_text,
    })
}
