//! Resumable parallel generation over languages × models × templates.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use elicit_core::{render_prompt, LanguageConfig, ModelConfig, PromptTemplate, TaxonomyError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::{build_request, execute, Auth, ChatBackend, ChatRequest, ClientError, ExecError, RetryPolicy};
use crate::store::{record_path, write_json_atomic, write_record, StoreError, MANIFEST};

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("duplicate output_id `{0}` in plan")]
    DuplicateOutput(String),
    #[error("parallelism must be at least 1")]
    ZeroParallelism,
}

/// Every request a run is expected to make, in a fixed order.
#[derive(Clone, Debug)]
pub struct BatchPlan {
    pub models: Vec<String>,
    pub languages: Vec<String>,
    pub requests: Vec<ChatRequest>,
}

impl BatchPlan {
    /// Minimum spacing per endpoint URL, from the model configurations.
    pub fn intervals(models: &[ModelConfig]) -> HashMap<String, Duration> {
        let mut map: HashMap<String, Duration> = HashMap::new();
        for m in models {
            let d = Duration::from_millis(m.min_request_interval_ms);
            let e = map.entry(m.endpoint_url.clone()).or_default();
            *e = (*e).max(d);
        }
        map
    }
}

/// Renders every template for every language and model. Templates are
/// given per language since each language may carry its own taxonomy.
pub fn plan_batch(
    languages: &[(LanguageConfig, Vec<PromptTemplate>)],
    models: &[ModelConfig],
    auth: Auth,
) -> Result<BatchPlan, BatchError> {
    let mut requests = Vec::new();
    let mut seen = BTreeSet::new();
    for model in models {
        for (lang, templates) in languages {
            for template in templates {
                let instance = render_prompt(template, lang)?;
                let request = build_request(&instance, model, lang, auth)?;
                if !seen.insert(request.output_id().to_string()) {
                    return Err(BatchError::DuplicateOutput(request.output_id().to_string()));
                }
                requests.push(request);
            }
        }
    }
    Ok(BatchPlan {
        models: models.iter().map(|m| m.model_id.clone()).collect(),
        languages: languages.iter().map(|(l, _)| l.iso_code.clone()).collect(),
        requests,
    })
}

#[derive(Clone, Debug)]
pub struct BatchOptions {
    pub parallelism: usize,
    /// Stop issuing new requests after this many (simulates an interrupted
    /// run). Retries of an issued request do not count.
    pub max_requests: Option<usize>,
    pub policy: RetryPolicy,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            parallelism: 4,
            max_requests: None,
            policy: RetryPolicy::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureEntry {
    pub output_id: String,
    pub error: ExecError,
}

/// Written to `manifest.json` at the end of every run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub models: Vec<String>,
    pub languages: Vec<String>,
    pub expected_calls: usize,
    /// Output ids with a record on disk, sorted.
    pub completed: Vec<String>,
    /// Calls that failed during the latest run, sorted by output id.
    pub failures: Vec<FailureEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchOutcome {
    pub manifest: RunManifest,
    /// Requests issued by this invocation (existing records are skipped).
    pub requests_issued: usize,
}

/// Executes the plan, skipping outputs whose record already exists. Each
/// successful call is persisted atomically as soon as it completes, so an
/// interrupted run can be resumed by invoking this again.
pub fn run_batch(
    plan: &BatchPlan,
    out_dir: &Path,
    backend: &dyn ChatBackend,
    options: &BatchOptions,
) -> Result<BatchOutcome, BatchError> {
    if options.parallelism == 0 {
        return Err(BatchError::ZeroParallelism);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| StoreError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let pending: Vec<&ChatRequest> = plan
        .requests
        .iter()
        .filter(|r| !record_path(out_dir, r.output_id()).exists())
        .collect();
    log::info!(
        "{} of {} calls pending in {}",
        pending.len(),
        plan.requests.len(),
        out_dir.display()
    );

    let next = AtomicUsize::new(0);
    let issued = AtomicUsize::new(0);
    let failures = Mutex::new(Vec::new());
    let store_error: Mutex<Option<StoreError>> = Mutex::new(None);
    let budget = options.max_requests.unwrap_or(usize::MAX);

    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        let Some(request) = pending.get(i) else { break };
        if issued
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| (n < budget).then_some(n + 1))
            .is_err()
        {
            break;
        }
        if store_error.lock().unwrap_or_else(|e| e.into_inner()).is_some() {
            break;
        }
        match execute(request, &options.policy, backend) {
            Ok(record) => {
                if let Err(e) = write_record(out_dir, &record) {
                    store_error
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .get_or_insert(e);
                }
            }
            Err(error) => {
                log::warn!("{error}");
                failures.lock().unwrap_or_else(|e| e.into_inner()).push(FailureEntry {
                    output_id: error.output_id().to_string(),
                    error,
                });
            }
        }
    };
    let workers = options.parallelism.min(pending.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(worker);
        }
    });
    if let Some(e) = store_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e.into());
    }

    let mut completed: Vec<String> = plan
        .requests
        .iter()
        .map(|r| r.output_id().to_string())
        .filter(|id| record_path(out_dir, id).exists())
        .collect();
    completed.sort();
    let mut failures = failures.into_inner().unwrap_or_else(|e| e.into_inner());
    failures.sort_by(|a, b| a.output_id.cmp(&b.output_id));
    let manifest = RunManifest {
        models: plan.models.clone(),
        languages: plan.languages.clone(),
        expected_calls: plan.requests.len(),
        completed,
        failures,
    };
    write_json_atomic(&out_dir.join(MANIFEST), &manifest)?;
    Ok(BatchOutcome {
        manifest,
        requests_issued: issued.into_inner(),
    })
}
