use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use elicit::batch::{plan_batch, run_batch, BatchOptions, BatchOutcome, BatchPlan};
use elicit::client::{Auth, ChatBackend, HttpBackend, RateLimited, RetryPolicy};
use elicit::config::{load_languages, load_models, load_taxonomy_for};
use elicit::corpus::{builtin_backend, load_external_predictions, read_lines};
use elicit::mock::MockBackend;
use elicit::pipeline;
use elicit::report::{build_table, render, render_plain, Format, TableKind};
use elicit::store::{load_records, read_evaluations, read_json, SummaryFile, EVALUATIONS, OVERLAP, SUMMARY};
use elicit_core::{EvalConfig, LanguageConfig, LidBackend, ModelConfig, OverlapGranularity, QualityWeights};

/// Elicit, evaluate and report on LLM-generated low-resource language text.
#[derive(Parser)]
#[command(name = "elicit", version)]
struct Cli {
    /// Directory holding languages.json and models.json.
    #[arg(long, global = true, env = "ELICIT_CONFIG", default_value = "config")]
    config: PathBuf,
    /// Seed for retry jitter.
    #[arg(long, global = true, env = "ELICIT_SEED", default_value_t = 0)]
    seed: u64,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every prompt for the selected languages and models.
    Generate(GenerateArgs),
    /// Score generated outputs and aggregate per condition.
    Evaluate(EvaluateArgs),
    /// Extract the usable corpus.
    Filter(FilterArgs),
    /// Emit a table from evaluation results.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Taxonomy file, or directory of `<iso>.json` files.
    #[arg(long, default_value = "taxonomy")]
    taxonomy: PathBuf,
    /// Comma-separated ISO codes, or `all`.
    #[arg(long, default_value = "all")]
    languages: String,
    /// Comma-separated model ids, or `all`.
    #[arg(long, default_value = "all")]
    models: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "ELICIT_PARALLELISM", default_value_t = 4)]
    parallelism: usize,
    /// Replay responses from a fixture file instead of calling endpoints.
    #[arg(long)]
    mock: Option<PathBuf>,
    /// Append mock calls to this JSON-lines file.
    #[arg(long, requires = "mock")]
    mock_log: Option<PathBuf>,
    /// Stop after issuing this many new requests.
    #[arg(long)]
    max_requests: Option<usize>,
    /// Overrides `min_request_interval_ms` from models.json.
    #[arg(long, env = "ELICIT_MIN_INTERVAL_MS")]
    min_interval_ms: Option<u64>,
    /// Overrides `max_retries` from models.json.
    #[arg(long, env = "ELICIT_MAX_RETRIES")]
    max_retries: Option<u32>,
    /// Base delay of the exponential backoff.
    #[arg(long, env = "ELICIT_RETRY_BASE_MS", default_value_t = 1000)]
    retry_base_ms: u64,
    /// Per-request HTTP timeout.
    #[arg(long, default_value_t = 120)]
    timeout_secs: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    outputs: PathBuf,
    /// `builtin:<seed-dir>` or `external:<predictions.jsonl>`.
    #[arg(long)]
    lid: String,
    #[arg(long)]
    results: PathBuf,
    /// Minimum tokens for a valid output.
    #[arg(long, env = "ELICIT_THRESHOLD", default_value_t = elicit_core::DEFAULT_VALIDITY_THRESHOLD)]
    threshold: usize,
    /// Weight of language confidence in quality; code-switching gets the rest.
    #[arg(long, env = "ELICIT_CONF_WEIGHT", default_value_t = 0.5)]
    conf_weight: f64,
    /// Reference corpus for memorization checks, as `<iso>=<path>`.
    #[arg(long = "reference", value_name = "ISO=PATH")]
    references: Vec<String>,
    #[arg(long, value_enum, default_value = "per-condition")]
    overlap_granularity: Granularity,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Granularity {
    PerCondition,
    PerOutput,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    outputs: PathBuf,
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    min_quality: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum)]
    kind: TableKind,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Generate(args) => generate(&cli, args),
        Command::Evaluate(args) => evaluate(&cli, args),
        Command::Filter(args) => filter(&cli, args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn select<'a, T>(
    spec: &str,
    all: &'a [T],
    id: impl Fn(&T) -> &str,
    kind: &str,
    flag: &str,
) -> Result<Vec<&'a T>> {
    if spec.trim() == "all" {
        return Ok(all.iter().collect());
    }
    let mut picked = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let Some(item) = all.iter().find(|t| id(t) == name) else {
            let known: Vec<&str> = all.iter().map(&id).collect();
            bail!(
                "unknown {kind} `{name}`\n  hint: use `{flag} all` or a comma-separated subset of: {}",
                known.join(", ")
            );
        };
        if !picked.iter().any(|p: &&T| id(p) == name) {
            picked.push(item);
        }
    }
    if picked.is_empty() {
        bail!("no {kind} selected (`{flag}`)");
    }
    Ok(picked)
}

fn languages_path(cli: &Cli) -> PathBuf {
    cli.config.join("languages.json")
}

fn generate(cli: &Cli, args: &GenerateArgs) -> Result<()> {
    let no_network = std::env::var("NO_NETWORK").is_ok_and(|v| v == "1");
    if no_network && args.mock.is_none() {
        bail!("NO_NETWORK=1 is set; pass `--mock <fixtures.json>`");
    }
    let all_langs = load_languages(&languages_path(cli))?;
    let all_models = load_models(&cli.config.join("models.json"))?;
    let langs = select(&args.languages, &all_langs, |l| &l.iso_code, "language", "--languages")?;
    let mut models: Vec<ModelConfig> =
        select(&args.models, &all_models, |m| &m.model_id, "model", "--models")?
            .into_iter()
            .cloned()
            .collect();
    if let Some(ms) = args.min_interval_ms {
        models.iter_mut().for_each(|m| m.min_request_interval_ms = ms);
    }
    let mut per_language = Vec::new();
    for lang in langs {
        let templates = load_taxonomy_for(&args.taxonomy, &lang.iso_code)?;
        per_language.push((lang.clone(), templates));
    }
    let auth = if args.mock.is_some() { Auth::None } else { Auth::Env };
    let plan = plan_batch(&per_language, &models, auth)?;
    let options = BatchOptions {
        parallelism: args.parallelism,
        max_requests: args.max_requests,
        policy: RetryPolicy {
            max_retries: args
                .max_retries
                .unwrap_or_else(|| models.iter().map(|m| m.max_retries).max().unwrap_or(5)),
            base_delay: Duration::from_millis(args.retry_base_ms),
            seed: cli.seed,
            ..RetryPolicy::default()
        },
    };
    let intervals = BatchPlan::intervals(&models);
    let outcome = match &args.mock {
        Some(path) => {
            let mut mock = MockBackend::load(path)?;
            if let Some(log) = &args.mock_log {
                mock = mock.with_log_file(log.clone());
            }
            run(&plan, &args.out, RateLimited::new(mock, intervals), &options)?
        }
        None => {
            let http = HttpBackend::new(Duration::from_secs(args.timeout_secs))?;
            run(&plan, &args.out, RateLimited::new(http, intervals), &options)?
        }
    };
    let m = &outcome.manifest;
    println!("expected:  {}", m.expected_calls);
    println!("completed: {}", m.completed.len());
    println!("failed:    {}", m.failures.len());
    for f in &m.failures {
        println!("  {}", f.error);
    }
    println!("{} new requests", outcome.requests_issued);
    Ok(())
}

fn run(
    plan: &BatchPlan,
    out: &Path,
    backend: impl ChatBackend,
    options: &BatchOptions,
) -> Result<BatchOutcome> {
    Ok(run_batch(plan, out, &backend, options)?)
}

fn lid_backend(spec: &str) -> Result<Box<dyn LidBackend>> {
    match spec.split_once(':') {
        Some(("builtin", dir)) => Ok(Box::new(
            builtin_backend(Path::new(dir)).context("loading seed corpora")?,
        )),
        Some(("external", file)) => Ok(Box::new(
            load_external_predictions(Path::new(file)).context("loading LID predictions")?,
        )),
        _ => bail!("--lid must be `builtin:<seed-dir>` or `external:<predictions-file>`, got `{spec}`"),
    }
}

fn evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<()> {
    let config = EvalConfig {
        validity_threshold: args.threshold,
        weights: QualityWeights::from_conf_weight(args.conf_weight)?,
    };
    let languages = load_languages(&languages_path(cli))?;
    let backend = lid_backend(&args.lid)?;
    let records = load_records(&args.outputs)?;
    if records.is_empty() {
        bail!("no records in {}", args.outputs.display());
    }
    let mut references = Vec::new();
    for spec in &args.references {
        let Some((iso, path)) = spec.split_once('=') else {
            bail!("--reference expects `<iso>=<path>`, got `{spec}`");
        };
        if !languages.iter().any(|l: &LanguageConfig| l.iso_code == iso) {
            bail!("--reference: language `{iso}` is not configured");
        }
        let name = Path::new(path)
            .file_name()
            .map_or_else(|| path.to_string(), |n| n.to_string_lossy().into_owned());
        references.push((iso.to_string(), name, read_lines(Path::new(path))?));
    }

    let evaluations = pipeline::evaluate_records(&records, &languages, backend.as_ref(), &config)?;
    let summary = pipeline::summarize(&evaluations, backend.as_ref(), &config);
    pipeline::write_results(&args.results, &evaluations, &summary)?;
    let overlap = if references.is_empty() {
        None
    } else {
        let granularity = match args.overlap_granularity {
            Granularity::PerCondition => OverlapGranularity::PerCondition,
            Granularity::PerOutput => OverlapGranularity::PerOutput,
        };
        Some(pipeline::overlap(&records, &references, granularity)?)
    };
    pipeline::write_overlap(&args.results, overlap.as_ref())?;

    println!(
        "{} outputs, {} conditions; LID backend {}; {}",
        evaluations.len(),
        summary.conditions.len(),
        summary.lid_backend,
        summary.quality_formula
    );
    let table = build_table(TableKind::FullSummary, &summary, None)?;
    print!("{}", render_plain(&table));
    if let Some(o) = &overlap {
        let flagged = o
            .languages
            .iter()
            .flat_map(|l| &l.results)
            .filter(|r| r.memorization_suspect)
            .count();
        println!("reference overlap: {flagged} group(s) above cosine {}", o.threshold);
    }
    Ok(())
}

fn filter(cli: &Cli, args: &FilterArgs) -> Result<()> {
    let evaluations = read_evaluations(&args.results.join(EVALUATIONS))
        .context("reading evaluations; run `evaluate` first")?;
    let records = load_records(&args.outputs)?;
    let corpus = pipeline::usable_corpus(&records, &evaluations, args.min_quality)?;
    let languages = load_languages(&languages_path(cli))?;
    let mut isos: Vec<&str> = languages.iter().map(|l| l.iso_code.as_str()).collect();
    for e in &evaluations {
        if !isos.contains(&e.language.as_str()) {
            isos.push(&e.language);
        }
    }
    isos.sort_unstable();
    let totals = pipeline::write_corpus(&args.out, &corpus, &isos)?;
    for (iso, outputs, words) in &totals {
        println!("{iso}: {words} words from {outputs} outputs");
    }
    println!("total: {} words", corpus.total_words);
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let summary: SummaryFile = read_json(&args.results.join(SUMMARY))
        .context("reading summary; run `evaluate` first")?;
    let overlap_path = args.results.join(OVERLAP);
    let overlap = if args.kind == TableKind::Overlap && overlap_path.exists() {
        Some(read_json(&overlap_path)?)
    } else {
        None
    };
    let text = render(&build_table(args.kind, &summary, overlap.as_ref())?, args.format);
    match &args.out {
        Some(path) => elicit::store::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}
