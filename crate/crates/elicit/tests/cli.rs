mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::root;
use elicit::store::read_evaluations;

fn elicit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elicit"))
        .current_dir(root())
        .env_remove("NO_NETWORK")
        .env_remove("ELICIT_CONFIG")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn generate(out: &Path, extra: &[&str]) -> Output {
    let out = out.to_str().unwrap();
    let mut args = vec![
        "generate",
        "--mock",
        "fixtures/mock_responses.json",
        "--out",
        out,
        "--min-interval-ms",
        "0",
        "--retry-base-ms",
        "0",
    ];
    args.extend_from_slice(extra);
    elicit(&args)
}

fn evaluate(outputs: &Path, results: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "evaluate",
        "--outputs",
        outputs.to_str().unwrap(),
        "--lid",
        "builtin:seeds",
        "--results",
        results.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    elicit(&args)
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = dir.path().join("outputs");
    let results = dir.path().join("results");

    let g = generate(&outputs, &["--languages", "hau,fon", "--models", "all"]);
    assert!(g.status.success(), "{}", stderr(&g));
    let text = stdout(&g);
    assert!(text.contains("expected:  600"), "{text}");
    assert!(text.contains("completed: 600"));
    assert!(text.contains("600 new requests"));

    let again = generate(&outputs, &[]);
    assert!(again.status.success());
    assert!(stdout(&again).contains("0 new requests"));

    let e = evaluate(&outputs, &results, &["--reference", "hau=fixtures/reference/hau.txt"]);
    assert!(e.status.success(), "{}", stderr(&e));
    assert!(stdout(&e).contains("600 outputs, 24 conditions"));
    for f in ["evaluations.jsonl", "summary.json", "summary.csv", "overlap.json"] {
        assert!(results.join(f).exists(), "{f}");
    }
    let summary = std::fs::read(results.join("summary.json")).unwrap();

    // threshold changes validity and nothing else about the records
    let strict = dir.path().join("strict");
    assert!(evaluate(&outputs, &strict, &["--threshold", "30"]).status.success());
    let loose = read_evaluations(&results.join("evaluations.jsonl")).unwrap();
    let tight = read_evaluations(&strict.join("evaluations.jsonl")).unwrap();
    assert_eq!(loose.len(), tight.len());
    let mut changed = 0;
    for (a, b) in loose.iter().zip(&tight) {
        assert_eq!(b.is_valid, b.word_count >= 30);
        assert_eq!(a.quality, b.quality);
        changed += usize::from(a.is_valid != b.is_valid);
    }
    assert!(changed > 0);
    assert_ne!(std::fs::read(strict.join("summary.json")).unwrap(), summary);

    // rerun is idempotent
    assert!(evaluate(&outputs, &results, &["--reference", "hau=fixtures/reference/hau.txt"]).status.success());
    assert_eq!(std::fs::read(results.join("summary.json")).unwrap(), summary);

    // filter bookkeeping
    let corpus = dir.path().join("corpus");
    let f = elicit(&[
        "filter",
        "--outputs",
        outputs.to_str().unwrap(),
        "--results",
        results.to_str().unwrap(),
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert!(f.status.success(), "{}", stderr(&f));
    let usable_hau: usize = loose
        .iter()
        .filter(|e| e.language == "hau" && e.is_usable())
        .map(|e| e.word_count)
        .sum();
    assert!(stdout(&f).contains(&format!("hau: {usable_hau} words")), "{}", stdout(&f));
    let provenance = std::fs::read_to_string(corpus.join("hau.provenance.jsonl")).unwrap();
    assert_eq!(
        provenance.lines().count(),
        loose.iter().filter(|e| e.language == "hau" && e.is_usable()).count()
    );

    let q = elicit(&[
        "filter",
        "--outputs",
        outputs.to_str().unwrap(),
        "--results",
        results.to_str().unwrap(),
        "--out",
        dir.path().join("q").to_str().unwrap(),
        "--min-quality",
        "0.6",
    ]);
    assert!(q.status.success());
    let kept = loose.iter().filter(|e| e.is_usable() && e.quality >= 0.6).count();
    let lines: usize = ["hau", "fon"]
        .iter()
        .map(|l| {
            std::fs::read_to_string(dir.path().join(format!("q/{l}.provenance.jsonl")))
                .unwrap()
                .lines()
                .count()
        })
        .sum();
    assert_eq!(lines, kept);
    assert!(kept > 0 && kept < loose.iter().filter(|e| e.is_usable()).count());

    // reports
    let r = |kind: &str, format: &str| {
        elicit(&["report", "--results", results.to_str().unwrap(), "--kind", kind, "--format", format])
    };
    let eff = r("efficiency", "csv");
    assert!(eff.status.success());
    let eff = stdout(&eff);
    assert!(eff.starts_with("model,task_type,language,"));
    assert!(eff.lines().next().unwrap().ends_with("usable_words_per_call"));
    let tex = stdout(&r("full_summary", "latex"));
    assert_eq!(tex.lines().filter(|l| l.ends_with(" \\\\") && !l.starts_with("Model")).count(), 24);
    assert_eq!(stdout(&r("full_summary", "latex")), tex);
    assert!(r("overlap", "json").status.success());
    let bad = r("histogram", "csv");
    assert!(!bad.status.success());
}

#[test]
fn filter_creates_empty_corpus_for_language_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = dir.path().join("outputs");
    let results = dir.path().join("results");
    let g = generate(&outputs, &["--languages", "hau", "--models", "gpt-4o-mini"]);
    assert!(stdout(&g).contains("expected:  150"));
    assert!(evaluate(&outputs, &results, &[]).status.success());
    let corpus = dir.path().join("corpus");
    let f = elicit(&[
        "filter",
        "--outputs",
        outputs.to_str().unwrap(),
        "--results",
        results.to_str().unwrap(),
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert!(f.status.success());
    assert!(stdout(&f).contains("fon: 0 words from 0 outputs"));
    assert_eq!(std::fs::read_to_string(corpus.join("fon.txt")).unwrap(), "");
}

#[test]
fn interrupted_generation_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let outputs = dir.path().join("outputs");
    let log = dir.path().join("calls.jsonl");
    let log_arg = log.to_str().unwrap();
    let first = generate(&outputs, &["--max-requests", "37", "--mock-log", log_arg]);
    assert!(first.status.success());
    assert!(stdout(&first).contains("completed: 37"));
    let second = generate(&outputs, &["--mock-log", log_arg, "--parallelism", "8"]);
    assert!(stdout(&second).contains("563 new requests"), "{}", stdout(&second));
    let calls = elicit::mock::read_call_log(&log).unwrap();
    let counts = common::attempt_one_counts(&calls);
    assert_eq!(counts.len(), 600);
    assert!(counts.values().all(|&n| n == 1));
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");

    let unknown = generate(&out, &["--models", "gpt-5"]);
    assert!(!unknown.status.success());
    let msg = stderr(&unknown);
    assert!(msg.contains("unknown model `gpt-5`"), "{msg}");
    assert!(msg.contains("hint:") && msg.contains("gemini-2.5-flash"));

    let offline = Command::new(env!("CARGO_BIN_EXE_elicit"))
        .current_dir(root())
        .env("NO_NETWORK", "1")
        .args(["generate", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!offline.status.success());
    assert!(stderr(&offline).contains("NO_NETWORK"));

    std::fs::create_dir_all(&out).unwrap();
    let empty = evaluate(&out, &dir.path().join("r"), &[]);
    assert!(!empty.status.success());
    assert!(stderr(&empty).contains("no records"));

    let bad_lid = elicit(&["evaluate", "--outputs", out.to_str().unwrap(), "--lid", "glotlid", "--results", "r"]);
    assert!(!bad_lid.status.success());

    let missing_seeds = elicit(&[
        "evaluate", "--outputs", out.to_str().unwrap(), "--lid", "builtin:/nonexistent", "--results", "r",
    ]);
    assert!(!missing_seeds.status.success());

    let no_results = elicit(&["report", "--results", "/nonexistent", "--kind", "validity"]);
    assert!(!no_results.status.success());
    let no_evals = elicit(&["filter", "--outputs", ".", "--results", "/nonexistent", "--out", "x"]);
    assert!(!no_evals.status.success());
}

#[test]
fn config_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_elicit"))
        .current_dir(root())
        .env_remove("NO_NETWORK")
        .env("ELICIT_CONFIG", dir.path())
        .args(["generate", "--mock", "fixtures/mock_responses.json", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains(&dir.path().join("languages.json").display().to_string()));
}
