//! Regenerates `fixtures/mock_responses.json` from the sentence pools.
//!
//! Usage: cargo run -p elicit --example make_fixtures [-- <workspace-root>]

use std::collections::BTreeMap;
use std::path::PathBuf;

use elicit::batch::plan_batch;
use elicit::client::Auth;
use elicit::config::{load_languages, load_models, load_taxonomy_for};
use elicit::corpus::read_lines;
use elicit::mock::MockFixture;
use elicit::store::write_json_atomic;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_250_101;

fn main() -> anyhow::Result<()> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../.."));
    let languages = load_languages(&root.join("config/languages.json"))?;
    let models = load_models(&root.join("config/models.json"))?;
    let mut per_language = Vec::new();
    for lang in &languages {
        per_language.push((lang.clone(), load_taxonomy_for(&root.join("taxonomy"), &lang.iso_code)?));
    }
    let plan = plan_batch(&per_language, &models, Auth::None)?;

    let mut pools = BTreeMap::new();
    let mut colonial = BTreeMap::new();
    for lang in &languages {
        pools.insert(lang.iso_code.clone(), read_lines(&root.join(format!("fixtures/pool/{}.txt", lang.iso_code)))?);
        let label = match lang.colonial_language.as_str() {
            "French" => "fra_Latn",
            _ => "eng_Latn",
        };
        colonial.insert(lang.iso_code.clone(), read_lines(&root.join(format!("seeds/{label}.txt")))?);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut fixtures = BTreeMap::new();
    for request in &plan.requests {
        let iso = &request.meta.language;
        let pool = &pools[iso];
        let other = &colonial[iso];
        let pick = |rng: &mut ChaCha8Rng, from: &[String], n: usize| -> Vec<String> {
            from.choose_multiple(rng, n).cloned().collect()
        };
        let kind = rng.gen_range(0..100);
        let sentences = if kind < 4 {
            // too short to be valid
            pick(&mut rng, pool, 1)
        } else if kind < 7 {
            // answered in the colonial language
            let n = rng.gen_range(4..9);
            pick(&mut rng, other, n)
        } else if kind < 25 {
            let n = rng.gen_range(3..10);
            let mut s = pick(&mut rng, pool, n);
            let k = rng.gen_range(1..3);
            for c in pick(&mut rng, other, k) {
                let at = rng.gen_range(0..=s.len());
                s.insert(at, c);
            }
            s
        } else {
            let n = rng.gen_range(3..11);
            pick(&mut rng, pool, n)
        };
        let status_schedule = match rng.gen_range(0..100) {
            0..=2 => vec![429, 200],
            3 => vec![500, 429, 200],
            _ => vec![],
        };
        fixtures.insert(
            request.output_id().to_string(),
            MockFixture {
                response_text: sentences.join(" "),
                status_schedule,
                finish_reason: None,
            },
        );
    }
    let out = root.join("fixtures/mock_responses.json");
    write_json_atomic(&out, &fixtures)?;
    println!("wrote {} fixtures to {}", fixtures.len(), out.display());
    Ok(())
}
