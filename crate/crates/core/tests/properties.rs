mod oracle;

use elicit_core::lid::{train_profiles, LanguageProfileSet};
use elicit_core::text::*;
use elicit_core::{classify, composite_quality, QualityWeights};
use proptest::prelude::*;
use std::collections::BTreeMap;

const EPS: f64 = 1e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn metrics_match_oracle(text in oracle::unicode_text(), other in oracle::unicode_text()) {
        let tokens = tokenize(&text);
        let d = diversity(tokens.as_slice());
        let o = oracle::diversity(tokens.as_slice());
        prop_assert_eq!((d.total_tokens, d.vocab_size, d.hapax_count), (o.total, o.vocab, o.hapax));
        prop_assert!((d.ttr - o.ttr).abs() < EPS);
        prop_assert!((d.hapax_ratio - o.hapax_ratio).abs() < EPS);

        for n in 1..=4 {
            let r = ngram_repetition(tokens.as_slice(), n).unwrap();
            prop_assert!((r - oracle::ngram_repetition(tokens.as_slice(), n)).abs() < EPS);
        }

        let sentences = segment_sentences(&text);
        prop_assert!((sentence_repetition(&sentences) - oracle::sentence_repetition(&sentences)).abs() < EPS);

        let ds = diacritic_stats(&text);
        let od = oracle::diacritics(&text);
        prop_assert_eq!((ds.alphabetic_count, ds.combining_mark_count), (od.alphabetic, od.marks));
        prop_assert!((ds.diacritic_ratio - od.ratio).abs() < EPS);
        prop_assert!((ds.tonal_vowel_fraction - od.tonal_fraction).abs() < EPS);
        prop_assert_eq!(ds.has_diacritics, od.marks > 0);

        let p = trigram_profile(&text);
        let op = oracle::trigrams(&text);
        prop_assert_eq!(p.len(), op.len());
        for (g, &n) in p.iter() {
            let key: String = g.iter().collect();
            prop_assert_eq!(op.get(&key).copied(), Some(n as usize));
        }
        let q = trigram_profile(&other);
        let c = cosine(&p, &q);
        prop_assert!((c - oracle::cosine(&op, &oracle::trigrams(&other))).abs() < EPS);
    }

    #[test]
    fn tokenize_is_idempotent(text in oracle::unicode_text()) {
        let once = tokenize(&text);
        let twice = tokenize(&once.tokens.join(" "));
        prop_assert_eq!(once.tokens, twice.tokens);
    }

    #[test]
    fn tokens_are_nfc_without_whitespace(text in oracle::unicode_text()) {
        use unicode_normalization::UnicodeNormalization;
        for t in tokenize(&text).tokens {
            prop_assert!(!t.chars().any(char::is_whitespace));
            prop_assert_eq!(t.nfc().collect::<String>(), t.clone());
            prop_assert!(!t.is_empty());
        }
    }

    #[test]
    fn diversity_invariants(text in oracle::unicode_text()) {
        let d = diversity(tokenize(&text).as_slice());
        prop_assert!(d.vocab_size <= d.total_tokens);
        prop_assert!(d.hapax_count <= d.vocab_size);
        prop_assert!((0.0..=1.0).contains(&d.ttr) && (0.0..=1.0).contains(&d.hapax_ratio));
    }

    #[test]
    fn cosine_symmetric_bounded_scale_invariant(
        a in oracle::unicode_text(),
        b in oracle::unicode_text(),
        k in 1u64..6,
    ) {
        let p = trigram_profile(&a);
        let q = trigram_profile(&b);
        let pq = cosine(&p, &q);
        prop_assert!((pq - cosine(&q, &p)).abs() < EPS);
        prop_assert!((0.0..=1.0).contains(&pq));
        let scaled: TrigramProfile = p.iter().map(|(g, &n)| (*g, n * k)).collect();
        prop_assert!((cosine(&scaled, &q) - pq).abs() < EPS);
        prop_assert_eq!(p.total(), p.iter().map(|(_, &n)| n).sum::<u64>());
    }

    #[test]
    fn quality_matches_formula_and_is_monotone(
        conf in 0.0f64..=1.0,
        cs in 0.0f64..=1.0,
        w in 0.0f64..=1.0,
        d in 0.0f64..0.5,
    ) {
        let weights = QualityWeights::from_conf_weight(w).unwrap();
        let q = composite_quality(conf, cs, weights).unwrap();
        prop_assert!((q - (w * conf + (1.0 - w) * (1.0 - cs))).abs() < EPS);
        prop_assert!(composite_quality((conf + d).min(1.0), cs, weights).unwrap() >= q - EPS);
        prop_assert!(composite_quality(conf, (cs + d).min(1.0), weights).unwrap() <= q + EPS);
    }

    #[test]
    fn classify_is_deterministic(text in oracle::unicode_text()) {
        let set = tiny_set();
        prop_assert_eq!(classify(&text, &set), classify(&text, &set));
        let p = classify(&text, &set);
        prop_assert!((0.0..=1.0).contains(&p.confidence));
    }
}

fn tiny_set() -> LanguageProfileSet {
    let corpora: BTreeMap<String, Vec<&str>> = [
        ("eng_Latn".to_string(), vec!["the market is open today", "we went home"]),
        ("hau_Latn".to_string(), vec!["mun je kasuwa jiya", "ina kwana yaya gida"]),
        ("fon_Latn".to_string(), vec!["mǐ yì axì mɛ sɔ́", "un kú afɔ̀ dó"]),
    ]
    .into_iter()
    .collect();
    train_profiles(&corpora).unwrap()
}

#[test]
fn weights_must_sum_to_one() {
    let bad = QualityWeights {
        conf: 0.6,
        code_switch: 0.5,
    };
    assert!(composite_quality(1.0, 0.0, bad).is_err());
    assert!(QualityWeights::from_conf_weight(1.5).is_err());
    assert!(QualityWeights::from_conf_weight(-0.1).is_err());
}

#[test]
fn quality_examples() {
    let w = QualityWeights::default();
    assert_eq!(composite_quality(1.0, 0.0, w).unwrap(), 1.0);
    assert!((composite_quality(0.998, 0.087, w).unwrap() - 0.9555).abs() < 1e-4);
    assert_eq!(composite_quality(0.0, 1.0, w).unwrap(), 0.0);
}
