//! Naive reference implementations of the text metrics, written with plain
//! hash-map counting and no code shared with the library.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use proptest::prelude::*;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

pub struct Diversity {
    pub total: usize,
    pub vocab: usize,
    pub ttr: f64,
    pub hapax: usize,
    pub hapax_ratio: f64,
}

pub fn diversity(tokens: &[String]) -> Diversity {
    let mut freq: HashMap<&String, usize> = HashMap::new();
    for t in tokens {
        *freq.entry(t).or_insert(0) += 1;
    }
    let hapax = freq.values().filter(|&&c| c == 1).count();
    let vocab = freq.len();
    Diversity {
        total: tokens.len(),
        vocab,
        ttr: if tokens.is_empty() { 0.0 } else { vocab as f64 / tokens.len() as f64 },
        hapax,
        hapax_ratio: if vocab == 0 { 0.0 } else { hapax as f64 / vocab as f64 },
    }
}

pub fn ngram_repetition(tokens: &[String], n: usize) -> f64 {
    if tokens.len() < n {
        return 0.0;
    }
    let mut total = 0usize;
    let mut seen: HashSet<Vec<String>> = HashSet::new();
    for i in 0..=(tokens.len() - n) {
        total += 1;
        seen.insert(tokens[i..i + n].to_vec());
    }
    1.0 - seen.len() as f64 / total as f64
}

fn casefold(s: &str) -> String {
    let lower: String = s.nfc().collect::<String>().to_lowercase();
    lower.nfc().collect()
}

pub fn sentence_repetition(sentences: &[String]) -> f64 {
    if sentences.is_empty() {
        return 0.0;
    }
    let seen: HashSet<String> = sentences.iter().map(|s| casefold(s.trim())).collect();
    1.0 - seen.len() as f64 / sentences.len() as f64
}

pub struct Diacritics {
    pub alphabetic: usize,
    pub marks: usize,
    pub ratio: f64,
    pub tonal_fraction: f64,
}

/// Splits the NFD string into clusters (a non-mark followed by its marks)
/// and inspects each cluster.
pub fn diacritics(text: &str) -> Diacritics {
    let nfd: Vec<char> = text.nfd().collect();
    let mut clusters: Vec<Vec<char>> = Vec::new();
    for c in nfd {
        if is_combining_mark(c) && !clusters.is_empty() {
            clusters.last_mut().unwrap().push(c);
        } else {
            clusters.push(vec![c]);
        }
    }
    let in_block = |c: char| ('\u{0300}'..='\u{036F}').contains(&c);
    let tone = ['\u{0300}', '\u{0301}', '\u{0302}', '\u{0304}', '\u{030C}'];
    let vowels = "aeiouɛɔAEIOUƐƆ";
    let mut alphabetic = 0;
    let mut marks = 0;
    let mut vowel_total = 0;
    let mut vowel_tonal = 0;
    for cl in &clusters {
        marks += cl.iter().filter(|&&c| in_block(c)).count();
        let base = cl[0];
        if is_combining_mark(base) {
            continue;
        }
        if base.is_alphabetic() {
            alphabetic += 1;
            if vowels.contains(base) {
                vowel_total += 1;
                if cl[1..].iter().any(|c| tone.contains(c)) {
                    vowel_tonal += 1;
                }
            }
        }
    }
    Diacritics {
        alphabetic,
        marks,
        ratio: if alphabetic == 0 { 0.0 } else { marks as f64 / alphabetic as f64 },
        tonal_fraction: if vowel_total == 0 { 0.0 } else { vowel_tonal as f64 / vowel_total as f64 },
    }
}

pub fn trigrams(text: &str) -> HashMap<String, usize> {
    let folded = casefold(text);
    let words: Vec<&str> = folded.split_whitespace().collect();
    let mut counts = HashMap::new();
    if words.is_empty() {
        return counts;
    }
    let padded: Vec<char> = format!(" {} ", words.join(" ")).chars().collect();
    for i in 0..padded.len() - 2 {
        let key: String = padded[i..i + 3].iter().collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts
}

pub fn cosine(p: &HashMap<String, usize>, q: &HashMap<String, usize>) -> f64 {
    if p.is_empty() || q.is_empty() {
        return 0.0;
    }
    let mut dot = 0.0;
    for (k, &a) in p {
        if let Some(&b) = q.get(k) {
            dot += (a * b) as f64;
        }
    }
    let norm = |m: &HashMap<String, usize>| m.values().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
    dot / (norm(p) * norm(q))
}

const VOCAB: &[&str] = &[
    "sannu", "da", "zuwa", "kó", "kò", "kô", "nǔ", "ɖò", "xwé", "ɛ̌", "ɔ́", "the", "la",
    "ƙasa", "ɗan", "Ba̰rka", "KÓ", "ko\u{301}", "raye-raye", "'yan", "a", "b",
];

fn any_char() -> impl Strategy<Value = char> {
    prop_oneof![
        4 => prop::char::range('a', 'z'),
        2 => prop::char::range('\u{0300}', '\u{036F}'),
        2 => prop::sample::select(vec![
            'ɓ', 'ɗ', 'ƙ', 'ɛ', 'ɔ', 'Ɛ', 'Ɔ', 'á', 'à', 'â', 'ǎ', 'ā', 'é', 'È', 'ọ', 'ẹ', 'ṣ',
            'İ', 'ß', 'ω', 'Ж', '中', '😀', '\u{0330}', '\u{0345}', '\u{20D7}',
        ]),
        2 => prop::sample::select(vec![
            ' ', ' ', '\n', '\t', '.', '!', '?', '…', ',', '-', '\'', '’', '0', '7',
        ]),
        1 => any::<char>(),
    ]
}

fn fragment() -> impl Strategy<Value = String> {
    prop_oneof![
        3 => prop::sample::select(VOCAB).prop_map(String::from),
        2 => prop::collection::vec(any_char(), 1..8).prop_map(|v| v.into_iter().collect()),
    ]
}

fn separator() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![" ", " ", " ", ". ", "! ", "\n", "  ", "? ", "… ", ""])
}

/// Random Unicode text mixing a small repeating vocabulary with arbitrary
/// characters, combining marks, punctuation and whitespace.
pub fn unicode_text() -> impl Strategy<Value = String> {
    prop::collection::vec((fragment(), separator()), 0..40).prop_map(|parts| {
        let mut s = String::new();
        for (f, sep) in parts {
            s.push_str(&f);
            s.push_str(sep);
        }
        s
    })
}
