//! Deterministic Unicode text statistics.
//!
//! Every function here is pure. Text is NFC-normalized and lowercased before
//! tokenization, sentence de-duplication and trigram extraction, so composed
//! and decomposed inputs produce the same statistics.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::TextError;

/// A character trigram.
pub type Trigram = [char; 3];

/// NFC, lowercase, NFC again. Lowercasing can emit decomposed sequences
/// (e.g. `İ`), hence the second pass.
pub fn fold(text: &str) -> String {
    let lowered: String = text.nfc().flat_map(char::to_lowercase).collect();
    lowered.nfc().collect()
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{02BC}')
}

fn is_hyphen(c: char) -> bool {
    matches!(c, '-' | '\u{2010}' | '\u{2011}')
}

fn is_letter(c: char) -> bool {
    c.is_alphabetic() && !is_combining_mark(c)
}

fn is_word_char(c: char) -> bool {
    c.is_alphabetic() || is_combining_mark(c) || is_apostrophe(c)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub source_char_count: usize,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.tokens
    }
}

/// Splits text into word tokens.
///
/// A token is a maximal run of letters, combining marks and apostrophes,
/// where a hyphen is kept only between two letters or marks. Runs without
/// a single letter (a lone apostrophe, say) are dropped, as are digits and
/// punctuation.
pub fn tokenize(text: &str) -> TokenSequence {
    let source_char_count = text.chars().count();
    let folded: Vec<char> = fold(text).chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut has_letter = false;

    let mut flush = |current: &mut String, has_letter: &mut bool| {
        if *has_letter {
            tokens.push(core::mem::take(current));
        } else {
            current.clear();
        }
        *has_letter = false;
    };

    for (i, &c) in folded.iter().enumerate() {
        if is_word_char(c) {
            has_letter |= is_letter(c);
            current.push(c);
        } else if is_hyphen(c)
            && current
                .chars()
                .next_back()
                .is_some_and(|p| p.is_alphabetic() || is_combining_mark(p))
            && folded
                .get(i + 1)
                .is_some_and(|&n| n.is_alphabetic() || is_combining_mark(n))
        {
            current.push(c);
        } else {
            flush(&mut current, &mut has_letter);
        }
    }
    flush(&mut current, &mut has_letter);

    TokenSequence {
        tokens,
        source_char_count,
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

/// Splits on `.`, `!`, `?`, `…` (a run of terminators stays together with
/// its sentence) and on newline runs. Segments are trimmed; empty ones are
/// dropped.
pub fn segment_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();

    let mut push = |current: &mut String| {
        let trimmed = current.trim();
        if !trimmed.is_empty() {
            out.push(String::from(trimmed));
        }
        current.clear();
    };

    while let Some(c) = chars.next() {
        if c == '\n' {
            push(&mut current);
        } else if is_terminator(c) {
            current.push(c);
            while let Some(&next) = chars.peek() {
                if !is_terminator(next) {
                    break;
                }
                current.push(next);
                chars.next();
            }
            push(&mut current);
        } else {
            current.push(c);
        }
    }
    push(&mut current);
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiversityStats {
    pub total_tokens: usize,
    pub vocab_size: usize,
    pub ttr: f64,
    pub hapax_count: usize,
    /// Hapax count over vocabulary size.
    pub hapax_ratio: f64,
}

pub fn diversity(tokens: &[String]) -> DiversityStats {
    if tokens.is_empty() {
        return DiversityStats::default();
    }
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for t in tokens {
        *freq.entry(t.as_str()).or_default() += 1;
    }
    let vocab_size = freq.len();
    let hapax_count = freq.values().filter(|&&n| n == 1).count();
    DiversityStats {
        total_tokens: tokens.len(),
        vocab_size,
        ttr: vocab_size as f64 / tokens.len() as f64,
        hapax_count,
        hapax_ratio: hapax_count as f64 / vocab_size as f64,
    }
}

/// `1 - unique/total` over the overlapping `n`-grams of `tokens`.
pub fn ngram_repetition(tokens: &[String], n: usize) -> Result<f64, TextError> {
    if n == 0 {
        return Err(TextError::InvalidNgramOrder(n));
    }
    if tokens.len() < n {
        return Ok(0.0);
    }
    let grams: Vec<&[String]> = tokens.windows(n).collect();
    let total = grams.len();
    let mut unique = grams.clone();
    unique.sort_unstable();
    unique.dedup();
    Ok(1.0 - unique.len() as f64 / total as f64)
}

/// `1 - unique/total` over sentences compared after trimming and folding.
pub fn sentence_repetition<S: AsRef<str>>(sentences: &[S]) -> f64 {
    if sentences.is_empty() {
        return 0.0;
    }
    let mut keys: Vec<String> = sentences.iter().map(|s| fold(s.as_ref().trim())).collect();
    let total = keys.len();
    keys.sort_unstable();
    keys.dedup();
    1.0 - keys.len() as f64 / total as f64
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiacriticStats {
    pub alphabetic_count: usize,
    pub combining_mark_count: usize,
    pub diacritic_ratio: f64,
    pub has_diacritics: bool,
    pub tonal_vowel_fraction: f64,
}

const COMBINING_DIACRITICS: core::ops::RangeInclusive<char> = '\u{0300}'..='\u{036F}';

/// Grave, acute, circumflex, macron, caron.
pub const TONE_MARKS: [char; 5] = ['\u{0300}', '\u{0301}', '\u{0302}', '\u{0304}', '\u{030C}'];

pub fn is_vowel(c: char) -> bool {
    matches!(
        c.to_lowercase().next().unwrap_or(c),
        'a' | 'e' | 'i' | 'o' | 'u' | 'ɛ' | 'ɔ'
    )
}

/// Counts base letters and combining diacritics (U+0300..=U+036F) in the
/// NFD form of `text`. A vowel counts as tonal when any tone mark appears
/// in its combining sequence.
pub fn diacritic_stats(text: &str) -> DiacriticStats {
    let mut alphabetic = 0usize;
    let mut marks = 0usize;
    let mut vowels = 0usize;
    let mut tonal_vowels = 0usize;
    // (is the current base a vowel, has it picked up a tone mark yet)
    let mut base = (false, false);

    for c in text.nfd() {
        if COMBINING_DIACRITICS.contains(&c) {
            marks += 1;
            if base.0 && !base.1 && TONE_MARKS.contains(&c) {
                base.1 = true;
                tonal_vowels += 1;
            }
        } else if is_combining_mark(c) {
            // other combining marks extend the sequence without being counted
        } else if is_letter(c) {
            alphabetic += 1;
            let vowel = is_vowel(c);
            vowels += usize::from(vowel);
            base = (vowel, false);
        } else {
            base = (false, false);
        }
    }

    DiacriticStats {
        alphabetic_count: alphabetic,
        combining_mark_count: marks,
        diacritic_ratio: if alphabetic == 0 {
            0.0
        } else {
            marks as f64 / alphabetic as f64
        },
        has_diacritics: marks > 0,
        tonal_vowel_fraction: if vowels == 0 {
            0.0
        } else {
            tonal_vowels as f64 / vowels as f64
        },
    }
}

/// Folded text with whitespace runs collapsed to one space and trimmed.
pub fn normalize_for_profile(text: &str) -> String {
    let folded = fold(text);
    let mut out = String::with_capacity(folded.len());
    for word in folded.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Sparse character-trigram counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrigramProfile {
    counts: BTreeMap<Trigram, u64>,
    total: u64,
}

impl TrigramProfile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Profile of one text, padded with a single boundary space on each side.
    pub fn from_text(text: &str) -> Self {
        let normalized = normalize_for_profile(text);
        let mut profile = Self::new();
        if normalized.is_empty() {
            return profile;
        }
        let mut padded: Vec<char> = Vec::with_capacity(normalized.len() + 2);
        padded.push(' ');
        padded.extend(normalized.chars());
        padded.push(' ');
        for w in padded.windows(3) {
            profile.add([w[0], w[1], w[2]], 1);
        }
        profile
    }

    /// Merged profile over several documents, each padded separately.
    pub fn from_documents<I, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut profile = Self::new();
        for doc in docs {
            profile.merge(&Self::from_text(doc.as_ref()));
        }
        profile
    }

    pub fn add(&mut self, trigram: Trigram, count: u64) {
        if count == 0 {
            return;
        }
        *self.counts.entry(trigram).or_default() += count;
        self.total += count;
    }

    pub fn merge(&mut self, other: &TrigramProfile) {
        for (&g, &n) in &other.counts {
            self.add(g, n);
        }
    }

    pub fn get(&self, trigram: &Trigram) -> u64 {
        self.counts.get(trigram).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct trigrams.
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Trigram, &u64)> {
        self.counts.iter()
    }

    /// Euclidean norm of the count vector.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.counts.values().map(|&n| (n as f64) * (n as f64)).sum())
    }
}

impl FromIterator<(Trigram, u64)> for TrigramProfile {
    fn from_iter<T: IntoIterator<Item = (Trigram, u64)>>(iter: T) -> Self {
        let mut profile = Self::new();
        for (g, n) in iter {
            profile.add(g, n);
        }
        profile
    }
}

pub fn trigram_profile(text: &str) -> TrigramProfile {
    TrigramProfile::from_text(text)
}

/// Cosine similarity of two count vectors; 0 when either is empty.
pub fn cosine(p: &TrigramProfile, q: &TrigramProfile) -> f64 {
    cosine_with_norms(p, p.norm(), q, q.norm())
}

/// As [`cosine`], with norms computed by the caller.
pub(crate) fn cosine_with_norms(p: &TrigramProfile, p_norm: f64, q: &TrigramProfile, q_norm: f64) -> f64 {
    if p.is_empty() || q.is_empty() {
        return 0.0;
    }
    let (small, large) = if p.len() <= q.len() { (p, q) } else { (q, p) };
    let dot: f64 = small
        .counts
        .iter()
        .map(|(g, &n)| n as f64 * large.get(g) as f64)
        .sum();
    (dot / (p_norm * q_norm)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| String::from(*w)).collect()
    }

    #[test]
    fn tokenize_keeps_combining_marks() {
        let seq = tokenize("Ba̰rka da rana!");
        assert_eq!(seq.tokens, toks(&["ba̰rka", "da", "rana"]));
        assert_eq!(seq.source_char_count, 15);
    }

    #[test]
    fn tokenize_degenerate() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("123 ... !!!").is_empty());
        assert!(tokenize("' -- '").is_empty());
    }

    #[test]
    fn tokenize_hyphen_and_apostrophe() {
        let seq = tokenize("'Yan raye-raye -da- ka' 3-4");
        assert_eq!(seq.tokens, toks(&["'yan", "raye-raye", "da", "ka'"]));
    }

    #[test]
    fn tokenize_composes_decomposed_input() {
        assert_eq!(tokenize("ko\u{301}").tokens, tokenize("kó").tokens);
        assert_eq!(tokenize("KÓ").tokens, toks(&["kó"]));
    }

    #[test]
    fn sentences() {
        assert_eq!(segment_sentences("A b. C d? E"), ["A b.", "C d?", "E"]);
        assert!(segment_sentences("").is_empty());
        assert_eq!(segment_sentences("one\n\ntwo"), ["one", "two"]);
        assert_eq!(segment_sentences("Wait?! Yes… ok"), ["Wait?!", "Yes…", "ok"]);
    }

    #[test]
    fn diversity_counts() {
        let d = diversity(&toks(&["a", "b", "a", "c"]));
        assert_eq!((d.total_tokens, d.vocab_size, d.hapax_count), (4, 3, 2));
        assert_eq!(d.ttr, 0.75);
        assert!((d.hapax_ratio - 0.667).abs() < 1e-3);

        let d = diversity(&toks(&["x"]));
        assert_eq!((d.ttr, d.hapax_ratio), (1.0, 1.0));
        assert_eq!(diversity(&[]), DiversityStats::default());
    }

    #[test]
    fn ngram_repetition_cases() {
        let t = toks(&["a", "b", "c", "d", "a", "b", "c", "d"]);
        assert!((ngram_repetition(&t, 4).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(ngram_repetition(&toks(&["a", "b", "c", "d", "e"]), 4).unwrap(), 0.0);
        assert_eq!(ngram_repetition(&toks(&["a", "b", "c"]), 4).unwrap(), 0.0);
        assert_eq!(
            ngram_repetition(&t, 0),
            Err(TextError::InvalidNgramOrder(0))
        );
    }

    #[test]
    fn sentence_repetition_cases() {
        assert!((sentence_repetition(&["Hi.", "Hi.", "Bye."]) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(sentence_repetition(&["Hi.", " hi. ", "HI."]), 1.0 - 1.0 / 3.0);
        assert_eq!(sentence_repetition(&["a", "b"]), 0.0);
        assert_eq!(sentence_repetition::<&str>(&[]), 0.0);
    }

    #[test]
    fn diacritics_tone_pairs() {
        let d = diacritic_stats("kó kò kô");
        assert_eq!(d.alphabetic_count, 6);
        assert_eq!(d.combining_mark_count, 3);
        assert_eq!(d.diacritic_ratio, 0.5);
        assert_eq!(d.tonal_vowel_fraction, 1.0);
        assert!(d.has_diacritics);

        let d = diacritic_stats("abc");
        assert_eq!(d.diacritic_ratio, 0.0);
        assert!(!d.has_diacritics);
        assert_eq!(diacritic_stats(""), DiacriticStats::default());
    }

    #[test]
    fn diacritics_non_tone_marks() {
        // tilde below is a diacritic but not a tone mark
        let d = diacritic_stats("a\u{330}e\u{301}\u{330}");
        assert_eq!(d.combining_mark_count, 3);
        assert_eq!(d.tonal_vowel_fraction, 0.5);
        // ɔ̌ counts as a tonal open vowel
        assert_eq!(diacritic_stats("ɔ̌ɛ").tonal_vowel_fraction, 0.5);
    }

    #[test]
    fn trigram_padding() {
        let p = trigram_profile("ab");
        assert_eq!(p.len(), 2);
        assert_eq!(p.get(&[' ', 'a', 'b']), 1);
        assert_eq!(p.get(&['a', 'b', ' ']), 1);
        assert_eq!(p.total(), 2);
        assert!(trigram_profile("").is_empty());
        assert!(trigram_profile(" \n\t ").is_empty());
        assert_eq!(trigram_profile("a").total(), 1);
        assert_eq!(trigram_profile("A  b"), trigram_profile("a b"));
    }

    #[test]
    fn trigram_merge_doubles() {
        let p = trigram_profile("xx");
        let mut q = p.clone();
        q.merge(&p);
        assert_eq!(q.total(), 2 * p.total());
        for (g, &n) in p.iter() {
            assert_eq!(q.get(g), 2 * n);
        }
    }

    #[test]
    fn cosine_cases() {
        let p = trigram_profile("sannu da zuwa");
        assert!((cosine(&p, &p) - 1.0).abs() < 1e-9);
        assert_eq!(cosine(&trigram_profile("abc"), &trigram_profile("ωψχ")), 0.0);
        assert_eq!(cosine(&p, &TrigramProfile::new()), 0.0);

        let p: TrigramProfile = vec![(['a', 'b', 'c'], 1)].into_iter().collect();
        let q: TrigramProfile = vec![(['a', 'b', 'c'], 1), (['b', 'c', 'd'], 1)]
            .into_iter()
            .collect();
        assert!((cosine(&p, &q) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    }
}
