//! Approximate string similarity used for keyword selection.
//!
//! All ratios are computed over Unicode scalar values and return a real-valued
//! score in `[0, 100]`. Callers are expected to run inputs through
//! [`preprocess`] once and pass the normalized text to the ratio functions.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// Similarity percentage in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub const MAX: SimilarityScore = SimilarityScore(100.0);
    pub const MIN: SimilarityScore = SimilarityScore(0.0);

    fn from_fraction(matched: usize, total: usize) -> Self {
        if total == 0 {
            return Self::MAX;
        }
        SimilarityScore(100.0 * matched as f64 / total as f64)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for SimilarityScore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

impl From<SimilarityScore> for f64 {
    fn from(s: SimilarityScore) -> f64 {
        s.0
    }
}

/// Text after fuzzy-matching normalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedText {
    pub original: String,
    pub normalized: String,
    pub tokens: Vec<String>,
}

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.normalized
    }

    pub fn is_empty(&self) -> bool {
        self.normalized.is_empty()
    }
}

/// Lowercase, replace every non-alphanumeric character with a space, collapse
/// whitespace runs and trim.
pub fn preprocess(text: &str) -> NormalizedText {
    let mapped: String = text
        .chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    let tokens: Vec<String> = mapped.split_whitespace().map(str::to_owned).collect();
    NormalizedText {
        original: text.to_owned(),
        normalized: tokens.join(" "),
        tokens,
    }
}

/// Bit-parallel LCS matcher for a fixed pattern (Hyyrö's formulation, one bit
/// per pattern position, multiword for patterns longer than 64).
struct LcsPattern {
    len: usize,
    words: usize,
    masks: HashMap<char, Vec<u64>>,
}

impl LcsPattern {
    fn new(pattern: &[char]) -> Self {
        let words = pattern.len().div_ceil(64).max(1);
        let mut masks: HashMap<char, Vec<u64>> = HashMap::new();
        for (i, &c) in pattern.iter().enumerate() {
            masks.entry(c).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
        }
        LcsPattern {
            len: pattern.len(),
            words,
            masks,
        }
    }

    fn lcs(&self, text: &[char]) -> usize {
        if self.len == 0 || text.is_empty() {
            return 0;
        }
        let mut v = vec![u64::MAX; self.words];
        for c in text {
            let Some(pm) = self.masks.get(c) else {
                continue;
            };
            // V' = (V + (V & PM)) | (V & !PM), with carry across words
            let mut carry = 0u64;
            for w in 0..self.words {
                let u = v[w] & pm[w];
                let (s1, c1) = v[w].overflowing_add(u);
                let (s2, c2) = s1.overflowing_add(carry);
                carry = (c1 || c2) as u64;
                v[w] = s2 | (v[w] & !pm[w]);
            }
        }
        let mut zeros = 0;
        for (w, word) in v.iter().enumerate() {
            let bits = if w + 1 == self.words && !self.len.is_multiple_of(64) {
                self.len % 64
            } else {
                64
            };
            let mask = if bits == 64 {
                u64::MAX
            } else {
                (1u64 << bits) - 1
            };
            zeros += (!word & mask).count_ones() as usize;
        }
        zeros
    }
}

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

fn lcs_len(a: &[char], b: &[char]) -> usize {
    // pattern length drives the bitvector width; use the shorter side
    let (pattern, text) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    LcsPattern::new(pattern).lcs(text)
}

/// Minimum number of single-character insertions and deletions turning `a`
/// into `b`.
pub fn indel_distance(a: &str, b: &str) -> usize {
    let (a, b) = (chars(a), chars(b));
    a.len() + b.len() - 2 * lcs_len(&a, &b)
}

/// `100 * (1 - indel / (|a| + |b|))`; two empty strings score 100.
pub fn simple_ratio(a: &str, b: &str) -> SimilarityScore {
    let (a, b) = (chars(a), chars(b));
    ratio_chars(&a, &b)
}

fn ratio_chars(a: &[char], b: &[char]) -> SimilarityScore {
    let total = a.len() + b.len();
    SimilarityScore::from_fraction(2 * lcs_len(a, b), total)
}

/// Best [`simple_ratio`] between the shorter string and any same-length
/// window of the longer one.
pub fn partial_ratio(needle: &str, haystack: &str) -> SimilarityScore {
    let (mut needle, mut haystack) = (chars(needle), chars(haystack));
    if needle.len() > haystack.len() {
        std::mem::swap(&mut needle, &mut haystack);
    }
    let m = needle.len();
    if m == 0 {
        return SimilarityScore::MAX;
    }
    let pattern = LcsPattern::new(&needle);
    let mut best = 0;
    for window in haystack.windows(m) {
        best = best.max(pattern.lcs(window));
        if best == m {
            break;
        }
    }
    // equal-length window: 2L / 2m
    SimilarityScore::from_fraction(best, m)
}

/// Three-way comparison of the sorted token intersection against each side's
/// intersection-plus-remainder.
///
/// Both sides empty score 100; exactly one side empty scores 0.
pub fn token_set_ratio(a: &str, b: &str) -> SimilarityScore {
    let left: BTreeSet<&str> = a.split_whitespace().collect();
    let right: BTreeSet<&str> = b.split_whitespace().collect();
    match (left.is_empty(), right.is_empty()) {
        (true, true) => return SimilarityScore::MAX,
        (true, false) | (false, true) => return SimilarityScore::MIN,
        _ => {}
    }
    let join = |head: &str, tail: Vec<&str>| -> String {
        let tail = tail.join(" ");
        match (head.is_empty(), tail.is_empty()) {
            (true, _) => tail,
            (_, true) => head.to_owned(),
            _ => format!("{head} {tail}"),
        }
    };
    let common = left
        .intersection(&right)
        .copied()
        .collect::<Vec<_>>()
        .join(" ");
    let with_left = join(&common, left.difference(&right).copied().collect());
    let with_right = join(&common, right.difference(&left).copied().collect());

    let candidates = [
        simple_ratio(&common, &with_left),
        simple_ratio(&common, &with_right),
        simple_ratio(&with_left, &with_right),
    ];
    candidates
        .into_iter()
        .fold(SimilarityScore::MIN, |acc, s| if s > acc { s } else { acc })
}
