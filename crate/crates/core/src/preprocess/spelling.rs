//! Spelling correction by Levenshtein distance against a known
//! vocabulary, with a length-scaled distance bound.

use std::collections::HashMap;

/// Token set used for spelling correction: graph tokens plus frequent
/// corpus tokens, with corpus frequencies for tie-breaking.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    counts: HashMap<String, u64>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds occurrences of a token (inserting it if new).
    pub fn add(&mut self, token: &str, count: u64) {
        *self.counts.entry(token.to_string()).or_insert(0) += count;
    }

    pub fn contains(&self, token: &str) -> bool {
        self.counts.contains_key(token)
    }

    pub fn frequency(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Classic single-row dynamic-programming edit distance over chars.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { diag } else { diag + 1 };
            diag = row[j + 1];
            row[j + 1] = cost.min(row[j] + 1).min(diag + 1);
        }
    }
    row[b.len()]
}

/// Edit distance with early exit: `None` when the distance exceeds
/// `bound`, which lets vocabulary scans skip hopeless entries fast.
pub fn levenshtein_within(a: &str, b: &str, bound: usize) -> Option<usize> {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.len().abs_diff(b.len()) > bound {
        return None;
    }
    if a.is_empty() {
        return Some(b.len());
    }
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        let mut best = row[0];
        for (j, cb) in b.iter().enumerate() {
            let cost = if ca == cb { diag } else { diag + 1 };
            diag = row[j + 1];
            row[j + 1] = cost.min(row[j] + 1).min(diag + 1);
            best = best.min(row[j + 1]);
        }
        if best > bound {
            return None;
        }
    }
    (row[b.len()] <= bound).then_some(row[b.len()])
}

/// Distance bound: 1 for tokens of up to 5 chars, otherwise 2.
pub fn correction_bound(token_chars: usize) -> usize {
    if token_chars <= 5 {
        1
    } else {
        2
    }
}

/// Returns the vocabulary entry closest to `token` when `token` itself
/// is unknown and some entry lies within the length-scaled bound; ties
/// go to the higher-frequency entry, then the lexicographically smaller
/// one. Otherwise the token is returned unchanged.
pub fn correct_spelling(token: &str, vocab: &Vocabulary) -> String {
    if token.is_empty() || vocab.contains(token) {
        return token.to_string();
    }
    let bound = correction_bound(token.chars().count());
    let mut best: Option<(usize, u64, &str)> = None;
    for (word, freq) in vocab.iter() {
        let Some(dist) = levenshtein_within(token, word, bound) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((bd, bf, bw)) => {
                (dist, std::cmp::Reverse(freq), word) < (bd, std::cmp::Reverse(bf), bw)
            }
        };
        if better {
            best = Some((dist, freq, word));
        }
    }
    match best {
        Some((_, _, word)) => word.to_string(),
        None => token.to_string(),
    }
}
