//! Token normalization: case folding, digit-aware tokenization, number
//! and unit canonicalization, spelling correction, stop-word removal.
//!
//! The step order is fixed; `normalize` documents it. Tokens produced by
//! number or unit replacement are protected from spelling correction and
//! survive a second pass unchanged, which makes the whole function
//! idempotent over its own output.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};
use crate::preprocess::spelling::{correct_spelling, Vocabulary};

/// Replacement token for anything numeric.
pub const NUMBER_TOKEN: &str = "#number#";

/// Stop words, one per line.
#[derive(Debug, Clone, Default)]
pub struct StopWordList {
    words: HashSet<String>,
}

impl StopWordList {
    pub fn from_lines<I: IntoIterator<Item = S>, S: AsRef<str>>(lines: I) -> Self {
        let words = lines
            .into_iter()
            .map(|l| l.as_ref().trim().to_lowercase())
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        StopWordList { words }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = Vec::new();
        for line in BufReader::new(file).lines() {
            lines.push(line.map_err(|e| Error::io(path, e))?);
        }
        Ok(Self::from_lines(lines))
    }

    /// The list bundled with the crate: common English function words
    /// plus the orphan fragments tokenization leaves behind ("s", "t").
    pub fn builtin() -> Self {
        Self::from_lines(include_str!("../../data/stopwords.txt").lines())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Maps unit aliases ("kg", "v") to canonical replacement words
/// ("kilogram", "volt"). One mapping per line: alias followed by the
/// canonical word or words.
#[derive(Debug, Clone, Default)]
pub struct UnitLexicon {
    map: HashMap<String, Vec<String>>,
    canonical: HashSet<String>,
}

impl UnitLexicon {
    pub fn from_lines<I: IntoIterator<Item = S>, S: AsRef<str>>(lines: I) -> Self {
        let mut map = HashMap::new();
        let mut canonical = HashSet::new();
        for line in lines {
            let line = line.as_ref().trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace().map(|p| p.to_lowercase());
            let Some(alias) = parts.next() else { continue };
            let words: Vec<String> = parts.collect();
            if words.is_empty() {
                continue;
            }
            for w in &words {
                canonical.insert(w.clone());
            }
            map.insert(alias, words);
        }
        UnitLexicon { map, canonical }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = Vec::new();
        for line in BufReader::new(file).lines() {
            lines.push(line.map_err(|e| Error::io(path, e))?);
        }
        Ok(Self::from_lines(lines))
    }

    pub fn builtin() -> Self {
        Self::from_lines(include_str!("../../data/units.txt").lines())
    }

    pub fn lookup(&self, alias: &str) -> Option<&[String]> {
        self.map.get(alias).map(|v| v.as_slice())
    }

    /// True for words that appear on the right-hand side of a mapping;
    /// such words are never spelling-corrected away.
    pub fn is_canonical_word(&self, token: &str) -> bool {
        self.canonical.contains(token)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

const MARKER_CHARS: [char; 8] = ['#', 'n', 'u', 'm', 'b', 'e', 'r', '#'];

fn marker_at(chars: &[char], i: usize) -> bool {
    chars.len() >= i + MARKER_CHARS.len() && chars[i..i + MARKER_CHARS.len()] == MARKER_CHARS
}

/// Splits case-folded text on non-alphanumeric boundaries while keeping
/// digit-bearing tokens intact: separators like '.', ',', '-', '+', '*',
/// '/', '×' join two digits ("15.3", "128-300", "3*4"), and the exponent
/// sign survives inside "1.5e-3". A literal `#number#` is kept as one
/// token so normalized output can be re-normalized.
pub fn tokenize(folded: &str) -> Vec<String> {
    let chars: Vec<char> = folded.chars().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < n {
        if chars[i] == '#' && marker_at(&chars, i) {
            tokens.push(NUMBER_TOKEN.to_string());
            i += MARKER_CHARS.len();
            continue;
        }
        if !chars[i].is_alphanumeric() {
            i += 1;
            continue;
        }
        let mut buf = String::new();
        buf.push(chars[i]);
        let mut prev = chars[i];
        let mut prev2 = None;
        i += 1;
        while i < n {
            let c = chars[i];
            if c.is_alphanumeric() {
                buf.push(c);
                prev2 = Some(prev);
                prev = c;
                i += 1;
                continue;
            }
            let next_digit = i + 1 < n && chars[i + 1].is_ascii_digit();
            let joins = match c {
                '.' | ',' | '*' | '/' | '×' => prev.is_ascii_digit() && next_digit,
                '+' | '-' => {
                    let after_exponent =
                        prev == 'e' && prev2.is_some_and(|p| p.is_ascii_digit());
                    (prev.is_ascii_digit() || after_exponent) && next_digit
                }
                _ => false,
            };
            if !joins {
                break;
            }
            buf.push(c);
            prev2 = Some(prev);
            prev = c;
            i += 1;
        }
        tokens.push(buf);
    }
    tokens
}

/// True for tokens that denote a number in integer, decimal, scientific,
/// or arithmetic-expression notation ("128x300x350").
pub fn is_numeric_token(token: &str) -> bool {
    let mut has_digit = false;
    for c in token.chars() {
        match c {
            '0'..='9' => has_digit = true,
            '.' | ',' | '+' | '-' | '*' | '/' | 'x' | '×' | 'e' => {}
            _ => return false,
        }
    }
    has_digit
}

/// Splits a token like "15.3kg" into its numeric prefix and the attached
/// alphabetic suffix. The longest prefix ending in a digit wins; the
/// suffix must be purely alphabetic.
pub fn split_number_unit(token: &str) -> Option<(&str, &str)> {
    let ends: Vec<usize> = token
        .char_indices()
        .map(|(i, c)| i + c.len_utf8())
        .collect();
    for &end in ends.iter().rev() {
        if end == token.len() {
            continue;
        }
        let (prefix, suffix) = token.split_at(end);
        if !prefix.ends_with(|c: char| c.is_ascii_digit()) {
            continue;
        }
        if is_numeric_token(prefix) && suffix.chars().all(char::is_alphabetic) {
            return Some((prefix, suffix));
        }
    }
    None
}

#[derive(Debug, Clone)]
struct Tok {
    text: String,
    /// Number and unit replacements are never spelling-corrected.
    protected: bool,
}

/// Steps 1–4 of the pipeline: case-fold, tokenize, replace numbers,
/// replace units (standalone and fused). No spelling correction or
/// stop-word removal; used for building the correction vocabulary.
fn normalize_stage1(sentence: &str, units: &UnitLexicon) -> Vec<Tok> {
    let folded = sentence.to_lowercase();
    let mut out = Vec::new();
    for raw in tokenize(&folded) {
        if raw == NUMBER_TOKEN || is_numeric_token(&raw) {
            out.push(Tok {
                text: NUMBER_TOKEN.to_string(),
                protected: true,
            });
            continue;
        }
        if let Some(words) = units.lookup(&raw) {
            for w in words {
                out.push(Tok {
                    text: w.clone(),
                    protected: true,
                });
            }
            continue;
        }
        if let Some((_, suffix)) = split_number_unit(&raw) {
            if let Some(words) = units.lookup(suffix) {
                out.push(Tok {
                    text: NUMBER_TOKEN.to_string(),
                    protected: true,
                });
                for w in words {
                    out.push(Tok {
                        text: w.clone(),
                        protected: true,
                    });
                }
                continue;
            }
        }
        out.push(Tok {
            text: raw,
            protected: false,
        });
    }
    out
}

/// Tokens a sentence contributes to the spelling-correction vocabulary:
/// the stage-1 output minus number markers.
pub fn vocabulary_tokens(sentence: &str, units: &UnitLexicon) -> Vec<String> {
    normalize_stage1(sentence, units)
        .into_iter()
        .filter(|t| t.text != NUMBER_TOKEN)
        .map(|t| t.text)
        .collect()
}

fn finish(mut toks: Vec<Tok>, stops: &StopWordList) -> Vec<String> {
    toks.retain(|t| t.protected || !stops.contains(&t.text));
    let mut out: Vec<String> = Vec::with_capacity(toks.len());
    for t in toks {
        if t.text == NUMBER_TOKEN && out.last().is_some_and(|p| p == NUMBER_TOKEN) {
            continue;
        }
        out.push(t.text);
    }
    out
}

/// Full normalization pipeline, in fixed order: (1) case-fold,
/// (2) tokenize, (3) numbers → `#number#`, (4) unit canonicalization
/// including number-fused units, (5) spelling-correct out-of-vocabulary
/// tokens, (6) drop stop words, (7) collapse adjacent `#number#` tokens.
/// An empty result means the sentence carries no content.
pub fn normalize(
    sentence: &str,
    stops: &StopWordList,
    units: &UnitLexicon,
    vocab: &Vocabulary,
) -> Vec<String> {
    let mut toks = normalize_stage1(sentence, units);
    for t in &mut toks {
        if !t.protected && !units.is_canonical_word(&t.text) {
            let corrected = correct_spelling(&t.text, vocab);
            // A correction must never produce a unit alias: stage 4 has
            // already run, so an alias here would survive this pass but
            // not a re-normalization. (Pipeline-built vocabularies are
            // collected after stage 1 and cannot contain aliases, but
            // the vocabulary is caller-supplied.)
            if corrected != t.text && units.lookup(&corrected).is_none() {
                t.text = corrected;
            }
        }
    }
    finish(toks, stops)
}

/// Pipeline without the spelling-correction step; used where no
/// vocabulary exists yet or corrections are undesirable.
pub fn normalize_without_spelling(
    sentence: &str,
    stops: &StopWordList,
    units: &UnitLexicon,
) -> Vec<String> {
    finish(normalize_stage1(sentence, units), stops)
}
