//! The preprocessing stage: raw enquiries in, clean tokenized sentences
//! (the VS file) and a normalized, merged schema out.
//!
//! Processing is a pure function of (inputs, config). Enquiries are
//! independent, so the stage parallelizes over them; output is sorted by
//! (enquiry_id, sentence_index) to keep bytes identical for any worker
//! count.

mod html;
mod merge;
mod normalize;
mod spelling;

pub use html::strip_html;
pub use merge::{merge_attributes, merge_attributes_with_map};
pub use normalize::{
    is_numeric_token, normalize, normalize_without_spelling, split_number_unit, tokenize,
    vocabulary_tokens, StopWordList, UnitLexicon, NUMBER_TOKEN,
};
pub use spelling::{correct_spelling, correction_bound, levenshtein, levenshtein_within, Vocabulary};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::kg_store::{AttributeDef, CategorySchema, Enquiry};

/// One normalized sentence of one enquiry; the unit record of the VS
/// file. `tokens` is never empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanSentence {
    pub enquiry_id: String,
    pub category_id: String,
    pub sentence_index: u32,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiscardReason {
    Empty,
    NonEnglish,
    Spam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterDecision {
    Keep,
    Discard(DiscardReason),
}

/// Thresholds for enquiry filtering and vocabulary building.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// Minimum fraction of alphabetic chars in the basic Latin range.
    pub min_latin_fraction: f64,
    /// URL-bearing token count at or above which text is spam.
    pub max_urls: usize,
    /// Repeated-character run length at or above which text is spam.
    pub max_repeat_run: usize,
    /// Corpus frequency at which a token joins the correction vocabulary.
    pub vocab_min_freq: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            min_latin_fraction: 0.6,
            max_urls: 3,
            max_repeat_run: 10,
            vocab_min_freq: 5,
        }
    }
}

/// Decides whether a stripped enquiry text is worth keeping. Empty text
/// is discarded first; then texts whose alphabetic characters are mostly
/// outside basic Latin; then spam (too many URLs or a long same-char run).
pub fn filter_invalid(text: &str, cfg: &PreprocessConfig) -> FilterDecision {
    if text.trim().is_empty() {
        return FilterDecision::Discard(DiscardReason::Empty);
    }

    let mut alphabetic = 0usize;
    let mut latin = 0usize;
    for c in text.chars() {
        if c.is_alphabetic() {
            alphabetic += 1;
            if c.is_ascii_alphabetic() {
                latin += 1;
            }
        }
    }
    if alphabetic > 0 && (latin as f64) < cfg.min_latin_fraction * alphabetic as f64 {
        return FilterDecision::Discard(DiscardReason::NonEnglish);
    }

    let urls = text
        .split_whitespace()
        .filter(|t| {
            let t = t.to_lowercase();
            t.contains("http://") || t.contains("https://") || t.starts_with("www.")
        })
        .count();
    if urls >= cfg.max_urls {
        return FilterDecision::Discard(DiscardReason::Spam);
    }

    let mut run = 0usize;
    let mut prev = None;
    for c in text.chars() {
        if c.is_whitespace() {
            prev = None;
            run = 0;
            continue;
        }
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run >= cfg.max_repeat_run {
            return FilterDecision::Discard(DiscardReason::Spam);
        }
    }

    FilterDecision::Keep
}

/// Naive sentence splitting on sentence-final punctuation and newlines.
/// No abbreviation handling; delimiters are dropped, fragments trimmed,
/// empties removed.
pub fn split_sentences(text: &str) -> Vec<String> {
    text.split(['.', '!', '?', ';', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

/// Normalizes a loaded schema through the full token pipeline and merges
/// containment-related attributes. Returns the new schemas along with,
/// per category, the redirect map from each original normalized name key
/// to its surviving merged name key.
pub fn normalize_schema(
    categories: &[CategorySchema],
    stops: &StopWordList,
    units: &UnitLexicon,
    vocab: &Vocabulary,
) -> (Vec<CategorySchema>, BTreeMap<String, BTreeMap<String, String>>) {
    let mut out = Vec::with_capacity(categories.len());
    let mut redirects = BTreeMap::new();
    for cat in categories {
        let mut attrs = Vec::new();
        // Original load-normalized key → pipeline-normalized key.
        let mut renames = BTreeMap::new();
        for attr in &cat.attributes {
            let name_tokens = normalize(&attr.name.join(" "), stops, units, vocab);
            if name_tokens.is_empty() {
                log::warn!(
                    "attribute '{}' of category '{}' has no name tokens after normalization; dropped",
                    attr.name_key(),
                    cat.category_id
                );
                continue;
            }
            let values: Vec<String> = attr
                .values
                .iter()
                .map(|v| normalize(v, stops, units, vocab).join(" "))
                .filter(|v| !v.is_empty())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            if values.is_empty() {
                log::warn!(
                    "attribute '{}' of category '{}' has no values after normalization; dropped",
                    attr.name_key(),
                    cat.category_id
                );
                continue;
            }
            let normalized = AttributeDef {
                raw_name: attr.raw_name.clone(),
                name: name_tokens,
                values,
            };
            renames.insert(attr.name_key(), normalized.name_key());
            attrs.push(normalized);
        }
        // A rename collision (two attributes normalizing to one name) is
        // resolved by the merge below, since equal sets are subsets.
        let (merged, redirect) = merge_attributes_with_map(attrs);
        let full: BTreeMap<String, String> = renames
            .into_iter()
            .map(|(orig, renamed)| {
                let target = redirect.get(&renamed).cloned().unwrap_or(renamed);
                (orig, target)
            })
            .collect();
        redirects.insert(cat.category_id.clone(), full);
        out.push(CategorySchema {
            category_id: cat.category_id.clone(),
            attributes: merged,
        });
    }
    (out, redirects)
}

/// Per-reason discard counts and stage totals, for operator output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StageCounts {
    pub enquiries_in: usize,
    pub discarded_empty: usize,
    pub discarded_non_english: usize,
    pub discarded_spam: usize,
    pub sentences_out: usize,
}

/// Everything the preprocess stage produces.
#[derive(Debug)]
pub struct PreprocessRun {
    pub sentences: Vec<CleanSentence>,
    pub schema: Vec<CategorySchema>,
    /// Per category: original name key → merged name key.
    pub redirects: BTreeMap<String, BTreeMap<String, String>>,
    pub vocabulary: Vocabulary,
    pub counts: StageCounts,
}

fn enquiry_sentences(enquiry: &Enquiry, cfg: &PreprocessConfig) -> Result<Vec<String>, DiscardReason> {
    let stripped = strip_html(&enquiry.text);
    match filter_invalid(&stripped, cfg) {
        FilterDecision::Keep => Ok(split_sentences(&stripped)),
        FilterDecision::Discard(reason) => Err(reason),
    }
}

pub(crate) fn with_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> crate::Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| crate::Error::Data(format!("building worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Runs the full preprocessing stage over loaded inputs.
///
/// Two passes: the first collects token frequencies (pre-correction) to
/// build the spelling vocabulary together with the graph tokens; the
/// second normalizes every sentence with corrections enabled. Both
/// passes parallelize over enquiries; results are deterministic for any
/// `workers` value.
pub fn run_preprocess(
    categories: &[CategorySchema],
    enquiries: &[Enquiry],
    stops: &StopWordList,
    units: &UnitLexicon,
    cfg: &PreprocessConfig,
    workers: usize,
) -> crate::Result<PreprocessRun> {
    use rayon::prelude::*;

    // Pass 1: corpus token frequencies at the pre-correction stage.
    let partial_counts: Vec<BTreeMap<String, u64>> = with_pool(workers, || {
        enquiries
            .par_iter()
            .map(|e| {
                let mut counts = BTreeMap::new();
                if let Ok(sentences) = enquiry_sentences(e, cfg) {
                    for s in sentences {
                        for tok in vocabulary_tokens(&s, units) {
                            *counts.entry(tok).or_insert(0u64) += 1;
                        }
                    }
                }
                counts
            })
            .collect()
    })?;
    let mut corpus_counts: BTreeMap<String, u64> = BTreeMap::new();
    for partial in partial_counts {
        for (tok, n) in partial {
            *corpus_counts.entry(tok).or_insert(0) += n;
        }
    }

    let mut vocabulary = Vocabulary::new();
    for (tok, n) in &corpus_counts {
        if *n >= cfg.vocab_min_freq {
            vocabulary.add(tok, *n);
        }
    }
    // Graph tokens always belong to the vocabulary: corrections should
    // pull towards the matching vocabulary.
    for cat in categories {
        for attr in &cat.attributes {
            for tok in vocabulary_tokens(&attr.name.join(" "), units) {
                if !vocabulary.contains(&tok) {
                    vocabulary.add(&tok, corpus_counts.get(&tok).copied().unwrap_or(0));
                }
            }
            for value in &attr.values {
                for tok in vocabulary_tokens(value, units) {
                    if !vocabulary.contains(&tok) {
                        vocabulary.add(&tok, corpus_counts.get(&tok).copied().unwrap_or(0));
                    }
                }
            }
        }
    }

    // Pass 2: full normalization.
    type EnquiryOutcome = Result<Vec<Vec<String>>, DiscardReason>;
    let per_enquiry: Vec<EnquiryOutcome> = with_pool(workers, || {
        enquiries
            .par_iter()
            .map(|e| {
                enquiry_sentences(e, cfg).map(|sentences| {
                    sentences
                        .iter()
                        .map(|s| normalize(s, stops, units, &vocabulary))
                        .filter(|toks| !toks.is_empty())
                        .collect()
                })
            })
            .collect()
    })?;

    let mut counts = StageCounts {
        enquiries_in: enquiries.len(),
        ..StageCounts::default()
    };
    let mut sentences = Vec::new();
    for (enquiry, outcome) in enquiries.iter().zip(per_enquiry) {
        match outcome {
            Err(DiscardReason::Empty) => counts.discarded_empty += 1,
            Err(DiscardReason::NonEnglish) => counts.discarded_non_english += 1,
            Err(DiscardReason::Spam) => counts.discarded_spam += 1,
            Ok(token_lists) => {
                for (idx, tokens) in token_lists.into_iter().enumerate() {
                    sentences.push(CleanSentence {
                        enquiry_id: enquiry.enquiry_id.clone(),
                        category_id: enquiry.category_id.clone(),
                        sentence_index: idx as u32,
                        tokens,
                    });
                }
            }
        }
    }
    sentences.sort_by(|a, b| {
        (a.enquiry_id.as_str(), a.sentence_index).cmp(&(b.enquiry_id.as_str(), b.sentence_index))
    });
    counts.sentences_out = sentences.len();

    let (schema, redirects) = normalize_schema(categories, stops, units, &vocabulary);

    Ok(PreprocessRun {
        sentences,
        schema,
        redirects,
        vocabulary,
        counts,
    })
}
