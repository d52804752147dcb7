//! Scores clean sentences against category attributes by cosine
//! similarity of mean-pooled vectors and emits thresholded top matches.
//!
//! Tokens composing to the zero vector (out-of-vocabulary words under a
//! whole-word model) are excluded from every mean: both from the sum
//! and from the divisor. Attribute vectors pool each value's tokens
//! first, then pool across values, optionally with the attribute name
//! folded in as one extra pseudo-value.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingModel;
use crate::error::{Error, Result};
use crate::kg_store::{AttributeDef, CategorySchema};
use crate::preprocess::CleanSentence;

fn default_threshold() -> f64 {
    0.75
}

fn default_per_sentence_top() -> usize {
    2
}

fn default_include_name() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatcherConfig {
    /// Minimum cosine score k a match must reach.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Matches kept per sentence; every kept match must clear the
    /// threshold on its own.
    #[serde(default = "default_per_sentence_top")]
    pub per_sentence_top: usize,
    /// Pool the attribute name tokens into the attribute vector as one
    /// additional pseudo-value.
    #[serde(default = "default_include_name")]
    pub include_name: bool,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig {
            threshold: default_threshold(),
            per_sentence_top: default_per_sentence_top(),
            include_name: default_include_name(),
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(-1.0..=1.0).contains(&self.threshold) || self.threshold.is_nan() {
            problems.push(format!(
                "threshold must lie in [-1, 1], got {}",
                self.threshold
            ));
        }
        if self.per_sentence_top == 0 {
            problems.push("per_sentence_top must be at least 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// One thresholded sentence/attribute match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub enquiry_id: String,
    pub category_id: String,
    pub sentence_index: u32,
    pub attribute: String,
    pub score: f64,
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

/// Mean of the non-zero vectors in the stream; the zero vector when
/// every input is zero (or the stream is empty).
fn mean_nonzero(vectors: impl Iterator<Item = Vec<f64>>, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    let mut n = 0usize;
    for v in vectors {
        if is_zero(&v) {
            continue;
        }
        for (a, x) in acc.iter_mut().zip(&v) {
            *a += x;
        }
        n += 1;
    }
    if n > 0 {
        let inv = 1.0 / n as f64;
        for a in &mut acc {
            *a *= inv;
        }
    }
    acc
}

/// Mean of the sentence's token vectors, skipping zero-vector tokens.
pub fn sentence_vector(tokens: &[String], model: &EmbeddingModel) -> Vec<f64> {
    mean_nonzero(tokens.iter().map(|t| model.word_vector(t)), model.dim())
}

fn phrase_vector(phrase: &str, model: &EmbeddingModel) -> Vec<f64> {
    mean_nonzero(
        phrase.split_whitespace().map(|t| model.word_vector(t)),
        model.dim(),
    )
}

/// Mean over the attribute's value vectors (each value mean-pooled over
/// its tokens first), with the name tokens as one extra pseudo-value
/// when `include_name` is on. Zero vectors are skipped at both levels.
pub fn attribute_vector(att: &AttributeDef, model: &EmbeddingModel, include_name: bool) -> Vec<f64> {
    let values = att.values.iter().map(|v| phrase_vector(v, model));
    if include_name {
        let name = std::iter::once(mean_nonzero(
            att.name.iter().map(|t| model.word_vector(t)),
            model.dim(),
        ));
        mean_nonzero(values.chain(name), model.dim())
    } else {
        mean_nonzero(values, model.dim())
    }
}

/// Attribute vectors of one category, precomputed for matching many
/// sentences.
pub struct CategoryMatcher {
    category_id: String,
    attributes: Vec<(String, Vec<f64>)>,
}

impl CategoryMatcher {
    pub fn new(schema: &CategorySchema, model: &EmbeddingModel, include_name: bool) -> Self {
        let attributes = schema
            .attributes
            .iter()
            .map(|att| (att.name_key(), attribute_vector(att, model, include_name)))
            .collect();
        CategoryMatcher {
            category_id: schema.category_id.clone(),
            attributes,
        }
    }

    pub fn category_id(&self) -> &str {
        &self.category_id
    }

    /// Scores every attribute against the pooled sentence vector and
    /// keeps the top `per_sentence_top` whose scores clear the
    /// threshold. Ties break by attribute name, so attribute input
    /// order never matters.
    pub fn match_tokens(
        &self,
        tokens: &[String],
        model: &EmbeddingModel,
        cfg: &MatcherConfig,
    ) -> Vec<(String, f64)> {
        let sv = sentence_vector(tokens, model);
        let mut scored: Vec<(&str, f64)> = self
            .attributes
            .iter()
            .map(|(name, av)| (name.as_str(), cosine(&sv, av)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        scored
            .into_iter()
            .filter(|&(_, score)| score >= cfg.threshold)
            .take(cfg.per_sentence_top)
            .map(|(name, score)| (name.to_string(), score))
            .collect()
    }
}

/// Matches one sentence against its category's schema.
pub fn match_sentence(
    sentence: &CleanSentence,
    schema: &CategorySchema,
    model: &EmbeddingModel,
    cfg: &MatcherConfig,
) -> Vec<MatchRecord> {
    let matcher = CategoryMatcher::new(schema, model, cfg.include_name);
    matcher
        .match_tokens(&sentence.tokens, model, cfg)
        .into_iter()
        .map(|(attribute, score)| MatchRecord {
            enquiry_id: sentence.enquiry_id.clone(),
            category_id: sentence.category_id.clone(),
            sentence_index: sentence.sentence_index,
            attribute,
            score,
        })
        .collect()
}

/// Rounds a score the way the match file stores it.
pub fn round_score(score: f64) -> f64 {
    (score * 1e6).round() / 1e6
}
