//! Subword word embeddings: words are represented as the sum of hashed
//! character n-gram vectors plus a dedicated whole-word vector, trained
//! with skipgram and negative sampling. Models with `bucket_count == 0`
//! carry whole-word vectors only (externally trained word2vec/GloVe
//! style files) and yield zero vectors for unknown words.

mod io;
mod ngrams;
mod train;

pub use io::{load_pretrained, load_pretrained_with, save, save_composed_word_vectors};
pub use ngrams::{boundary_ngrams, fnv1a32, ngram_row_indices};
pub use train::{
    instance_gradients, instance_loss, train, train_with_stats, NegativeSampler, TrainStats,
    TrainingExample,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub ngram_min: usize,
    pub ngram_max: usize,
    /// Hash-bucket rows for n-grams; 0 means whole-word vectors only.
    pub bucket_count: usize,
    /// Maximum skipgram context radius; the effective radius per
    /// position is sampled uniformly from 1..=window.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to zero over training.
    pub learning_rate: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 100,
            ngram_min: 3,
            ngram_max: 6,
            bucket_count: 2_000_000,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.05,
            min_count: 1,
            seed: 42,
        }
    }
}

impl EmbeddingConfig {
    /// Checks the invariants training relies on.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.dim == 0 {
            problems.push("dim must be positive");
        }
        if self.ngram_min == 0 {
            problems.push("ngram_min must be positive");
        }
        if self.ngram_min > self.ngram_max {
            problems.push("ngram_min must not exceed ngram_max");
        }
        if self.window == 0 {
            problems.push("window must be positive");
        }
        if self.negatives == 0 {
            problems.push("negatives must be positive");
        }
        if self.epochs == 0 {
            problems.push("epochs must be positive");
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            problems.push("learning_rate must be positive and finite");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Dense row-major matrix of training parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub(crate) fn from_data(data: Vec<f64>, dim: usize) -> Self {
        debug_assert!(dim > 0 && data.len() % dim == 0);
        Matrix { dim, data }
    }

    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub(crate) fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

#[derive(Debug, Clone)]
pub struct VocabWord {
    pub word: String,
    pub count: u64,
}

/// Corpus vocabulary in a fixed order: descending count, ascending word.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    entries: Vec<VocabWord>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>, min_count: u64) -> Self {
        let mut entries: Vec<VocabWord> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count)
            .map(|(word, count)| VocabWord { word, count })
            .collect();
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
        Self::from_entries(entries)
    }

    /// Builds a vocabulary preserving the given order (used when loading
    /// vector files, whose row order is meaningful).
    pub fn from_entries(entries: Vec<VocabWord>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.clone(), i))
            .collect();
        Vocab { entries, index }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> &str {
        &self.entries[index].word
    }

    pub fn count(&self, index: usize) -> u64 {
        self.entries[index].count
    }

    pub fn counts(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.count).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &VocabWord> {
        self.entries.iter()
    }
}

/// A trained (or loaded) embedding model.
///
/// Input matrix layout: rows `[0, bucket_count)` are hashed n-gram
/// vectors; row `bucket_count + i` is the whole-word vector of
/// vocabulary word `i`. The output matrix holds one context vector per
/// vocabulary word and is empty for loaded pretrained models.
#[derive(Debug, Clone)]
pub struct EmbeddingModel {
    pub(crate) config: EmbeddingConfig,
    pub(crate) vocab: Vocab,
    pub(crate) input: Matrix,
    pub(crate) output: Matrix,
    /// Cached input-row indices per vocabulary word.
    pub(crate) rows_cache: Vec<Vec<usize>>,
}

impl EmbeddingModel {
    pub(crate) fn assemble(
        config: EmbeddingConfig,
        vocab: Vocab,
        input: Matrix,
        output: Matrix,
    ) -> Self {
        let rows_cache = (0..vocab.len())
            .map(|i| Self::compute_rows(vocab.word(i), Some(i), &config))
            .collect();
        EmbeddingModel {
            config,
            vocab,
            input,
            output,
            rows_cache,
        }
    }

    /// Builds a whole-word-only model (`bucket_count == 0`) from
    /// explicit vectors, e.g. externally trained baseline files.
    pub fn from_word_vectors(pairs: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let Some(dim) = pairs.first().map(|(_, v)| v.len()) else {
            return Err(Error::Data("no word vectors given".into()));
        };
        if dim == 0 {
            return Err(Error::Data("zero-dimensional word vectors".into()));
        }
        let mut data = Vec::with_capacity(pairs.len() * dim);
        let mut entries = Vec::with_capacity(pairs.len());
        for (word, vec) in &pairs {
            if vec.len() != dim {
                return Err(Error::Data(format!(
                    "vector for '{word}' has dimension {} instead of {dim}",
                    vec.len()
                )));
            }
            data.extend_from_slice(vec);
            entries.push(VocabWord {
                word: word.clone(),
                count: 1,
            });
        }
        let vocab = Vocab::from_entries(entries);
        if vocab.len() != pairs.len() {
            return Err(Error::Data("duplicate word in vector set".into()));
        }
        let config = EmbeddingConfig {
            dim,
            bucket_count: 0,
            ..EmbeddingConfig::default()
        };
        Ok(Self::assemble(
            config,
            vocab,
            Matrix::from_data(data, dim),
            Matrix::zeros(0, dim),
        ))
    }

    fn compute_rows(word: &str, vocab_index: Option<usize>, cfg: &EmbeddingConfig) -> Vec<usize> {
        let mut rows = ngrams::ngram_row_indices(word, cfg.ngram_min, cfg.ngram_max, cfg.bucket_count);
        if let Some(i) = vocab_index {
            rows.push(cfg.bucket_count + i);
        }
        rows
    }

    /// Input-matrix rows representing `word`: its hashed n-gram rows
    /// plus, for vocabulary words, the appended whole-word row. Unknown
    /// words get n-gram rows only (none when `bucket_count == 0`).
    pub fn token_rows(&self, word: &str) -> Vec<usize> {
        match self.vocab.get(word) {
            Some(i) => self.rows_cache[i].clone(),
            None => Self::compute_rows(word, None, &self.config),
        }
    }

    pub(crate) fn rows_of_index(&self, index: usize) -> &[usize] {
        &self.rows_cache[index]
    }

    /// The word's representation: the sum of its input rows. Zero vector
    /// when the word has no rows (unknown word, `bucket_count == 0`).
    pub fn word_vector(&self, word: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.config.dim];
        for row in self.token_rows(word) {
            for (acc, x) in v.iter_mut().zip(self.input.row(row)) {
                *acc += x;
            }
        }
        v
    }

    /// Inner product between `word`'s representation and the context
    /// vector of `context`. The context word must be in the vocabulary
    /// of a trained model.
    pub fn score(&self, word: &str, context: &str) -> Result<f64> {
        let Some(ci) = self.vocab.get(context) else {
            return Err(Error::Data(format!(
                "context word '{context}' is not in the vocabulary"
            )));
        };
        if ci >= self.output.rows() {
            return Err(Error::Data(
                "model has no context vectors (loaded pretrained file)".into(),
            ));
        }
        let wv = self.word_vector(word);
        Ok(dot(&wv, self.output.row(ci)))
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.get(word).is_some()
    }

    pub fn input_matrix(&self) -> &Matrix {
        &self.input
    }

    pub fn input_matrix_mut(&mut self) -> &mut Matrix {
        &mut self.input
    }

    pub fn output_matrix(&self) -> &Matrix {
        &self.output
    }

    pub fn output_matrix_mut(&mut self) -> &mut Matrix {
        &mut self.output
    }

    /// Multiplies every parameter by `c`. Cosine-based matching must be
    /// invariant to this for c > 0.
    pub fn scale(&mut self, c: f64) {
        for x in self.input.data_mut() {
            *x *= c;
        }
        for x in self.output.data_mut() {
            *x *= c;
        }
    }

    /// True when all parameters are finite.
    pub fn is_finite(&self) -> bool {
        self.input.data().iter().all(|x| x.is_finite())
            && self.output.data().iter().all(|x| x.is_finite())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
