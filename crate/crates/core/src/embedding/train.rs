//! Skipgram training with negative sampling.
//!
//! The loss for one (target, context) pair with negatives N is
//! softplus(−s(target, context)) + Σ_{n∈N} softplus(s(target, n)),
//! where s sums inner products of the target's input rows with the
//! context vector. Parameter updates follow the exact gradient of that
//! instance loss, with the input-row step scaled by the reciprocal of
//! the target's row count so long words do not receive outsized steps.
//!
//! Multi-worker training is lock-free: workers read and write shared
//! matrices without synchronization (torn or lost updates are tolerated
//! and vanish in expectation). Single-worker runs are bit-exact
//! reproducible for a fixed seed.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{dot, EmbeddingConfig, EmbeddingModel, Matrix, Vocab};
use crate::error::{Error, Result};

/// One skipgram training instance, in vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    pub target: usize,
    pub context: usize,
    /// Never contains `context`; may repeat other indices.
    pub negatives: Vec<usize>,
}

/// Numerically safe σ(x).
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically safe ln(1 + e^{−x}), the logistic loss of a score.
fn softplus_neg(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

struct LossTerms {
    loss: f64,
    /// ∂loss/∂s(target, context) = σ(s) − 1.
    pos_coef: f64,
}

/// Loss and gradient coefficients for one example, given the summed
/// target representation `u`, the context row, and the negative rows
/// packed contiguously. Writes σ(s(target, nᵢ)) into `neg_coefs`. This
/// is the single source of the training math; both the public gradient
/// functions and the SGD loop go through it.
fn loss_terms(u: &[f64], ctx: &[f64], negs_packed: &[f64], neg_coefs: &mut Vec<f64>) -> LossTerms {
    let s_pos = dot(u, ctx);
    let mut loss = softplus_neg(s_pos);
    let pos_coef = sigmoid(s_pos) - 1.0;
    neg_coefs.clear();
    for neg in negs_packed.chunks_exact(u.len()) {
        let s = dot(u, neg);
        loss += softplus_neg(-s);
        neg_coefs.push(sigmoid(s));
    }
    LossTerms { loss, pos_coef }
}

fn check_example(example: &TrainingExample, model: &EmbeddingModel) -> Result<()> {
    let v = model.vocab.len();
    let out_rows = model.output.rows();
    if out_rows == 0 {
        return Err(Error::Data(
            "model has no context vectors (loaded pretrained file)".into(),
        ));
    }
    for (what, idx) in std::iter::once(("target", example.target))
        .chain(std::iter::once(("context", example.context)))
        .chain(example.negatives.iter().map(|&n| ("negative", n)))
    {
        if idx >= v {
            return Err(Error::Data(format!(
                "{what} index {idx} out of vocabulary range {v}"
            )));
        }
    }
    Ok(())
}

fn gather(example: &TrainingExample, model: &EmbeddingModel) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let dim = model.config.dim;
    let mut u = vec![0.0; dim];
    for &r in model.rows_of_index(example.target) {
        for (a, x) in u.iter_mut().zip(model.input.row(r)) {
            *a += x;
        }
    }
    let ctx = model.output.row(example.context).to_vec();
    let mut negs = Vec::with_capacity(example.negatives.len() * dim);
    for &n in &example.negatives {
        negs.extend_from_slice(model.output.row(n));
    }
    (u, ctx, negs)
}

/// The loss of one training instance under the current parameters.
pub fn instance_loss(example: &TrainingExample, model: &EmbeddingModel) -> Result<f64> {
    check_example(example, model)?;
    let (u, ctx, negs) = gather(example, model);
    let mut neg_coefs = Vec::new();
    Ok(loss_terms(&u, &ctx, &negs, &mut neg_coefs).loss)
}

/// Exact gradients of [`instance_loss`] with respect to every touched
/// parameter row: input-row gradients keyed by input-matrix row index
/// and output-row gradients keyed by vocabulary index. Rows referenced
/// several times (duplicate n-gram buckets, repeated negatives)
/// accumulate their multiplicity.
pub fn instance_gradients(
    example: &TrainingExample,
    model: &EmbeddingModel,
) -> Result<(BTreeMap<usize, Vec<f64>>, BTreeMap<usize, Vec<f64>>)> {
    check_example(example, model)?;
    let dim = model.config.dim;
    let (u, ctx, negs) = gather(example, model);
    let mut neg_coefs = Vec::new();
    let terms = loss_terms(&u, &ctx, &negs, &mut neg_coefs);

    let mut output_grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let grad_ctx = output_grads
        .entry(example.context)
        .or_insert_with(|| vec![0.0; dim]);
    for (g, &x) in grad_ctx.iter_mut().zip(&u) {
        *g += terms.pos_coef * x;
    }
    for (k, &n) in example.negatives.iter().enumerate() {
        let grad_n = output_grads.entry(n).or_insert_with(|| vec![0.0; dim]);
        for (g, &x) in grad_n.iter_mut().zip(&u) {
            *g += neg_coefs[k] * x;
        }
    }

    // Every input row of the target shares the same per-row gradient.
    let mut shared = vec![0.0; dim];
    for (d, g) in shared.iter_mut().enumerate() {
        *g = terms.pos_coef * ctx[d];
        for (k, neg) in negs.chunks_exact(dim).enumerate() {
            *g += neg_coefs[k] * neg[d];
        }
    }
    let mut input_grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &r in model.rows_of_index(example.target) {
        let grad_r = input_grads.entry(r).or_insert_with(|| vec![0.0; dim]);
        for (g, &x) in grad_r.iter_mut().zip(&shared) {
            *g += x;
        }
    }
    Ok((input_grads, output_grads))
}

/// Draws vocabulary indices proportionally to count^0.75 using a
/// cumulative table and binary search.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
    total: f64,
}

impl NegativeSampler {
    pub fn new(counts: &[u64]) -> Self {
        let mut cumulative = Vec::with_capacity(counts.len());
        let mut acc = 0.0;
        for &c in counts {
            acc += (c as f64).powf(0.75);
            cumulative.push(acc);
        }
        NegativeSampler {
            cumulative,
            total: acc,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let x = rng.gen::<f64>() * self.total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }

    /// Draws up to `k` indices, none equal to `exclude`. Bounded
    /// retries keep degenerate vocabularies from spinning forever, so
    /// fewer than `k` draws are possible.
    pub fn sample_excluding_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        exclude: usize,
        k: usize,
        out: &mut Vec<usize>,
    ) {
        out.clear();
        for _ in 0..k {
            for _ in 0..20 {
                let s = self.sample(rng);
                if s != exclude {
                    out.push(s);
                    break;
                }
            }
        }
    }

    pub fn sample_excluding<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        exclude: usize,
        k: usize,
    ) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        self.sample_excluding_into(rng, exclude, k, &mut out);
        out
    }
}

/// Parameter matrix shared across unsynchronized workers. Cells are
/// f64 bit patterns in relaxed atomics; whole-row updates are not
/// atomic, which the training scheme tolerates.
struct SharedMatrix {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl SharedMatrix {
    fn generate(rows: usize, dim: usize, mut fill: impl FnMut() -> f64) -> Self {
        let cells = (0..rows * dim)
            .map(|_| AtomicU64::new(fill().to_bits()))
            .collect();
        SharedMatrix { dim, cells }
    }

    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.cells[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, v: f64) {
        self.cells[i].store(v.to_bits(), Ordering::Relaxed);
    }

    fn read_row(&self, r: usize, buf: &mut [f64]) {
        let base = r * self.dim;
        for (d, b) in buf.iter_mut().enumerate() {
            *b = self.get(base + d);
        }
    }

    fn accumulate_row(&self, r: usize, acc: &mut [f64]) {
        let base = r * self.dim;
        for (d, a) in acc.iter_mut().enumerate() {
            *a += self.get(base + d);
        }
    }

    fn add_scaled(&self, r: usize, v: &[f64], scale: f64) {
        let base = r * self.dim;
        for (d, &x) in v.iter().enumerate() {
            self.set(base + d, self.get(base + d) + scale * x);
        }
    }

    fn into_matrix(self) -> Matrix {
        let dim = self.dim;
        let data = self
            .cells
            .into_iter()
            .map(|c| f64::from_bits(c.into_inner()))
            .collect();
        Matrix::from_data(data, dim)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TrainStats {
    /// Mean instance loss per epoch, in epoch order.
    pub epoch_mean_loss: Vec<f64>,
    pub examples: u64,
}

struct TrainContext<'a> {
    cfg: &'a EmbeddingConfig,
    input: &'a SharedMatrix,
    output: &'a SharedMatrix,
    row_sets: &'a [Vec<usize>],
    sampler: &'a NegativeSampler,
    processed: &'a AtomicU64,
    budget: u64,
}

fn run_chunk(
    ctx: &TrainContext<'_>,
    chunk: &[Vec<usize>],
    epoch: usize,
    worker: usize,
) -> (f64, u64) {
    let cfg = ctx.cfg;
    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(
        cfg.seed
            .wrapping_add(1_000_003u64.wrapping_mul(epoch as u64 + 1))
            .wrapping_add(7_919u64.wrapping_mul(worker as u64)),
    );
    let mut u = vec![0.0; dim];
    let mut ctx_row = vec![0.0; dim];
    let mut negs_packed: Vec<f64> = Vec::with_capacity(cfg.negatives * dim);
    let mut neg_idx: Vec<usize> = Vec::with_capacity(cfg.negatives);
    let mut neg_coefs: Vec<f64> = Vec::with_capacity(cfg.negatives);
    let mut grad = vec![0.0; dim];
    let mut loss_sum = 0.0;
    let mut examples = 0u64;

    for seq in chunk {
        for t in 0..seq.len() {
            let done = ctx.processed.fetch_add(1, Ordering::Relaxed);
            let lr = cfg.learning_rate * (1.0 - done as f64 / ctx.budget as f64).max(0.0);
            let radius = rng.gen_range(1..=cfg.window);
            let lo = t.saturating_sub(radius);
            let hi = (t + radius).min(seq.len() - 1);
            for c in lo..=hi {
                if c == t {
                    continue;
                }
                let target = seq[t];
                let context = seq[c];
                ctx.sampler
                    .sample_excluding_into(&mut rng, context, cfg.negatives, &mut neg_idx);

                let rows = &ctx.row_sets[target];
                u.fill(0.0);
                for &r in rows {
                    ctx.input.accumulate_row(r, &mut u);
                }
                ctx.output.read_row(context, &mut ctx_row);
                negs_packed.clear();
                negs_packed.resize(neg_idx.len() * dim, 0.0);
                for (k, &n) in neg_idx.iter().enumerate() {
                    ctx.output.read_row(n, &mut negs_packed[k * dim..(k + 1) * dim]);
                }

                let terms = loss_terms(&u, &ctx_row, &negs_packed, &mut neg_coefs);
                loss_sum += terms.loss;
                examples += 1;

                ctx.output.add_scaled(context, &u, -lr * terms.pos_coef);
                for (k, &n) in neg_idx.iter().enumerate() {
                    ctx.output.add_scaled(n, &u, -lr * neg_coefs[k]);
                }

                // Input gradient uses the rows as read before the output
                // updates above.
                for (d, g) in grad.iter_mut().enumerate() {
                    *g = terms.pos_coef * ctx_row[d];
                }
                for (k, neg) in negs_packed.chunks_exact(dim).enumerate() {
                    for (g, &x) in grad.iter_mut().zip(neg) {
                        *g += neg_coefs[k] * x;
                    }
                }
                let scale = -lr / rows.len() as f64;
                for &r in rows {
                    ctx.input.add_scaled(r, &grad, scale);
                }
            }
        }
    }
    (loss_sum, examples)
}

/// Trains a model over tokenized sentences with `workers` unsynchronized
/// threads, returning per-epoch loss statistics. Only `workers == 1` is
/// bit-exact reproducible.
pub fn train_with_stats(
    corpus: &[Vec<String>],
    cfg: &EmbeddingConfig,
    workers: usize,
) -> Result<(EmbeddingModel, TrainStats)> {
    cfg.validate()?;
    if cfg.bucket_count == 0 {
        return Err(Error::Config(
            "bucket_count must be positive to train subword vectors".into(),
        ));
    }

    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for sentence in corpus {
        for token in sentence {
            *counts.entry(token.clone()).or_insert(0) += 1;
        }
    }
    let vocab = Vocab::from_counts(counts, cfg.min_count);
    if vocab.is_empty() {
        return Err(Error::Data(
            "empty vocabulary: no token reaches min_count".into(),
        ));
    }

    let sequences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.get(t)).collect())
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();
    let total_tokens: u64 = sequences.iter().map(|s| s.len() as u64).sum();
    let budget = total_tokens * cfg.epochs as u64;

    let row_sets: Vec<Vec<usize>> = (0..vocab.len())
        .map(|i| {
            let mut rows = crate::embedding::ngrams::ngram_row_indices(
                vocab.word(i),
                cfg.ngram_min,
                cfg.ngram_max,
                cfg.bucket_count,
            );
            rows.push(cfg.bucket_count + i);
            rows
        })
        .collect();

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bound = 1.0 / cfg.dim as f64;
    let input_rows = cfg.bucket_count + vocab.len();
    let input = SharedMatrix::generate(input_rows, cfg.dim, || {
        init_rng.gen_range(-bound..bound)
    });
    let output = SharedMatrix::generate(vocab.len(), cfg.dim, || 0.0);

    let sampler = NegativeSampler::new(&vocab.counts());
    let processed = AtomicU64::new(0);
    let workers = workers.max(1);
    let ctx = TrainContext {
        cfg,
        input: &input,
        output: &output,
        row_sets: &row_sets,
        sampler: &sampler,
        processed: &processed,
        budget: budget.max(1),
    };

    let mut stats = TrainStats::default();
    for epoch in 0..cfg.epochs {
        let (loss_sum, examples) = if workers == 1 {
            run_chunk(&ctx, &sequences, epoch, 0)
        } else {
            let chunk_results = std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for w in 0..workers {
                    let lo = w * sequences.len() / workers;
                    let hi = (w + 1) * sequences.len() / workers;
                    let chunk = &sequences[lo..hi];
                    let ctx_ref = &ctx;
                    handles.push(scope.spawn(move || run_chunk(ctx_ref, chunk, epoch, w)));
                }
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .collect::<Vec<_>>()
            });
            chunk_results
                .into_iter()
                .fold((0.0, 0), |(ls, ex), (l, e)| (ls + l, ex + e))
        };
        stats
            .epoch_mean_loss
            .push(if examples > 0 { loss_sum / examples as f64 } else { 0.0 });
        stats.examples += examples;
    }

    let model = EmbeddingModel::assemble(
        cfg.clone(),
        vocab,
        input.into_matrix(),
        output.into_matrix(),
    );
    if !model.is_finite() {
        return Err(Error::Data(
            "training produced non-finite parameters".into(),
        ));
    }
    Ok((model, stats))
}

/// Single-threaded training; see [`train_with_stats`].
pub fn train(corpus: &[Vec<String>], cfg: &EmbeddingConfig) -> Result<EmbeddingModel> {
    train_with_stats(corpus, cfg, 1).map(|(model, _)| model)
}
