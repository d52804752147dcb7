//! Acceptance gate: eleven pinned criteria, one test per criterion,
//! each printing a single PASS line with its measured evidence.
//! Tolerances are fixed in code; a failing criterion must fail loudly
//! rather than be loosened.


use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use kgattr::embedding::{
    instance_gradients, instance_loss, train, train_with_stats, EmbeddingConfig, EmbeddingModel,
    NegativeSampler, TrainingExample,
};
use kgattr::evaluator::{f1_of, CategoryEval, MethodEval};
use kgattr::kg_store::{AttributeDef, CategorySchema};
use kgattr::matcher::{match_sentence, CategoryMatcher, MatcherConfig};
use kgattr::preprocess::{
    merge_attributes, normalize, CleanSentence, StopWordList, UnitLexicon, Vocabulary,
};
use kgattr::textrank::{textrank, CooccurrenceGraph, TextRankConfig};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn report_pass(label: &str, detail: &str, started: Instant) {
    println!("PASS {label}: {detail} [{:.2?}]", started.elapsed());
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// --- criterion 1: analytic gradients vs central finite differences ---

#[test]
fn criterion_01_gradients_match_finite_differences() {
    let started = Instant::now();
    let corpus: Vec<Vec<String>> = (0..10)
        .map(|s| {
            [0, 1, 7, 13]
                .iter()
                .map(|k| format!("word{:02}", (2 * s + k) % 20))
                .collect()
        })
        .collect();
    let cfg = EmbeddingConfig {
        dim: 8,
        ngram_min: 3,
        ngram_max: 5,
        bucket_count: 128,
        window: 2,
        negatives: 3,
        epochs: 1,
        learning_rate: 0.05,
        min_count: 1,
        seed: 3,
    };
    let model = train(&corpus, &cfg).expect("training succeeds");
    assert_eq!(model.vocab().len(), 20, "fixture must have 20 words");

    let h = 1e-4;
    let mut max_rel: f64 = 0.0;
    let mut rows_checked = 0usize;
    for t in 0..5usize {
        let example = TrainingExample {
            target: t,
            context: (t + 3) % 20,
            negatives: vec![(t + 5) % 20, (t + 11) % 20, (t + 16) % 20],
        };
        let (input_grads, output_grads) = instance_gradients(&example, &model).expect("gradients");
        assert!(!input_grads.is_empty() && !output_grads.is_empty());

        for (&row, analytic) in &input_grads {
            let mut fd = vec![0.0; cfg.dim];
            let mut probe = model.clone();
            for (d, slot) in fd.iter_mut().enumerate() {
                let original = probe.input_matrix().row(row)[d];
                probe.input_matrix_mut().row_mut(row)[d] = original + h;
                let plus = instance_loss(&example, &probe).expect("loss");
                probe.input_matrix_mut().row_mut(row)[d] = original - h;
                let minus = instance_loss(&example, &probe).expect("loss");
                probe.input_matrix_mut().row_mut(row)[d] = original;
                *slot = (plus - minus) / (2.0 * h);
            }
            let diff: Vec<f64> = fd.iter().zip(analytic).map(|(a, b)| a - b).collect();
            let rel = l2(&diff) / l2(analytic).max(1e-12);
            assert!(rel <= 1e-4, "input row {row}: relative error {rel:.3e}");
            max_rel = max_rel.max(rel);
            rows_checked += 1;
        }
        for (&word, analytic) in &output_grads {
            let mut fd = vec![0.0; cfg.dim];
            let mut probe = model.clone();
            for (d, slot) in fd.iter_mut().enumerate() {
                let original = probe.output_matrix().row(word)[d];
                probe.output_matrix_mut().row_mut(word)[d] = original + h;
                let plus = instance_loss(&example, &probe).expect("loss");
                probe.output_matrix_mut().row_mut(word)[d] = original - h;
                let minus = instance_loss(&example, &probe).expect("loss");
                probe.output_matrix_mut().row_mut(word)[d] = original;
                *slot = (plus - minus) / (2.0 * h);
            }
            let diff: Vec<f64> = fd.iter().zip(analytic).map(|(a, b)| a - b).collect();
            let rel = l2(&diff) / l2(analytic).max(1e-12);
            assert!(rel <= 1e-4, "output row {word}: relative error {rel:.3e}");
            max_rel = max_rel.max(rel);
            rows_checked += 1;
        }
    }
    assert!(started.elapsed() < Duration::from_secs(5), "runtime budget exceeded");
    report_pass(
        "criterion 01 gradient correctness",
        &format!("{rows_checked} parameter rows, worst relative error {max_rel:.2e} <= 1e-4"),
        started,
    );
}

// --- criterion 2: loss descent across seeds ---

fn skewed_corpus(seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<f64> = (0..40).map(|i| 1.0 / (i as f64 + 1.0)).collect();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut total = 0.0;
    for w in &weights {
        total += w;
        cumulative.push(total);
    }
    (0..200)
        .map(|_| {
            let len = rng.gen_range(4..=8);
            (0..len)
                .map(|_| {
                    let x = rng.gen_range(0.0..total);
                    let idx = cumulative.partition_point(|&c| c <= x).min(39);
                    format!("t{idx:02}")
                })
                .collect()
        })
        .collect()
}

#[test]
fn criterion_02_training_loss_descends() {
    let started = Instant::now();
    let mut descended = 0;
    let mut first_last = Vec::new();
    for seed in 0..20u64 {
        let corpus = skewed_corpus(1_000 + seed);
        let cfg = EmbeddingConfig {
            dim: 16,
            ngram_min: 3,
            ngram_max: 5,
            bucket_count: 2_048,
            window: 3,
            negatives: 3,
            epochs: 4,
            learning_rate: 0.05,
            min_count: 1,
            seed,
        };
        let (_, stats) = train_with_stats(&corpus, &cfg, 1).expect("training succeeds");
        let first = stats.epoch_mean_loss[0];
        let last = *stats.epoch_mean_loss.last().unwrap();
        if last < first {
            descended += 1;
        }
        first_last.push((first, last));
    }
    assert!(
        descended >= 19,
        "loss descended in only {descended}/20 seeds: {first_last:?}"
    );
    assert!(started.elapsed() < Duration::from_secs(60), "runtime budget exceeded");
    report_pass(
        "criterion 02 loss descent",
        &format!("first epoch > last epoch mean loss in {descended}/20 seeds (needs 19)"),
        started,
    );
}

// --- criterion 3: negative-sampling distribution ---

#[test]
fn criterion_03_negative_sampler_tracks_smoothed_unigram() {
    let started = Instant::now();
    let counts: [u64; 10] = [1_000, 700, 500, 350, 240, 160, 110, 70, 45, 25];
    let smoothed: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let total: f64 = smoothed.iter().sum();

    let sampler = NegativeSampler::new(&counts);
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let draws = 1_000_000usize;
    let mut tally = [0u64; 10];
    for _ in 0..draws {
        tally[sampler.sample(&mut rng)] += 1;
    }
    let mut worst = 0.0f64;
    for (i, &hits) in tally.iter().enumerate() {
        let expected = smoothed[i] / total;
        let observed = hits as f64 / draws as f64;
        let gap = (observed - expected).abs();
        worst = worst.max(gap);
        assert!(
            gap <= 0.01,
            "word {i}: observed {observed:.4}, expected {expected:.4}"
        );
    }
    assert!(started.elapsed() < Duration::from_secs(10), "runtime budget exceeded");
    report_pass(
        "criterion 03 negative sampling",
        &format!("1e6 draws, worst absolute gap {worst:.5} <= 0.01"),
        started,
    );
}

// --- criteria 4 and 5: matcher oracle equivalence and scale invariance ---

struct MatchFixture {
    model: EmbeddingModel,
    schema: CategorySchema,
    tokens: Vec<String>,
    cfg: MatcherConfig,
}

fn random_match_fixture(rng: &mut ChaCha8Rng) -> MatchFixture {
    let dim = 3;
    // Two all-zero vectors and two tokens that are not in the model at
    // all keep the zero-exclusion paths honest.
    let pairs: Vec<(String, Vec<f64>)> = (0..14)
        .map(|w| {
            let vector = if w == 3 || w == 9 {
                vec![0.0; dim]
            } else {
                (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
            };
            (format!("w{w:02}"), vector)
        })
        .collect();
    let model = EmbeddingModel::from_word_vectors(pairs).expect("distinct words");
    let pool: Vec<String> = (0..14)
        .map(|w| format!("w{w:02}"))
        .chain(["zz1".to_string(), "zz2".to_string()])
        .collect();

    let attribute_count = rng.gen_range(1..=10);
    let attributes = (0..attribute_count)
        .map(|a| {
            let values: Vec<String> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    (0..rng.gen_range(1..=2))
                        .map(|_| pool[rng.gen_range(0..pool.len())].clone())
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            AttributeDef::new(&format!("attr{a:02}"), values)
        })
        .collect();
    let schema = CategorySchema {
        category_id: "cat".to_string(),
        attributes,
    };
    let tokens: Vec<String> = (0..rng.gen_range(0..=8))
        .map(|_| pool[rng.gen_range(0..pool.len())].clone())
        .collect();
    let cfg = MatcherConfig {
        threshold: rng.gen_range(-0.1..0.85),
        per_sentence_top: rng.gen_range(1..=3),
        include_name: rng.gen_bool(0.5),
    };
    MatchFixture {
        model,
        schema,
        tokens,
        cfg,
    }
}

/// Exhaustive reference matcher, reimplemented from the published
/// contract: mean-pool skipping zero vectors (values first pooled per
/// value), cosine, sort by score descending then name, filter by
/// threshold, truncate.
fn oracle_match(fx: &MatchFixture) -> Vec<(String, f64)> {
    fn mean(vectors: Vec<Vec<f64>>, dim: usize) -> Vec<f64> {
        let mut acc = vec![0.0; dim];
        let mut n = 0usize;
        for v in vectors {
            if v.iter().all(|&x| x == 0.0) {
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
    fn cosine(u: &[f64], v: &[f64]) -> f64 {
        let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
        let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nv: f64 = v.iter().map(|b| b * b).sum::<f64>().sqrt();
        if nu == 0.0 || nv == 0.0 {
            0.0
        } else {
            dot / (nu * nv)
        }
    }

    let dim = fx.model.dim();
    let sentence = mean(
        fx.tokens.iter().map(|t| fx.model.word_vector(t)).collect(),
        dim,
    );
    let mut scored: Vec<(String, f64)> = fx
        .schema
        .attributes
        .iter()
        .map(|att| {
            let mut pooled: Vec<Vec<f64>> = att
                .values
                .iter()
                .map(|v| {
                    mean(
                        v.split_whitespace()
                            .map(|t| fx.model.word_vector(t))
                            .collect(),
                        dim,
                    )
                })
                .collect();
            if fx.cfg.include_name {
                pooled.push(mean(
                    att.name.iter().map(|t| fx.model.word_vector(t)).collect(),
                    dim,
                ));
            }
            let attribute = mean(pooled, dim);
            (att.name_key(), cosine(&sentence, &attribute))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored
        .into_iter()
        .filter(|&(_, s)| s >= fx.cfg.threshold)
        .take(fx.cfg.per_sentence_top)
        .collect()
}

#[test]
fn criterion_04_matcher_equals_exhaustive_oracle() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut emitted = 0usize;
    for case in 0..100 {
        let fx = random_match_fixture(&mut rng);
        let matcher = CategoryMatcher::new(&fx.schema, &fx.model, fx.cfg.include_name);
        let got = matcher.match_tokens(&fx.tokens, &fx.model, &fx.cfg);
        let want = oracle_match(&fx);
        assert_eq!(
            got.len(),
            want.len(),
            "case {case}: record count differs (got {got:?}, want {want:?})"
        );
        for ((gn, gs), (wn, ws)) in got.iter().zip(&want) {
            assert_eq!(gn, wn, "case {case}: attribute order differs");
            assert_eq!(
                gs.to_bits(),
                ws.to_bits(),
                "case {case}: score differs for {gn}: {gs} vs {ws}"
            );
        }
        emitted += got.len();
    }
    assert!(emitted > 0, "fixtures never produced a match record");
    assert!(started.elapsed() < Duration::from_secs(5), "runtime budget exceeded");
    report_pass(
        "criterion 04 matcher oracle equivalence",
        &format!("100 fixtures, {emitted} records, exact name and bit-level score equality"),
        started,
    );
}

#[test]
fn criterion_05_match_records_survive_uniform_rescaling() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut compared = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let fx = random_match_fixture(&mut rng);
        let sentence = CleanSentence {
            enquiry_id: "e".to_string(),
            category_id: fx.schema.category_id.clone(),
            sentence_index: 0,
            tokens: fx.tokens.clone(),
        };
        let base = match_sentence(&sentence, &fx.schema, &fx.model, &fx.cfg);
        for c in [0.5, 3.0] {
            let mut scaled = fx.model.clone();
            scaled.scale(c);
            let got = match_sentence(&sentence, &fx.schema, &scaled, &fx.cfg);
            assert_eq!(base.len(), got.len(), "record set changed under scale {c}");
            for (a, b) in base.iter().zip(&got) {
                assert_eq!(a.attribute, b.attribute, "attribute set changed under scale {c}");
                let gap = (a.score - b.score).abs();
                worst = worst.max(gap);
                assert!(gap <= 1e-9, "score moved {gap:.2e} under scale {c}");
                compared += 1;
            }
        }
    }
    report_pass(
        "criterion 05 scale invariance",
        &format!("{compared} records at c in {{0.5, 3.0}}, worst score drift {worst:.2e} <= 1e-9"),
        started,
    );
}

// --- criterion 6: keyword graph ranking vs dense power iteration ---

fn dense_reference(graph: &CooccurrenceGraph) -> BTreeMap<String, f64> {
    let tokens: Vec<String> = graph.tokens().map(str::to_string).collect();
    let n = tokens.len();
    let weight = |i: usize, j: usize| graph.weight(&tokens[i], &tokens[j]) as f64;
    let strength: Vec<f64> = (0..n).map(|j| (0..n).map(|i| weight(i, j)).sum()).collect();
    let mut scores = vec![1.0; n];
    for _ in 0..50_000 {
        let mut next = vec![0.15; n];
        for (i, slot) in next.iter_mut().enumerate() {
            for j in 0..n {
                let w = weight(j, i);
                if w > 0.0 && strength[j] > 0.0 {
                    *slot += 0.85 * w / strength[j] * scores[j];
                }
            }
        }
        let delta = next
            .iter()
            .zip(&scores)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        scores = next;
        if delta < 1e-14 {
            break;
        }
    }
    tokens.into_iter().zip(scores).collect()
}

#[test]
fn criterion_06_textrank_matches_dense_power_iteration() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    // Tight tolerance so the iterative stop rule cannot hide more than
    // 1e-6 of distance to the fixed point.
    let cfg = TextRankConfig {
        tolerance: 1e-10,
        max_iterations: 5_000,
        ..TextRankConfig::default()
    };
    let mut worst = 0.0f64;
    for case in 0..50 {
        let n = 2 + (case % 11);
        let mut graph = CooccurrenceGraph::new(4);
        let names: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
        for name in &names {
            graph.add_node(name);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.4) {
                    graph.add_edge(&names[i], &names[j], rng.gen_range(1..=5));
                }
            }
        }
        let result = textrank(&graph, &cfg);
        assert!(result.converged, "case {case} failed to converge");
        let reference = dense_reference(&graph);
        for (token, want) in &reference {
            let got = result.scores[token];
            let gap = (got - want).abs();
            worst = worst.max(gap);
            assert!(gap <= 1e-6, "case {case} node {token}: {got} vs {want}");
        }
    }

    // Two symmetric nodes earn identical scores.
    let mut two = CooccurrenceGraph::new(4);
    two.add_edge("left", "right", 7);
    let scores = textrank(&two, &cfg).scores;
    assert!((scores["left"] - scores["right"]).abs() <= 1e-12);

    // An isolated node holds exactly 1 - damping.
    let mut lonely = CooccurrenceGraph::new(4);
    lonely.add_node("alone");
    lonely.add_edge("left", "right", 1);
    let scores = textrank(&lonely, &cfg).scores;
    assert!((scores["alone"] - 0.15).abs() <= 1e-12);

    report_pass(
        "criterion 06 graph ranking oracle",
        &format!("50 random graphs <= 12 nodes, worst node gap {worst:.2e} <= 1e-6; symmetry and isolation pinned"),
        started,
    );
}

// --- criterion 7: evaluator arithmetic against the reference table ---

/// Reference benchmark fixture: fourteen categories, four ranking
/// methods, per-category precision/recall/F1 as printed (two decimals),
/// plus each method's printed average row.
struct ReferenceMethod {
    method: &'static str,
    rows: [(f64, f64, f64); 14],
    average: (f64, f64, f64),
}

const REFERENCE_TABLE: [ReferenceMethod; 4] = [
    ReferenceMethod {
        method: "textrank",
        rows: [
            (0.40, 0.25, 0.31),
            (0.40, 0.22, 0.29),
            (0.60, 0.50, 0.55),
            (0.40, 0.25, 0.31),
            (0.20, 0.04, 0.07),
            (0.20, 0.07, 0.11),
            (0.20, 0.07, 0.11),
            (0.40, 0.11, 0.17),
            (0.00, 0.00, 0.00),
            (0.00, 0.00, 0.00),
            (0.00, 0.00, 0.00),
            (0.80, 0.25, 0.38),
            (0.40, 0.29, 0.33),
            (0.20, 0.07, 0.11),
        ],
        average: (0.30, 0.15, 0.20),
    },
    ReferenceMethod {
        method: "wordvec",
        rows: [
            (0.60, 0.38, 0.46),
            (1.00, 0.56, 0.71),
            (0.80, 0.67, 0.73),
            (0.60, 0.38, 0.46),
            (0.80, 0.17, 0.28),
            (0.50, 0.07, 0.12),
            (0.40, 0.14, 0.21),
            (1.00, 0.22, 0.36),
            (0.40, 0.18, 0.25),
            (1.00, 0.50, 0.67),
            (0.60, 0.20, 0.30),
            (0.40, 0.12, 0.19),
            (0.75, 0.43, 0.55),
            (0.60, 0.21, 0.32),
        ],
        average: (0.68, 0.30, 0.42),
    },
    ReferenceMethod {
        method: "glove",
        rows: [
            (0.60, 0.38, 0.46),
            (1.00, 0.56, 0.71),
            (0.80, 0.67, 0.73),
            (1.00, 0.62, 0.77),
            (0.80, 0.17, 0.28),
            (0.60, 0.21, 0.32),
            (0.60, 0.21, 0.32),
            (0.80, 0.22, 0.35),
            (0.40, 0.18, 0.25),
            (0.75, 0.50, 0.60),
            (0.60, 0.20, 0.30),
            (0.60, 0.19, 0.29),
            (0.80, 0.57, 0.67),
            (0.40, 0.14, 0.21),
        ],
        average: (0.70, 0.34, 0.46),
    },
    ReferenceMethod {
        method: "subword",
        rows: [
            (0.60, 0.38, 0.46),
            (1.00, 0.56, 0.71),
            (0.80, 0.67, 0.73),
            (1.00, 0.62, 0.77),
            (0.80, 0.17, 0.28),
            (0.60, 0.21, 0.32),
            (0.60, 0.21, 0.32),
            (0.80, 0.22, 0.35),
            (0.40, 0.18, 0.25),
            (1.00, 0.50, 0.67),
            (0.80, 0.27, 0.40),
            (0.60, 0.19, 0.29),
            (0.75, 0.43, 0.55),
            (0.60, 0.21, 0.32),
        ],
        average: (0.74, 0.34, 0.47),
    },
];

#[test]
fn criterion_07_average_row_matches_reference_table() {
    let started = Instant::now();
    let tolerance = 0.01 + 1e-9;
    for method in &REFERENCE_TABLE {
        let rows: Vec<CategoryEval> = method
            .rows
            .iter()
            .enumerate()
            .map(|(i, &(precision, recall, f1))| {
                // The printed per-row F1 must agree with the harmonic
                // mean of the printed precision and recall.
                let recomputed = f1_of(precision, recall);
                assert!(
                    (recomputed - f1).abs() <= tolerance,
                    "{} row {i}: F1 {recomputed:.4} vs printed {f1}",
                    method.method
                );
                CategoryEval {
                    category_id: format!("cat{i:02}"),
                    precision,
                    recall,
                    f1,
                }
            })
            .collect();
        let eval = MethodEval::from_rows(method.method, rows);
        let (p, r, f1) = eval.average();
        let (wp, wr, wf1) = method.average;
        assert!((p - wp).abs() <= tolerance, "{}: average P {p:.4} vs {wp}", method.method);
        assert!((r - wr).abs() <= tolerance, "{}: average R {r:.4} vs {wr}", method.method);
        assert!((f1 - wf1).abs() <= tolerance, "{}: average F1 {f1:.4} vs {wf1}", method.method);
    }
    // The strongest row is pinned explicitly.
    let subword = &REFERENCE_TABLE[3];
    let rows: Vec<CategoryEval> = subword
        .rows
        .iter()
        .enumerate()
        .map(|(i, &(precision, recall, f1))| CategoryEval {
            category_id: format!("cat{i:02}"),
            precision,
            recall,
            f1,
        })
        .collect();
    let (p, r, f1) = MethodEval::from_rows("subword", rows).average();
    assert!((p - 0.74).abs() <= tolerance);
    assert!((r - 0.34).abs() <= tolerance);
    assert!((f1 - 0.47).abs() <= tolerance);

    assert!(started.elapsed() < Duration::from_secs(1), "runtime budget exceeded");
    report_pass(
        "criterion 07 evaluator arithmetic",
        "4 methods x 14 categories reproduce every printed average cell within 0.01",
        started,
    );
}

// --- criteria 8 and 9: synthetic end-to-end recovery ---

#[test]
fn criterion_08_synthetic_recovery_beats_whole_word_baseline() {
    let started = Instant::now();
    let outcome = synth::outcome();
    assert!(
        outcome.elapsed < Duration::from_secs(300),
        "pipeline took {:?}, budget is 5 minutes",
        outcome.elapsed
    );
    assert!(
        outcome.subword_f1 >= 0.90,
        "subword macro F1 {:.4} < 0.90",
        outcome.subword_f1
    );
    assert!(
        outcome.subword_f1 > outcome.wordvec_f1,
        "subword {:.4} must beat the whole-word baseline {:.4}",
        outcome.subword_f1,
        outcome.wordvec_f1
    );
    report_pass(
        "criterion 08 synthetic recovery",
        &format!(
            "subword macro F1 {:.4} >= 0.90 and > whole-word {:.4} (corpus+3 runs in {:.1?})",
            outcome.subword_f1, outcome.wordvec_f1, outcome.elapsed
        ),
        started,
    );
}

#[test]
fn criterion_09_method_ordering_on_synthetic_corpus() {
    let started = Instant::now();
    let outcome = synth::outcome();
    assert!(
        outcome.subword_f1 >= outcome.wordvec_f1,
        "subword {:.4} < wordvec {:.4}",
        outcome.subword_f1,
        outcome.wordvec_f1
    );
    assert!(
        outcome.wordvec_f1 > outcome.textrank_f1,
        "wordvec {:.4} must beat textrank {:.4}",
        outcome.wordvec_f1,
        outcome.textrank_f1
    );
    report_pass(
        "criterion 09 method ordering",
        &format!(
            "macro F1 subword {:.4} >= wordvec {:.4} > textrank {:.4}",
            outcome.subword_f1, outcome.wordvec_f1, outcome.textrank_f1
        ),
        started,
    );
}

// --- criterion 10: preprocessing fidelity ---

const FIXTURE_CATEGORIES: &str = r#"{"category_id":"bags","attributes":[{"name":"Color","values":["red","blue","dark green"]},{"name":"Type","values":["tote","backpack"]},{"name":"Product Type","values":["backpack","duffel"]},{"name":"Weight","values":["1 kg","2 kg"]}]}
{"category_id":"phones","attributes":[{"name":"Screen Size","values":["5 inch","6 inch"]},{"name":"Battery","values":["3000 mah"]},{"name":"Color","values":["black","white"]}]}
{"category_id":"toys","attributes":[{"name":"Material","values":["plastic","wood"]},{"name":"Age","values":["3 years"]}]}
"#;

const FIXTURE_ENQUIRIES: &str = r#"{"enquiry_id":"e01","category_id":"bags","text":"Hello, is the bag red or blue?<br>And how heavy is it, 1 kg or 2 kg?"}
{"enquiry_id":"e02","category_id":"bags","text":"I like the blue tote. Can you ship the red backpack instead?"}
{"enquiry_id":"e03","category_id":"bags","text":"Is the blu one a tote or a backpack? I need dark green."}
{"enquiry_id":"e04","category_id":"bags","text":"What weight is the duffel, 1 kg?"}
{"enquiry_id":"e05","category_id":"phones","text":"What battery does it use? Is it 3000 mah?"}
{"enquiry_id":"e06","category_id":"phones","text":"Do you sell black or white phones with a 5 inch screen?"}
{"enquiry_id":"e07","category_id":"phones","text":"Black please, with the 6 inch screen &amp; a good battery."}
{"enquiry_id":"e08","category_id":"toys","text":"Is it plastic or wood? My kid is 3 years old."}
{"enquiry_id":"e09","category_id":"toys","text":"Looking for wood toys, not plastic ones."}
{"enquiry_id":"e10","category_id":"toys","text":"Wood or plastic, which is safer for 3 years?"}
{"enquiry_id":"e11","category_id":"bags","text":"buy now http://spam.example http://more.example http://again.example"}
{"enquiry_id":"e12","category_id":"phones","text":"Это сообщение написано на русском языке"}
{"enquiry_id":"e13","category_id":"toys","text":"   <br>  "}
{"enquiry_id":"e14","category_id":"nonexistent","text":"Does this category even exist?"}
"#;

const FIXTURE_LABELS: &str = r#"{"category_id":"bags","important_attributes":["Color","Weight"]}
{"category_id":"phones","important_attributes":["Battery","Color"]}
{"category_id":"toys","important_attributes":["Material"]}
"#;

const FIXTURE_CONFIG: &str = r#"workers = 1

[paths]
categories = "categories.jsonl"
enquiries = "enquiries.jsonl"
labels = "labels.jsonl"
workdir = "work"

[preprocess]
vocab_min_freq = 2

[embedding]
dim = 16
ngram_min = 3
ngram_max = 5
bucket_count = 512
window = 3
negatives = 3
epochs = 3
learning_rate = 0.05
min_count = 1
seed = 11

[matcher]
threshold = 0.3

[ranker]
top_k = 2
"#;

fn write_fixture(root: &Path) {
    std::fs::write(root.join("categories.jsonl"), FIXTURE_CATEGORIES).unwrap();
    std::fs::write(root.join("enquiries.jsonl"), FIXTURE_ENQUIRIES).unwrap();
    std::fs::write(root.join("labels.jsonl"), FIXTURE_LABELS).unwrap();
    std::fs::write(root.join("config.toml"), FIXTURE_CONFIG).unwrap();
}

#[test]
fn criterion_10_preprocessing_fidelity() {
    let started = Instant::now();
    let stops = StopWordList::builtin();
    let units = UnitLexicon::builtin();
    let vocab = Vocabulary::new();

    let norm = |text: &str| normalize(text, &stops, &units, &vocab);
    assert_eq!(norm("15.3 kg"), ["#number#", "kilogram"]);
    assert_eq!(norm("220 V"), ["#number#", "volt"]);
    // Fused number-unit tokens take the same path.
    assert_eq!(norm("15.3kg"), ["#number#", "kilogram"]);
    // Idempotence on the pinned examples.
    for text in ["15.3 kg", "220 V"] {
        let once = norm(text);
        assert_eq!(norm(&once.join(" ")), once);
    }

    // "type" absorbs "product type"; values merge.
    let merged = merge_attributes(vec![
        AttributeDef::new("Type", ["tote".to_string(), "backpack".to_string()]),
        AttributeDef::new(
            "Product Type",
            ["backpack".to_string(), "duffel".to_string()],
        ),
    ]);
    assert_eq!(merged.len(), 1, "the two attributes must merge into one");
    assert_eq!(merged[0].name_key(), "type");
    let values: BTreeSet<&str> = merged[0].values.iter().map(String::as_str).collect();
    assert_eq!(values, BTreeSet::from(["tote", "backpack", "duffel"]));

    // Byte determinism: the same inputs preprocessed in two different
    // directories produce identical artifacts, twice over.
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    write_fixture(dir_a.path());
    write_fixture(dir_b.path());
    let cfg_a = kgattr::pipeline::load_config(&dir_a.path().join("config.toml")).unwrap();
    let cfg_b = kgattr::pipeline::load_config(&dir_b.path().join("config.toml")).unwrap();

    kgattr::pipeline::cmd_preprocess(&cfg_a).unwrap();
    let sentences_first = std::fs::read(dir_a.path().join("work/vs.jsonl")).unwrap();
    let schema_first = std::fs::read(dir_a.path().join("work/schema.jsonl")).unwrap();
    kgattr::pipeline::cmd_preprocess(&cfg_a).unwrap();
    assert_eq!(sentences_first, std::fs::read(dir_a.path().join("work/vs.jsonl")).unwrap());
    assert_eq!(schema_first, std::fs::read(dir_a.path().join("work/schema.jsonl")).unwrap());

    kgattr::pipeline::cmd_preprocess(&cfg_b).unwrap();
    assert_eq!(sentences_first, std::fs::read(dir_b.path().join("work/vs.jsonl")).unwrap());
    assert_eq!(schema_first, std::fs::read(dir_b.path().join("work/schema.jsonl")).unwrap());

    report_pass(
        "criterion 10 preprocessing fidelity",
        "pinned number/unit examples, type merge, idempotence, byte-identical reruns",
        started,
    );
}

// --- criterion 11: pipeline vs staged vs rerun, through the binary ---

fn run_binary(root: &Path, args: &[&str]) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kgattr"));
    cmd.args(args);
    cmd.arg("--config").arg(root.join("config.toml"));
    let out = cmd.output().expect("binary runs");
    assert_eq!(
        out.status.code(),
        Some(0),
        "kgattr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

const STAGE_ARTIFACTS: [&str; 8] = [
    "vs.jsonl",
    "schema.jsonl",
    "model.vec",
    "words.vec",
    "matches.subword.jsonl",
    "ranked.subword.jsonl",
    "report.subword.tsv",
    "report.subword.jsonl",
];

fn artifact_bytes(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    STAGE_ARTIFACTS
        .iter()
        .map(|name| {
            let path = root.join("work").join(name);
            let bytes = std::fs::read(&path)
                .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
            (PathBuf::from(name), bytes)
        })
        .collect()
}

#[test]
fn criterion_11_pipeline_staged_and_rerun_byte_identical() {
    let started = Instant::now();
    let staged_dir = tempfile::tempdir().unwrap();
    let piped_dir = tempfile::tempdir().unwrap();
    write_fixture(staged_dir.path());
    write_fixture(piped_dir.path());

    for stage in ["preprocess", "train", "match", "rank", "eval"] {
        run_binary(staged_dir.path(), &[stage]);
    }
    run_binary(piped_dir.path(), &["pipeline"]);

    let staged = artifact_bytes(staged_dir.path());
    let piped = artifact_bytes(piped_dir.path());
    for ((name, a), (_, b)) in staged.iter().zip(&piped) {
        assert_eq!(a, b, "{} differs between staged and pipeline runs", name.display());
    }

    // A rerun with the same seed reproduces every artifact byte.
    run_binary(piped_dir.path(), &["pipeline"]);
    let rerun = artifact_bytes(piped_dir.path());
    for ((name, a), (_, b)) in piped.iter().zip(&rerun) {
        assert_eq!(a, b, "{} differs across pipeline reruns", name.display());
    }

    report_pass(
        "criterion 11 determinism and composition",
        &format!("{} artifacts byte-identical across staged, pipeline, and rerun", STAGE_ARTIFACTS.len()),
        started,
    );
}
