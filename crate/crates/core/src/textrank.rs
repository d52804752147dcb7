//! Keyword extraction over a token co-occurrence graph, plus the
//! keyword-to-attribute comparison baseline built on it.
//!
//! Tokens that appear within a sliding window inside one sentence gain
//! an undirected edge weight; scores then follow the damped weighted
//! ranking iteration S(i) = (1−d) + d·Σ_j w_ji/Σ_k w_jk·S(j), run
//! synchronously from a uniform start until the largest score change
//! drops below tolerance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg_store::CategorySchema;
use crate::ranker::{RankedAttribute, RankedAttributes};

fn default_window() -> usize {
    4
}

fn default_damping() -> f64 {
    0.85
}

fn default_tolerance() -> f64 {
    1e-6
}

fn default_max_iterations() -> usize {
    100
}

fn default_top_keywords() -> usize {
    50
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextRankConfig {
    /// Tokens closer than this many positions co-occur.
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    /// Keywords compared against attribute tokens.
    #[serde(default = "default_top_keywords")]
    pub top_keywords: usize,
}

impl Default for TextRankConfig {
    fn default() -> Self {
        TextRankConfig {
            window: default_window(),
            damping: default_damping(),
            tolerance: default_tolerance(),
            max_iterations: default_max_iterations(),
            top_keywords: default_top_keywords(),
        }
    }
}

impl TextRankConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.window == 0 {
            problems.push("window must be at least 1".to_string());
        }
        if !(0.0..1.0).contains(&self.damping) {
            problems.push(format!("damping must lie in [0, 1), got {}", self.damping));
        }
        if !(self.tolerance > 0.0) {
            problems.push(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_iterations == 0 {
            problems.push("max_iterations must be at least 1".to_string());
        }
        if self.top_keywords == 0 {
            problems.push("top_keywords must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Undirected token co-occurrence graph with positive integer edge
/// weights and no self-edges.
#[derive(Debug, Clone)]
pub struct CooccurrenceGraph {
    window: usize,
    index: BTreeMap<String, usize>,
    tokens: Vec<String>,
    adj: Vec<BTreeMap<usize, u64>>,
}

impl CooccurrenceGraph {
    pub fn new(window: usize) -> Self {
        CooccurrenceGraph {
            window: window.max(1),
            index: BTreeMap::new(),
            tokens: Vec::new(),
            adj: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn add_node(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.index.insert(token.to_string(), i);
        self.tokens.push(token.to_string());
        self.adj.push(BTreeMap::new());
        i
    }

    /// Adds symmetric edge weight; self-edges are ignored.
    pub fn add_edge(&mut self, a: &str, b: &str, weight: u64) {
        if a == b || weight == 0 {
            return;
        }
        let ia = self.add_node(a);
        let ib = self.add_node(b);
        *self.adj[ia].entry(ib).or_insert(0) += weight;
        *self.adj[ib].entry(ia).or_insert(0) += weight;
    }

    /// Every unordered in-window token pair of the sentence gains +1.
    /// Sentences never bridge: co-occurrence exists only inside one
    /// call.
    pub fn add_sentence(&mut self, tokens: &[String]) {
        for token in tokens {
            self.add_node(token);
        }
        for i in 0..tokens.len() {
            for j in (i + 1)..tokens.len().min(i + self.window) {
                self.add_edge(&tokens[i], &tokens[j], 1);
            }
        }
    }

    pub fn weight(&self, a: &str, b: &str) -> u64 {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&ia), Some(&ib)) => self.adj[ia].get(&ib).copied().unwrap_or(0),
            _ => 0,
        }
    }

    /// Total weight over unordered pairs.
    pub fn total_edge_weight(&self) -> u64 {
        self.adj
            .iter()
            .map(|nbrs| nbrs.values().sum::<u64>())
            .sum::<u64>()
            / 2
    }
}

/// Builds the co-occurrence graph of a category's sentences.
pub fn build_graph<'a>(
    sentences: impl IntoIterator<Item = &'a [String]>,
    window: usize,
) -> CooccurrenceGraph {
    let mut graph = CooccurrenceGraph::new(window);
    for sentence in sentences {
        graph.add_sentence(sentence);
    }
    graph
}

#[derive(Debug, Clone)]
pub struct TextRankScores {
    pub scores: BTreeMap<String, f64>,
    /// Iterations actually run.
    pub iterations: usize,
    /// False when max_iterations elapsed before the tolerance was met.
    pub converged: bool,
}

/// Runs the ranking iteration until the largest absolute score change
/// drops below tolerance. Isolated nodes settle at 1 − damping.
pub fn textrank(graph: &CooccurrenceGraph, cfg: &TextRankConfig) -> TextRankScores {
    let n = graph.node_count();
    if n == 0 {
        return TextRankScores {
            scores: BTreeMap::new(),
            iterations: 0,
            converged: true,
        };
    }
    let strength: Vec<f64> = graph
        .adj
        .iter()
        .map(|nbrs| nbrs.values().sum::<u64>() as f64)
        .collect();
    let base = 1.0 - cfg.damping;
    let mut scores = vec![1.0; n];
    let mut next = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        for i in 0..n {
            let mut sum = 0.0;
            for (&j, &w) in &graph.adj[i] {
                sum += w as f64 / strength[j] * scores[j];
            }
            next[i] = base + cfg.damping * sum;
        }
        let delta = scores
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut scores, &mut next);
        if delta < cfg.tolerance {
            converged = true;
            break;
        }
    }
    TextRankScores {
        scores: graph
            .tokens
            .iter()
            .cloned()
            .zip(scores.iter().copied())
            .collect(),
        iterations,
        converged,
    }
}

/// Ranks a category's attributes by comparing its top keywords against
/// attribute name and value tokens (exact token match). Attributes
/// order by their best-matching keyword's rank, ties by name; an
/// attribute that matches no keyword is absent entirely.
pub fn textrank_attributes(
    scores: &TextRankScores,
    schema: &CategorySchema,
    cfg: &TextRankConfig,
    top_k: usize,
) -> RankedAttributes {
    let mut ranked: Vec<(&str, f64)> = scores
        .scores
        .iter()
        .map(|(t, &s)| (t.as_str(), s))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cfg.top_keywords);
    let keyword_rank: BTreeMap<&str, (usize, f64)> = ranked
        .iter()
        .enumerate()
        .map(|(rank, &(token, score))| (token, (rank, score)))
        .collect();

    let mut matched: Vec<(usize, RankedAttribute)> = Vec::new();
    for att in &schema.attributes {
        let tokens = att
            .name
            .iter()
            .map(String::as_str)
            .chain(att.values.iter().flat_map(|v| v.split_whitespace()));
        let mut best: Option<(usize, f64)> = None;
        let mut hits: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
        for token in tokens {
            if let Some(&(rank, score)) = keyword_rank.get(token) {
                hits.insert(token);
                if best.map_or(true, |(r, _)| rank < r) {
                    best = Some((rank, score));
                }
            }
        }
        if let Some((rank, score)) = best {
            matched.push((
                rank,
                RankedAttribute {
                    attribute: att.name_key(),
                    match_count: hits.len() as u64,
                    mean_score: score,
                },
            ));
        }
    }
    matched.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.attribute.cmp(&b.1.attribute)));
    let full_ranking: Vec<RankedAttribute> = matched.into_iter().map(|(_, e)| e).collect();
    let selected = full_ranking
        .iter()
        .take(top_k)
        .map(|e| e.attribute.clone())
        .collect();
    RankedAttributes {
        category_id: schema.category_id.clone(),
        method: "textrank".into(),
        selected,
        full_ranking,
    }
}
