//! Stage orchestration: configuration, file artifacts between stages,
//! and the command implementations behind the CLI.
//!
//! Stages hand data to each other exclusively through files in the
//! working directory, so any prefix of the pipeline can be rerun
//! without repeating the rest, and a full pipeline run is byte-for-byte
//! identical to running the stages one at a time.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::embedding::{
    load_pretrained, load_pretrained_with, save, save_composed_word_vectors, train_with_stats,
    EmbeddingConfig, EmbeddingModel, TrainStats,
};
use crate::error::{Error, Result};
use crate::evaluator::{evaluate, render_report, report_lines, MethodEval};
use crate::kg_store::{
    load_categories, load_enquiries, load_ground_truth, AttributeDef, CategorySchema,
};
use crate::matcher::{round_score, CategoryMatcher, MatchRecord, MatcherConfig};
use crate::preprocess::{
    normalize_without_spelling, run_preprocess, with_pool, CleanSentence, PreprocessConfig,
    StageCounts, StopWordList, UnitLexicon,
};
use crate::ranker::{aggregate, RankedAttributes, RankerConfig};
use crate::textrank::{build_graph, textrank, textrank_attributes, TextRankConfig};

/// Which attribute-ranking method a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Character n-gram subword embeddings trained on the corpus.
    Subword,
    /// Whole-word vectors (externally trained or the composed export of
    /// a subword model); out-of-vocabulary words become zero vectors.
    Wordvec,
    /// Keyword extraction over the co-occurrence graph.
    Textrank,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Subword => "subword",
            Method::Wordvec => "wordvec",
            Method::Textrank => "textrank",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subword" => Ok(Method::Subword),
            "wordvec" => Ok(Method::Wordvec),
            "textrank" => Ok(Method::Textrank),
            other => Err(Error::Usage(format!(
                "unknown method {other:?} (expected subword, wordvec, or textrank)"
            ))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    /// Category schema input (JSON lines).
    pub categories: PathBuf,
    /// Enquiry input (JSON lines).
    pub enquiries: PathBuf,
    /// Labelled important attributes; required only by eval.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Stop word list; a built-in English list applies when unset.
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    /// Unit alias table; a built-in table applies when unset.
    #[serde(default)]
    pub units: Option<PathBuf>,
    /// Pretrained whole-word vectors for the wordvec method; when
    /// unset, wordvec falls back to the composed export of the trained
    /// subword model.
    #[serde(default)]
    pub vectors: Option<PathBuf>,
    /// Directory all stage artifacts live in.
    pub workdir: PathBuf,
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub embedding: EmbeddingConfig,
    #[serde(default)]
    pub matcher: MatcherConfig,
    #[serde(default)]
    pub ranker: RankerConfig,
    #[serde(default)]
    pub textrank: TextRankConfig,
    /// Worker threads for preprocess and match. Only 1 guarantees
    /// byte-identical training output.
    #[serde(default = "default_workers")]
    pub workers: usize,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.embedding.validate()?;
        self.matcher.validate()?;
        self.ranker.validate()?;
        self.textrank.validate()?;
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        fix(&mut self.paths.categories);
        fix(&mut self.paths.enquiries);
        for opt in [
            &mut self.paths.labels,
            &mut self.paths.stopwords,
            &mut self.paths.units,
            &mut self.paths.vectors,
        ] {
            if let Some(p) = opt.as_mut() {
                fix(p);
            }
        }
        fix(&mut self.paths.workdir);
    }
}

/// Parses a TOML configuration file. Relative paths inside it resolve
/// against the file's own directory.
pub fn load_config(path: &Path) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg: PipelineConfig = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    cfg.resolve_paths(base);
    cfg.validate()?;
    Ok(cfg)
}

/// Paths of the files stages exchange inside the working directory.
pub struct Artifacts {
    workdir: PathBuf,
}

impl Artifacts {
    pub fn new(workdir: &Path) -> Self {
        Artifacts {
            workdir: workdir.to_path_buf(),
        }
    }

    pub fn sentences(&self) -> PathBuf {
        self.workdir.join("vs.jsonl")
    }

    pub fn schema(&self) -> PathBuf {
        self.workdir.join("schema.jsonl")
    }

    pub fn model(&self) -> PathBuf {
        self.workdir.join("model.vec")
    }

    pub fn word_vectors(&self) -> PathBuf {
        self.workdir.join("words.vec")
    }

    pub fn matches(&self, method: Method) -> PathBuf {
        self.workdir.join(format!("matches.{method}.jsonl"))
    }

    pub fn ranked(&self, method: Method) -> PathBuf {
        self.workdir.join(format!("ranked.{method}.jsonl"))
    }

    pub fn report_tsv(&self, method: Method) -> PathBuf {
        self.workdir.join(format!("report.{method}.tsv"))
    }

    pub fn report_jsonl(&self, method: Method) -> PathBuf {
        self.workdir.join(format!("report.{method}.jsonl"))
    }
}

fn require(path: &Path, producer: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            producer: producer.to_string(),
        })
    }
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let wrap = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(wrap)?);
    for item in items {
        let line = serde_json::to_string(&item)
            .map_err(|e| Error::Data(format!("serializing record: {e}")))?;
        out.write_all(line.as_bytes()).map_err(wrap)?;
        out.write_all(b"\n").map_err(wrap)?;
    }
    out.flush().map_err(wrap)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut items = Vec::new();
    for (number, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, number + 1, e.to_string()))?;
        items.push(item);
    }
    Ok(items)
}

/// One category of the normalized schema artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizedCategory {
    pub category_id: String,
    pub attributes: Vec<NormalizedAttribute>,
    /// Original normalized name → surviving merged name, for mapping
    /// external references through attribute merges.
    #[serde(default)]
    pub redirects: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizedAttribute {
    pub name: String,
    pub values: Vec<String>,
}

impl NormalizedCategory {
    fn to_schema(&self) -> CategorySchema {
        CategorySchema {
            category_id: self.category_id.clone(),
            attributes: self
                .attributes
                .iter()
                .map(|a| AttributeDef::new(&a.name, a.values.iter().cloned()))
                .collect(),
        }
    }
}

fn load_stopwords(cfg: &PipelineConfig) -> Result<StopWordList> {
    match &cfg.paths.stopwords {
        Some(path) => StopWordList::from_file(path),
        None => Ok(StopWordList::builtin()),
    }
}

fn load_units(cfg: &PipelineConfig) -> Result<UnitLexicon> {
    match &cfg.paths.units {
        Some(path) => UnitLexicon::from_file(path),
        None => Ok(UnitLexicon::builtin()),
    }
}

pub struct PreprocessSummary {
    pub counts: StageCounts,
    /// Enquiries referencing unknown categories (kept out of the run).
    pub dangling: usize,
    pub categories: usize,
    pub vocabulary_size: usize,
}

/// Loads inputs, cleans and normalizes everything, and writes the
/// sentence and schema artifacts.
pub fn cmd_preprocess(cfg: &PipelineConfig) -> Result<PreprocessSummary> {
    std::fs::create_dir_all(&cfg.paths.workdir)
        .map_err(|e| Error::io(&cfg.paths.workdir, e))?;
    let categories = load_categories(&cfg.paths.categories)?;
    let enquiries = load_enquiries(&cfg.paths.enquiries, &categories)?;
    let stops = load_stopwords(cfg)?;
    let units = load_units(cfg)?;
    let run = run_preprocess(
        &categories,
        &enquiries.enquiries,
        &stops,
        &units,
        &cfg.preprocess,
        cfg.workers,
    )?;

    let artifacts = Artifacts::new(&cfg.paths.workdir);
    write_jsonl(&artifacts.sentences(), run.sentences.iter())?;
    let empty = BTreeMap::new();
    let normalized: Vec<NormalizedCategory> = run
        .schema
        .iter()
        .map(|cat| NormalizedCategory {
            category_id: cat.category_id.clone(),
            attributes: cat
                .attributes
                .iter()
                .map(|a| NormalizedAttribute {
                    name: a.name_key(),
                    values: a.values.clone(),
                })
                .collect(),
            redirects: run.redirects.get(&cat.category_id).unwrap_or(&empty).clone(),
        })
        .collect();
    write_jsonl(&artifacts.schema(), normalized.iter())?;

    Ok(PreprocessSummary {
        counts: run.counts,
        dangling: enquiries.dangling,
        categories: run.schema.len(),
        vocabulary_size: run.vocabulary.len(),
    })
}

pub struct TrainSummary {
    pub vocabulary_size: usize,
    pub stats: TrainStats,
    pub model_path: PathBuf,
    pub word_vectors_path: PathBuf,
}

/// Trains subword vectors on the clean sentences and writes both the
/// full model and the composed per-word export.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainSummary> {
    let artifacts = Artifacts::new(&cfg.paths.workdir);
    require(&artifacts.sentences(), "preprocess")?;
    let sentences: Vec<CleanSentence> = read_jsonl(&artifacts.sentences())?;
    let corpus: Vec<Vec<String>> = sentences.into_iter().map(|s| s.tokens).collect();
    let (model, stats) = train_with_stats(&corpus, &cfg.embedding, cfg.workers)?;
    let model_path = artifacts.model();
    let word_vectors_path = artifacts.word_vectors();
    save(&model, &model_path)?;
    save_composed_word_vectors(&model, &word_vectors_path)?;
    Ok(TrainSummary {
        vocabulary_size: model.vocab().len(),
        stats,
        model_path,
        word_vectors_path,
    })
}

fn load_method_model(cfg: &PipelineConfig, method: Method) -> Result<EmbeddingModel> {
    let artifacts = Artifacts::new(&cfg.paths.workdir);
    match method {
        Method::Subword => {
            require(&artifacts.model(), "train")?;
            load_pretrained_with(
                &artifacts.model(),
                cfg.embedding.ngram_min,
                cfg.embedding.ngram_max,
            )
        }
        Method::Wordvec => match &cfg.paths.vectors {
            Some(path) => load_pretrained(path),
            None => {
                require(&artifacts.word_vectors(), "train")?;
                load_pretrained(&artifacts.word_vectors())
            }
        },
        Method::Textrank => Err(Error::Usage(
            "textrank does not use the matching stage; run `kgattr rank --method textrank`".into(),
        )),
    }
}

pub struct MatchSummary {
    pub sentences: usize,
    pub records: usize,
    pub path: PathBuf,
}

/// Scores every clean sentence against its category's attributes and
/// writes the thresholded match records.
pub fn cmd_match(cfg: &PipelineConfig, method: Method) -> Result<MatchSummary> {
    let model = load_method_model(cfg, method)?;
    let artifacts = Artifacts::new(&cfg.paths.workdir);
    require(&artifacts.sentences(), "preprocess")?;
    require(&artifacts.schema(), "preprocess")?;
    let sentences: Vec<CleanSentence> = read_jsonl(&artifacts.sentences())?;
    let schema: Vec<NormalizedCategory> = read_jsonl(&artifacts.schema())?;

    let matchers: BTreeMap<String, CategoryMatcher> = schema
        .iter()
        .map(|cat| {
            (
                cat.category_id.clone(),
                CategoryMatcher::new(&cat.to_schema(), &model, cfg.matcher.include_name),
            )
        })
        .collect();

    let per_sentence: Vec<Vec<MatchRecord>> = with_pool(cfg.workers, || {
        sentences
            .par_iter()
            .map(|sentence| {
                let Some(matcher) = matchers.get(&sentence.category_id) else {
                    return Vec::new();
                };
                matcher
                    .match_tokens(&sentence.tokens, &model, &cfg.matcher)
                    .into_iter()
                    .map(|(attribute, score)| MatchRecord {
                        enquiry_id: sentence.enquiry_id.clone(),
                        category_id: sentence.category_id.clone(),
                        sentence_index: sentence.sentence_index,
                        attribute,
                        score: round_score(score),
                    })
                    .collect()
            })
            .collect()
    })?;

    let records: Vec<MatchRecord> = per_sentence.into_iter().flatten().collect();
    let path = artifacts.matches(method);
    write_jsonl(&path, records.iter())?;
    Ok(MatchSummary {
        sentences: records.iter().map(|r| (&r.enquiry_id, r.sentence_index)).collect::<BTreeSet<_>>().len(),
        records: records.len(),
        path,
    })
}

pub struct RankSummary {
    pub categories: usize,
    pub path: PathBuf,
}

/// Aggregates matches into per-category rankings (subword/wordvec), or
/// runs keyword extraction directly over the sentences (textrank).
pub fn cmd_rank(cfg: &PipelineConfig, method: Method) -> Result<RankSummary> {
    let artifacts = Artifacts::new(&cfg.paths.workdir);
    let ranked: Vec<RankedAttributes> = match method {
        Method::Subword | Method::Wordvec => {
            require(&artifacts.matches(method), "match")?;
            let records: Vec<MatchRecord> = read_jsonl(&artifacts.matches(method))?;
            aggregate(&records, &cfg.ranker, method.name())
        }
        Method::Textrank => {
            require(&artifacts.sentences(), "preprocess")?;
            require(&artifacts.schema(), "preprocess")?;
            let sentences: Vec<CleanSentence> = read_jsonl(&artifacts.sentences())?;
            let schema: Vec<NormalizedCategory> = read_jsonl(&artifacts.schema())?;
            let mut per_category: BTreeMap<&str, Vec<&[String]>> = BTreeMap::new();
            for sentence in &sentences {
                per_category
                    .entry(&sentence.category_id)
                    .or_default()
                    .push(&sentence.tokens);
            }
            with_pool(cfg.workers, || {
                schema
                    .par_iter()
                    .map(|cat| {
                        let empty: Vec<&[String]> = Vec::new();
                        let category_sentences =
                            per_category.get(cat.category_id.as_str()).unwrap_or(&empty);
                        let graph = build_graph(
                            category_sentences.iter().copied(),
                            cfg.textrank.window,
                        );
                        let scores = textrank(&graph, &cfg.textrank);
                        if !scores.converged {
                            log::warn!(
                                "category {}: keyword scores stopped at the iteration cap",
                                cat.category_id
                            );
                        }
                        textrank_attributes(
                            &scores,
                            &cat.to_schema(),
                            &cfg.textrank,
                            cfg.ranker.top_k,
                        )
                    })
                    .collect()
            })?
        }
    };
    let path = artifacts.ranked(method);
    write_jsonl(&path, ranked.iter())?;
    Ok(RankSummary {
        categories: ranked.len(),
        path,
    })
}

pub struct EvalSummary {
    pub rendered: String,
    pub eval: MethodEval,
    /// Categories with selections but no labels (excluded from the
    /// averages), plus label names lost to normalization.
    pub warnings: Vec<String>,
    pub report_tsv: PathBuf,
    pub report_jsonl: PathBuf,
}

/// Compares a method's selected attributes against the labelled truth
/// and writes the report files.
pub fn cmd_eval(cfg: &PipelineConfig, method: Method) -> Result<EvalSummary> {
    let labels_path = cfg.paths.labels.as_ref().ok_or_else(|| {
        Error::Config("paths.labels must be set to evaluate against ground truth".into())
    })?;
    let artifacts = Artifacts::new(&cfg.paths.workdir);
    require(&artifacts.ranked(method), "rank")?;
    require(&artifacts.schema(), "preprocess")?;

    let categories = load_categories(&cfg.paths.categories)?;
    let truth_raw = load_ground_truth(labels_path, &categories)?;
    let schema: Vec<NormalizedCategory> = read_jsonl(&artifacts.schema())?;
    let stops = load_stopwords(cfg)?;
    let units = load_units(cfg)?;

    let redirects: BTreeMap<&str, &BTreeMap<String, String>> = schema
        .iter()
        .map(|cat| (cat.category_id.as_str(), &cat.redirects))
        .collect();

    let mut warnings = Vec::new();
    let mut truth: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for gt in &truth_raw {
        let mut set = BTreeSet::new();
        for name in &gt.important_attributes {
            let key = normalize_without_spelling(name, &stops, &units).join(" ");
            if key.is_empty() {
                warnings.push(format!(
                    "category {}: label {name:?} normalizes to nothing and cannot be scored",
                    gt.category_id
                ));
                continue;
            }
            let key = match redirects.get(gt.category_id.as_str()) {
                Some(map) => map.get(&key).cloned().unwrap_or(key),
                None => key,
            };
            set.insert(key);
        }
        if set.is_empty() {
            warnings.push(format!(
                "category {}: no usable labels remain after normalization",
                gt.category_id
            ));
            continue;
        }
        truth.insert(gt.category_id.clone(), set);
    }

    let ranked: Vec<RankedAttributes> = read_jsonl(&artifacts.ranked(method))?;
    let selected: BTreeMap<String, BTreeSet<String>> = ranked
        .into_iter()
        .map(|r| (r.category_id, r.selected.into_iter().collect()))
        .collect();

    let outcome = evaluate(method.name(), &selected, &truth);
    for category in &outcome.unlabelled_categories {
        warnings.push(format!(
            "category {category}: selections exist but no labels; excluded from averages"
        ));
    }

    let rendered = render_report(std::slice::from_ref(&outcome.eval));
    let report_tsv = artifacts.report_tsv(method);
    let report_jsonl = artifacts.report_jsonl(method);
    std::fs::write(&report_tsv, &rendered).map_err(|e| Error::io(&report_tsv, e))?;
    write_jsonl(&report_jsonl, report_lines(&outcome.eval))?;

    Ok(EvalSummary {
        rendered,
        eval: outcome.eval,
        warnings,
        report_tsv,
        report_jsonl,
    })
}

pub struct PipelineSummary {
    pub preprocess: PreprocessSummary,
    pub train: Option<TrainSummary>,
    pub matched: Option<MatchSummary>,
    pub rank: RankSummary,
    pub eval: Option<EvalSummary>,
}

/// Runs every stage the method needs, in order. Output files are
/// exactly those a stage-by-stage run would produce.
pub fn cmd_pipeline(cfg: &PipelineConfig, method: Method) -> Result<PipelineSummary> {
    let preprocess = cmd_preprocess(cfg)?;
    let train = match method {
        Method::Subword => Some(cmd_train(cfg)?),
        Method::Wordvec if cfg.paths.vectors.is_none() => Some(cmd_train(cfg)?),
        _ => None,
    };
    let matched = match method {
        Method::Textrank => None,
        _ => Some(cmd_match(cfg, method)?),
    };
    let rank = cmd_rank(cfg, method)?;
    let eval = if cfg.paths.labels.is_some() {
        Some(cmd_eval(cfg, method)?)
    } else {
        None
    };
    Ok(PipelineSummary {
        preprocess,
        train,
        matched,
        rank,
        eval,
    })
}
