//! Aggregates match records into per-category attribute importance
//! rankings and selects the top-K attributes per category.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::MatchRecord;

fn default_top_k() -> usize {
    5
}

/// What one unit of evidence is when counting matches per attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CountUnit {
    /// Every match record counts.
    #[default]
    Records,
    /// Distinct enquiries count once per attribute.
    Enquiries,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankerConfig {
    /// Number of attributes selected as important per category.
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub count_unit: CountUnit,
    /// Categories with fewer match records than this keep their full
    /// ranking but select nothing (not enough evidence).
    #[serde(default)]
    pub min_records: u64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        RankerConfig {
            top_k: default_top_k(),
            count_unit: CountUnit::default(),
            min_records: 0,
        }
    }
}

impl RankerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAttribute {
    pub attribute: String,
    pub match_count: u64,
    pub mean_score: f64,
}

/// One category's importance ranking: the selected important attributes
/// plus the full ordered evidence behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAttributes {
    pub category_id: String,
    pub method: String,
    pub selected: Vec<String>,
    pub full_ranking: Vec<RankedAttribute>,
}

#[derive(Default)]
struct Accumulator {
    records: u64,
    score_sum: f64,
    enquiries: BTreeSet<String>,
}

/// Groups match records per category, ranks each category's attributes
/// by match count (ties by mean score, then name), and selects the top
/// `top_k`. A pure function of the record multiset: input order never
/// matters.
pub fn aggregate(
    matches: &[MatchRecord],
    cfg: &RankerConfig,
    method: &str,
) -> Vec<RankedAttributes> {
    let mut per_category: BTreeMap<&str, BTreeMap<&str, Accumulator>> = BTreeMap::new();
    let mut category_records: BTreeMap<&str, u64> = BTreeMap::new();
    for record in matches {
        let acc = per_category
            .entry(&record.category_id)
            .or_default()
            .entry(&record.attribute)
            .or_default();
        acc.records += 1;
        acc.score_sum += record.score;
        acc.enquiries.insert(record.enquiry_id.clone());
        *category_records.entry(&record.category_id).or_insert(0) += 1;
    }

    per_category
        .into_iter()
        .map(|(category_id, attrs)| {
            let mut full_ranking: Vec<RankedAttribute> = attrs
                .into_iter()
                .map(|(attribute, acc)| RankedAttribute {
                    attribute: attribute.to_string(),
                    match_count: match cfg.count_unit {
                        CountUnit::Records => acc.records,
                        CountUnit::Enquiries => acc.enquiries.len() as u64,
                    },
                    mean_score: acc.score_sum / acc.records as f64,
                })
                .collect();
            full_ranking.sort_by(|a, b| {
                b.match_count
                    .cmp(&a.match_count)
                    .then_with(|| b.mean_score.total_cmp(&a.mean_score))
                    .then_with(|| a.attribute.cmp(&b.attribute))
            });
            let enough = category_records[category_id] >= cfg.min_records;
            let selected = if enough {
                full_ranking
                    .iter()
                    .take(cfg.top_k)
                    .map(|e| e.attribute.clone())
                    .collect()
            } else {
                Vec::new()
            };
            RankedAttributes {
                category_id: category_id.to_string(),
                method: method.to_string(),
                selected,
                full_ranking,
            }
        })
        .collect()
}
