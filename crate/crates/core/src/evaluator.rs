//! Precision/recall/F1 of selected attributes against labelled ground
//! truth, with a tab-separated report and macro averages.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// One category's metrics for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryEval {
    pub category_id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl CategoryEval {
    /// Metrics from a selected set S and truth set M:
    /// P = |M∩S|/|S| (0 when S is empty), R = |M∩S|/|M|,
    /// F1 = 2PR/(P+R) (0 when P+R is 0).
    pub fn from_sets(category_id: &str, selected: &BTreeSet<String>, truth: &BTreeSet<String>) -> Self {
        let hits = selected.intersection(truth).count() as f64;
        let precision = if selected.is_empty() {
            0.0
        } else {
            hits / selected.len() as f64
        };
        let recall = if truth.is_empty() {
            0.0
        } else {
            hits / truth.len() as f64
        };
        CategoryEval {
            category_id: category_id.to_string(),
            precision,
            recall,
            f1: f1_of(precision, recall),
        }
    }
}

pub fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// All per-category rows for one method, plus the derived macro-average
/// row. The averaged precision and recall are unweighted arithmetic
/// means; the average F1 is the harmonic mean of those two averages,
/// which is how comparison tables of this kind are conventionally
/// totalled.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodEval {
    pub method: String,
    pub rows: Vec<CategoryEval>,
}

impl MethodEval {
    pub fn from_rows(method: &str, rows: Vec<CategoryEval>) -> Self {
        MethodEval {
            method: method.to_string(),
            rows,
        }
    }

    /// (mean precision, mean recall, F1 of the two means); zeros for an
    /// empty report.
    pub fn average(&self) -> (f64, f64, f64) {
        if self.rows.is_empty() {
            return (0.0, 0.0, 0.0);
        }
        let n = self.rows.len() as f64;
        let p = self.rows.iter().map(|r| r.precision).sum::<f64>() / n;
        let r = self.rows.iter().map(|r| r.recall).sum::<f64>() / n;
        (p, r, f1_of(p, r))
    }

    pub fn macro_f1(&self) -> f64 {
        self.average().2
    }
}

/// Outcome of evaluating one method's selections against ground truth.
pub struct Evaluation {
    pub eval: MethodEval,
    /// Categories present in the selections but absent from the truth;
    /// excluded from every average.
    pub unlabelled_categories: Vec<String>,
}

/// Scores selected attribute sets against truth sets. Rows follow the
/// truth's categories in sorted order; a truth category with no
/// selections scores zero precision and recall. Selected-only
/// categories are reported back as warnings, never averaged.
pub fn evaluate(
    method: &str,
    selected: &BTreeMap<String, BTreeSet<String>>,
    truth: &BTreeMap<String, BTreeSet<String>>,
) -> Evaluation {
    static EMPTY: std::sync::OnceLock<BTreeSet<String>> = std::sync::OnceLock::new();
    let empty = EMPTY.get_or_init(BTreeSet::new);
    let rows = truth
        .iter()
        .map(|(category_id, m)| {
            let s = selected.get(category_id).unwrap_or(empty);
            CategoryEval::from_sets(category_id, s, m)
        })
        .collect();
    let unlabelled_categories = selected
        .keys()
        .filter(|c| !truth.contains_key(*c))
        .cloned()
        .collect();
    Evaluation {
        eval: MethodEval::from_rows(method, rows),
        unlabelled_categories,
    }
}

/// Round half up to two decimals: the rendering rule for every metric
/// cell.
pub fn round2(x: f64) -> f64 {
    (x * 100.0 + 0.5).floor() / 100.0
}

fn cell(x: f64) -> String {
    format!("{:.2}", round2(x))
}

/// Tab-separated table: one row per category, three metric columns per
/// method, and a final "average" row. Categories missing from a
/// method's rows render empty cells.
pub fn render_report(reports: &[MethodEval]) -> String {
    let mut out = String::from("category");
    for report in reports {
        for metric in ["precision", "recall", "f1"] {
            out.push('\t');
            out.push_str(&report.method);
            out.push(' ');
            out.push_str(metric);
        }
    }
    out.push('\n');

    let categories: BTreeSet<&str> = reports
        .iter()
        .flat_map(|r| r.rows.iter().map(|row| row.category_id.as_str()))
        .collect();
    for category in categories {
        out.push_str(category);
        for report in reports {
            match report.rows.iter().find(|r| r.category_id == category) {
                Some(row) => {
                    for v in [row.precision, row.recall, row.f1] {
                        out.push('\t');
                        out.push_str(&cell(v));
                    }
                }
                None => out.push_str("\t\t\t"),
            }
        }
        out.push('\n');
    }

    out.push_str("average");
    for report in reports {
        let (p, r, f1) = report.average();
        for v in [p, r, f1] {
            out.push('\t');
            out.push_str(&cell(v));
        }
    }
    out.push('\n');
    out
}

/// Machine-readable line for the report file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportLine {
    pub method: String,
    pub category_id: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// The same values the rendered table shows, one line per category plus
/// an "average" line, already rounded.
pub fn report_lines(report: &MethodEval) -> Vec<ReportLine> {
    let mut lines: Vec<ReportLine> = report
        .rows
        .iter()
        .map(|row| ReportLine {
            method: report.method.clone(),
            category_id: row.category_id.clone(),
            precision: round2(row.precision),
            recall: round2(row.recall),
            f1: round2(row.f1),
        })
        .collect();
    let (p, r, f1) = report.average();
    lines.push(ReportLine {
        method: report.method.clone(),
        category_id: "average".into(),
        precision: round2(p),
        recall: round2(r),
        f1: round2(f1),
    });
    lines
}
