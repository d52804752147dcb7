//! Loading and storage of the product knowledge graph: category schemas
//! with their attributes, customer enquiries, and ground-truth labels.
//!
//! All files are line-delimited JSON. Loading applies only a light
//! normalization (case folding plus whitespace collapse) so that records
//! survive a save/load round trip unchanged; the heavier token pipeline
//! lives in [`crate::preprocess`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One attribute of a category schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDef {
    /// Name exactly as it appeared in the input file.
    pub raw_name: String,
    /// Case-folded, whitespace-split name tokens.
    pub name: Vec<String>,
    /// Deduplicated, case-folded value strings, sorted.
    pub values: Vec<String>,
}

impl AttributeDef {
    pub fn new(raw_name: &str, values: impl IntoIterator<Item = String>) -> Self {
        let set: BTreeSet<String> = values
            .into_iter()
            .map(|v| fold_whitespace(&v.to_lowercase()))
            .filter(|v| !v.is_empty())
            .collect();
        AttributeDef {
            raw_name: raw_name.to_string(),
            name: fold_whitespace(&raw_name.to_lowercase())
                .split_whitespace()
                .map(str::to_string)
                .collect(),
            values: set.into_iter().collect(),
        }
    }

    /// Canonical single-string form of the name tokens; the key used to
    /// refer to the attribute everywhere downstream.
    pub fn name_key(&self) -> String {
        self.name.join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategorySchema {
    pub category_id: String,
    pub attributes: Vec<AttributeDef>,
}

impl CategorySchema {
    pub fn attribute(&self, name_key: &str) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| a.name_key() == name_key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Enquiry {
    pub enquiry_id: String,
    pub category_id: String,
    /// Raw text as found in the input, untouched.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    pub category_id: String,
    /// Case-folded attribute name keys.
    pub important_attributes: BTreeSet<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AttributeRecord {
    name: String,
    values: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CategoryRecord {
    category_id: String,
    attributes: Vec<AttributeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EnquiryRecord {
    enquiry_id: String,
    category_id: String,
    text: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelRecord {
    category_id: String,
    important_attributes: Vec<String>,
}

/// Collapses runs of whitespace to single spaces and trims the ends.
pub fn fold_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        lines.push((idx + 1, line));
    }
    Ok(lines)
}

/// Loads category schemas. Attributes whose values are all empty after
/// normalization are dropped with a warning; duplicate category ids or
/// duplicate attribute names within a category are errors.
pub fn load_categories(path: &Path) -> Result<Vec<CategorySchema>> {
    let mut categories = Vec::new();
    let mut seen_ids = HashSet::new();
    for (line_no, line) in read_lines(path)? {
        let record: CategoryRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, line_no, format!("bad category record: {e}")))?;
        if record.category_id.trim().is_empty() {
            return Err(Error::parse(path, line_no, "empty category_id"));
        }
        if !seen_ids.insert(record.category_id.clone()) {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate category_id '{}'", record.category_id),
            ));
        }
        let mut attributes = Vec::new();
        let mut seen_names = HashSet::new();
        for attr in record.attributes {
            let def = AttributeDef::new(&attr.name, attr.values);
            if def.name.is_empty() {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!(
                        "attribute with empty name in category '{}'",
                        record.category_id
                    ),
                ));
            }
            if !seen_names.insert(def.name_key()) {
                return Err(Error::parse(
                    path,
                    line_no,
                    format!(
                        "duplicate attribute '{}' in category '{}'",
                        def.name_key(),
                        record.category_id
                    ),
                ));
            }
            if def.values.is_empty() {
                log::warn!(
                    "dropping attribute '{}' of category '{}': no non-empty values",
                    def.name_key(),
                    record.category_id
                );
                continue;
            }
            attributes.push(def);
        }
        categories.push(CategorySchema {
            category_id: record.category_id,
            attributes,
        });
    }
    Ok(categories)
}

/// Writes category schemas in the same line-delimited format they are
/// loaded from.
pub fn save_categories(categories: &[CategorySchema], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for cat in categories {
        let record = CategoryRecord {
            category_id: cat.category_id.clone(),
            attributes: cat
                .attributes
                .iter()
                .map(|a| AttributeRecord {
                    name: a.raw_name.clone(),
                    values: a.values.clone(),
                })
                .collect(),
        };
        let json = serde_json::to_string(&record)
            .map_err(|e| Error::Data(format!("serializing category record: {e}")))?;
        writeln!(out, "{json}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug)]
pub struct EnquiryLoad {
    pub enquiries: Vec<Enquiry>,
    /// Enquiries referencing a category id absent from the schema file.
    pub dangling: usize,
}

/// Loads enquiries in file order. Records pointing at unknown categories
/// are skipped and counted rather than treated as fatal.
pub fn load_enquiries(path: &Path, categories: &[CategorySchema]) -> Result<EnquiryLoad> {
    let known: HashSet<&str> = categories.iter().map(|c| c.category_id.as_str()).collect();
    let mut enquiries = Vec::new();
    let mut dangling = 0;
    for (line_no, line) in read_lines(path)? {
        let record: EnquiryRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, line_no, format!("bad enquiry record: {e}")))?;
        if record.enquiry_id.trim().is_empty() {
            return Err(Error::parse(path, line_no, "empty enquiry_id"));
        }
        if !known.contains(record.category_id.as_str()) {
            log::warn!(
                "skipping enquiry '{}': unknown category '{}'",
                record.enquiry_id,
                record.category_id
            );
            dangling += 1;
            continue;
        }
        enquiries.push(Enquiry {
            enquiry_id: record.enquiry_id,
            category_id: record.category_id,
            text: record.text,
        });
    }
    Ok(EnquiryLoad {
        enquiries,
        dangling,
    })
}

/// Loads ground-truth labels. Every label must name an existing category
/// and every listed attribute must resolve against that category's schema;
/// a failing line reports all offending names at once.
pub fn load_ground_truth(path: &Path, categories: &[CategorySchema]) -> Result<Vec<GroundTruth>> {
    let by_id: HashMap<&str, &CategorySchema> = categories
        .iter()
        .map(|c| (c.category_id.as_str(), c))
        .collect();
    let mut truths = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in read_lines(path)? {
        let record: LabelRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, line_no, format!("bad label record: {e}")))?;
        let Some(category) = by_id.get(record.category_id.as_str()) else {
            return Err(Error::parse(
                path,
                line_no,
                format!("label references unknown category '{}'", record.category_id),
            ));
        };
        if !seen.insert(record.category_id.clone()) {
            return Err(Error::parse(
                path,
                line_no,
                format!("duplicate label line for category '{}'", record.category_id),
            ));
        }
        let schema_names: HashSet<String> =
            category.attributes.iter().map(|a| a.name_key()).collect();
        let mut resolved = BTreeSet::new();
        let mut unknown = Vec::new();
        for name in &record.important_attributes {
            let key = fold_whitespace(&name.to_lowercase());
            if schema_names.contains(&key) {
                resolved.insert(key);
            } else {
                unknown.push(name.clone());
            }
        }
        if !unknown.is_empty() {
            return Err(Error::parse(
                path,
                line_no,
                format!(
                    "label for category '{}' names unknown attributes: {}",
                    record.category_id,
                    unknown.join(", ")
                ),
            ));
        }
        truths.push(GroundTruth {
            category_id: record.category_id,
            important_attributes: resolved,
        });
    }
    Ok(truths)
}
