//! Plain-text vector file format.
//!
//! Layout:
//!
//! ```text
//! <vocab_size> <dim>
//! <word> <f1> ... <fdim>        (vocab_size lines, whole-word input rows)
//! BUCKETS <bucket_count> <dim>  (optional section)
//! <f1> ... <fdim>               (bucket_count subword rows)
//! ```
//!
//! Floats print through Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces parameters bit for bit. Files without a
//! BUCKETS section act as whole-word models: unknown words compose to
//! the zero vector. The header does not record the n-gram range;
//! loaders assume 3..=6 unless told otherwise.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::embedding::{EmbeddingConfig, EmbeddingModel, Matrix, Vocab, VocabWord};
use crate::error::{Error, Result};

const BUCKETS_TAG: &str = "BUCKETS";

fn write_row(out: &mut impl Write, prefix: Option<&str>, row: &[f64]) -> std::io::Result<()> {
    if let Some(word) = prefix {
        out.write_all(word.as_bytes())?;
    }
    let mut first = prefix.is_none();
    for v in row {
        if first {
            write!(out, "{v}")?;
            first = false;
        } else {
            write!(out, " {v}")?;
        }
    }
    out.write_all(b"\n")
}

fn check_word_token(word: &str) -> Result<()> {
    if word.is_empty() || word.chars().any(char::is_whitespace) || word == BUCKETS_TAG {
        return Err(Error::Data(format!(
            "word {word:?} cannot be stored in the vector file format"
        )));
    }
    Ok(())
}

/// Writes the model's raw parameters: one line per vocabulary word with
/// its whole-word input row, then every subword bucket row.
pub fn save(model: &EmbeddingModel, path: &Path) -> Result<()> {
    let wrap = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(wrap)?);
    let dim = model.dim();
    let buckets = model.config().bucket_count;
    writeln!(out, "{} {}", model.vocab().len(), dim).map_err(wrap)?;
    for (i, entry) in model.vocab().iter().enumerate() {
        check_word_token(&entry.word)?;
        let row = model.input_matrix().row(buckets + i);
        write_row(&mut out, Some(&format!("{} ", entry.word)), row).map_err(wrap)?;
    }
    if buckets > 0 {
        writeln!(out, "{BUCKETS_TAG} {buckets} {dim}").map_err(wrap)?;
        for b in 0..buckets {
            write_row(&mut out, None, model.input_matrix().row(b)).map_err(wrap)?;
        }
    }
    out.flush().map_err(wrap)
}

/// Writes composed per-word vectors (subword rows summed in), one line
/// per vocabulary word with no BUCKETS section. Loading such a file
/// yields a whole-word model.
pub fn save_composed_word_vectors(model: &EmbeddingModel, path: &Path) -> Result<()> {
    let wrap = |e| Error::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(wrap)?);
    writeln!(out, "{} {}", model.vocab().len(), model.dim()).map_err(wrap)?;
    for entry in model.vocab().iter() {
        check_word_token(&entry.word)?;
        let vector = model.word_vector(&entry.word);
        write_row(&mut out, Some(&format!("{} ", entry.word)), &vector).map_err(wrap)?;
    }
    out.flush().map_err(wrap)
}

struct LineReader<'p> {
    path: &'p Path,
    lines: std::io::Lines<BufReader<File>>,
    number: usize,
}

impl<'p> LineReader<'p> {
    fn open(path: &'p Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(LineReader {
            path,
            lines: BufReader::new(file).lines(),
            number: 0,
        })
    }

    fn next_line(&mut self) -> Result<Option<String>> {
        match self.lines.next() {
            None => Ok(None),
            Some(line) => {
                self.number += 1;
                line.map(Some).map_err(|e| Error::io(self.path, e))
            }
        }
    }

    fn expect_line(&mut self, what: &str) -> Result<String> {
        self.next_line()?.ok_or_else(|| {
            Error::parse(self.path, self.number + 1, format!("missing {what}"))
        })
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::parse(self.path, self.number, message)
    }
}

fn parse_floats(reader: &LineReader<'_>, fields: &[&str], dim: usize) -> Result<Vec<f64>> {
    if fields.len() != dim {
        return Err(reader.fail(format!("expected {dim} values, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| reader.fail(format!("invalid float {f:?}")))
        })
        .collect()
}

/// Loads a vector file assuming the 3..=6 n-gram range.
pub fn load_pretrained(path: &Path) -> Result<EmbeddingModel> {
    load_pretrained_with(path, 3, 6)
}

/// Loads a vector file with an explicit n-gram range for subword
/// composition (only meaningful when the file has a BUCKETS section).
pub fn load_pretrained_with(path: &Path, ngram_min: usize, ngram_max: usize) -> Result<EmbeddingModel> {
    let mut reader = LineReader::open(path)?;
    let header = reader.expect_line("header")?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(reader.fail("header must be `<vocab_size> <dim>`"));
    }
    let vocab_size: usize = head[0]
        .parse()
        .map_err(|_| reader.fail(format!("invalid vocab size {:?}", head[0])))?;
    let dim: usize = head[1]
        .parse()
        .map_err(|_| reader.fail(format!("invalid dimension {:?}", head[1])))?;
    if vocab_size == 0 || dim == 0 {
        return Err(reader.fail("vocab size and dimension must be positive"));
    }

    let mut entries = Vec::with_capacity(vocab_size);
    let mut word_rows: Vec<Vec<f64>> = Vec::with_capacity(vocab_size);
    let mut seen = std::collections::HashSet::new();
    for _ in 0..vocab_size {
        let line = reader.expect_line("word vector line")?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some((&word, values)) = fields.split_first() else {
            return Err(reader.fail("empty word vector line"));
        };
        if word == BUCKETS_TAG {
            return Err(reader.fail("BUCKETS section before all declared words were read"));
        }
        if !seen.insert(word.to_string()) {
            return Err(reader.fail(format!("duplicate word {word:?}")));
        }
        entries.push(VocabWord {
            word: word.to_string(),
            count: 1,
        });
        word_rows.push(parse_floats(&reader, values, dim)?);
    }

    let mut bucket_rows: Vec<Vec<f64>> = Vec::new();
    let mut bucket_count = 0usize;
    if let Some(line) = reader.next_line()? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != BUCKETS_TAG {
            return Err(reader.fail("expected `BUCKETS <count> <dim>` or end of file"));
        }
        bucket_count = fields[1]
            .parse()
            .map_err(|_| reader.fail(format!("invalid bucket count {:?}", fields[1])))?;
        let bucket_dim: usize = fields[2]
            .parse()
            .map_err(|_| reader.fail(format!("invalid dimension {:?}", fields[2])))?;
        if bucket_dim != dim {
            return Err(reader.fail(format!(
                "bucket dimension {bucket_dim} does not match word dimension {dim}"
            )));
        }
        bucket_rows.reserve(bucket_count);
        for _ in 0..bucket_count {
            let line = reader.expect_line("bucket row")?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            bucket_rows.push(parse_floats(&reader, &fields, dim)?);
        }
    }
    if let Some(extra) = reader.next_line()? {
        if !extra.trim().is_empty() {
            return Err(Error::parse(
                path,
                reader.number,
                "unexpected content after declared rows",
            ));
        }
    }

    let mut data = Vec::with_capacity((bucket_count + vocab_size) * dim);
    for row in &bucket_rows {
        data.extend_from_slice(row);
    }
    for row in &word_rows {
        data.extend_from_slice(row);
    }
    let config = EmbeddingConfig {
        dim,
        ngram_min,
        ngram_max,
        bucket_count,
        ..EmbeddingConfig::default()
    };
    Ok(EmbeddingModel::assemble(
        config,
        Vocab::from_entries(entries),
        Matrix::from_data(data, dim),
        Matrix::zeros(0, dim),
    ))
}
