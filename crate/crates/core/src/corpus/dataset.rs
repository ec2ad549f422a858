use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{tokenize, Document, Vocabulary};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataFormat {
    /// `label<TAB>text`
    Tsv,
    /// `"label","text"`
    Csv,
}

impl DataFormat {
    /// `.csv` files are CSV, everything else TSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::Tsv,
        }
    }
}

/// One line of a dataset file before tokenization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawExample {
    pub label: String,
    pub text: String,
    /// 1-based line number in the source file.
    pub line: usize,
}

pub fn read_examples(path: &Path, format: DataFormat) -> Result<Vec<RawExample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        DataFormat::Tsv => parse_tsv(&text),
        DataFormat::Csv => parse_csv(&text),
    }
}

fn parse_tsv(text: &str) -> Result<Vec<RawExample>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (label, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(line_no, "no field separator"))?;
        let label = label.trim();
        if label.is_empty() {
            return Err(Error::parse(line_no, "empty label"));
        }
        out.push(RawExample {
            label: label.to_string(),
            text: body.to_string(),
            line: line_no,
        });
    }
    Ok(out)
}

fn parse_csv(text: &str) -> Result<Vec<RawExample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    // the reader's own line counter ignores blank lines
    // and record offsets may point at the blank lines before a record
    let bytes = text.as_bytes();
    let line_at = |pos: Option<&csv::Position>| {
        pos.map_or(0, |p| {
            let mut at = p.byte() as usize;
            while at < bytes.len() && matches!(bytes[at], b'\n' | b'\r') {
                at += 1;
            }
            bytes[..at].iter().filter(|&&b| b == b'\n').count() + 1
        })
    };
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(line_at(e.position()), e.to_string()))?;
        let line_no = line_at(record.position());
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::parse(line_no, "no field separator"));
        }
        let label = record[0].trim().to_string();
        if label.is_empty() {
            return Err(Error::parse(line_no, "empty label"));
        }
        // extra columns (e.g. title, body) are joined into one text
        let text = record.iter().skip(1).collect::<Vec<_>>().join(" ");
        out.push(RawExample {
            label,
            text,
            line: line_no,
        });
    }
    Ok(out)
}

/// Class names ↔ contiguous 0-based indices, in first-seen order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelMap {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelMap {
    pub fn from_examples(examples: &[RawExample]) -> Self {
        let mut map = LabelMap::default();
        for ex in examples {
            map.insert(&ex.label);
        }
        map
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        let mut map = LabelMap::default();
        for n in names {
            map.insert(n.as_ref());
        }
        map
    }

    fn insert(&mut self, name: &str) {
        if !self.index.contains_key(name) {
            self.index.insert(name.to_string(), self.names.len());
            self.names.push(name.to_string());
        }
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.names.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_names(&text.lines().collect::<Vec<_>>()))
    }
}

/// Tokenizes raw examples against a fixed vocabulary and label map.
pub fn make_documents(
    examples: &[RawExample],
    vocab: &Vocabulary,
    labels: &LabelMap,
) -> Result<Vec<Document>> {
    examples
        .iter()
        .map(|ex| {
            let label = labels
                .get(&ex.label)
                .ok_or_else(|| Error::parse(ex.line, format!("unknown label {:?}", ex.label)))?;
            Document::new(tokenize(&ex.text, vocab), label).map_err(|_| Error::parse(ex.line, "empty document"))
        })
        .collect()
}

/// Reads and tokenizes one split.
pub fn load_dataset(
    path: &Path,
    format: DataFormat,
    vocab: &Vocabulary,
    labels: &LabelMap,
) -> Result<Vec<Document>> {
    make_documents(&read_examples(path, format)?, vocab, labels)
}
