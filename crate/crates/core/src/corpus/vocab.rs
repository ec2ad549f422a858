use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::tokenize::split_surfaces;
use crate::error::{Error, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

const PAD: &str = "<pad>";
const UNK: &str = "<unk>";

/// Lowercased surface ↔ id map. Ids 0 and 1 are reserved for padding and
/// unknown words; ids are otherwise assigned in first-seen order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, usize>,
    surfaces: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            ids: HashMap::new(),
            surfaces: vec![PAD.to_string(), UNK.to_string()],
        }
    }
}

impl Vocabulary {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut vocab = Vocabulary::default();
        for text in texts {
            for s in split_surfaces(text) {
                vocab.insert(&s.to_lowercase());
            }
        }
        vocab
    }

    fn insert(&mut self, surface: &str) -> usize {
        if let Some(&id) = self.ids.get(surface) {
            return id;
        }
        let id = self.surfaces.len();
        self.ids.insert(surface.to_string(), id);
        self.surfaces.push(surface.to_string());
        id
    }

    /// Id of an already-lowercased surface, or [`UNK_ID`].
    pub fn id(&self, surface: &str) -> usize {
        self.ids.get(surface).copied().unwrap_or(UNK_ID)
    }

    pub fn surface(&self, id: usize) -> Option<&str> {
        self.surfaces.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 2
    }

    /// Non-reserved entries as (surface, id).
    pub fn entries(&self) -> impl Iterator<Item = (&str, usize)> {
        self.surfaces.iter().enumerate().skip(2).map(|(i, s)| (s.as_str(), i))
    }

    /// One surface per line, in id order, reserved entries included.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.surfaces.join("\n");
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        if lines.next() != Some(PAD) || lines.next() != Some(UNK) {
            return Err(Error::parse(1, "vocabulary must start with <pad> and <unk>"));
        }
        let mut vocab = Vocabulary::default();
        for (n, line) in lines.enumerate() {
            if vocab.ids.contains_key(line) {
                return Err(Error::parse(n + 3, format!("duplicate vocabulary entry {line:?}")));
            }
            vocab.insert(line);
        }
        Ok(vocab)
    }
}
