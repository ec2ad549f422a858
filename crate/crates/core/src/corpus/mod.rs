//! Text ingestion: punctuation-aware tokenization, jump tables, vocabularies,
//! labelled datasets and pretrained embeddings.

mod dataset;
mod embeddings;
mod jump;
pub mod synthetic;
mod tokenize;
mod vocab;

pub use dataset::{load_dataset, make_documents, read_examples, DataFormat, LabelMap, RawExample};
pub use embeddings::{load_embeddings, EmbeddingTable};
pub use jump::{build_jump_table, JumpTable};
pub use tokenize::{split_surfaces, tokenize, Token, TokenKind};
pub use vocab::{Vocabulary, PAD_ID, UNK_ID};

use crate::error::{Error, Result};

/// A tokenized, labelled document together with its jump table.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub tokens: Vec<Token>,
    pub label: usize,
    pub jump_table: JumpTable,
}

impl Document {
    pub fn new(tokens: Vec<Token>, label: usize) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptyDocument);
        }
        let jump_table = build_jump_table(&tokens);
        Ok(Document {
            tokens,
            label,
            jump_table,
        })
    }

    pub fn from_text(text: &str, vocab: &Vocabulary, label: usize) -> Result<Self> {
        Self::new(tokenize(text, vocab), label)
    }

    /// Number of tokens, punctuation included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.tokens.iter().map(|t| t.id)
    }
}
