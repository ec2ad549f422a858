use std::fs;
use std::path::Path;

use rand::Rng;

use super::vocab::{Vocabulary, PAD_ID};
use crate::error::{Error, Result};
use crate::tensor::Matrix;

const INIT_RANGE: f64 = 0.05;

/// Word embedding matrix (vocab × d). The padding row is always zero.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub matrix: Matrix,
    pub trainable: bool,
}

impl EmbeddingTable {
    /// Every non-padding row drawn from U(-0.05, 0.05).
    pub fn random<R: Rng + ?Sized>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        let mut matrix = Matrix::zeros(vocab_size, dim);
        for r in 0..vocab_size {
            if r == PAD_ID {
                continue;
            }
            for v in matrix.row_mut(r) {
                *v = rng.gen_range(-INIT_RANGE..INIT_RANGE);
            }
        }
        EmbeddingTable {
            matrix,
            trainable: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn lookup(&self, id: usize) -> &[f64] {
        self.matrix.row(id)
    }
}

/// Loads GloVe-format vectors (`word v1 ... vd`, no header) for the words of
/// `vocab`; words absent from the file keep a random initialization.
pub fn load_embeddings<R: Rng + ?Sized>(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    rng: &mut R,
) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut table = EmbeddingTable::random(vocab.len(), dim, rng);
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let Some(word) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(Error::parse(
                n + 1,
                format!("embedding dimension mismatch: expected {dim}, found {}", values.len()),
            ));
        }
        let id = vocab.id(word);
        if id < 2 {
            continue;
        }
        let row = table.matrix.row_mut(id);
        for (dst, src) in row.iter_mut().zip(values) {
            *dst = src
                .parse()
                .map_err(|_| Error::parse(n + 1, format!("invalid number {src:?}")))?;
        }
    }
    Ok(table)
}
