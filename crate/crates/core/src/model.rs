use std::collections::BTreeMap;

use rand::Rng;

use crate::agents::{AgentNet, PrevActions, TRUNK_WIDTH};
use crate::corpus::{EmbeddingTable, PAD_ID};
use crate::error::{Error, Result};
use crate::nn::LstmCell;
use crate::reader::ClassifierHead;
use crate::tensor::sum_squares;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub classes: usize,
    pub trunk_width: usize,
}

impl ModelDims {
    pub fn new(vocab_size: usize, embed_dim: usize, hidden: usize, classes: usize) -> Self {
        ModelDims {
            vocab_size,
            embed_dim,
            hidden,
            classes,
            trunk_width: TRUNK_WIDTH,
        }
    }

    pub fn skip_input_dim(&self) -> usize {
        self.embed_dim + self.hidden + PrevActions::WIDTH
    }
}

/// All trainable tensors of the speed-reading classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub embedding: EmbeddingTable,
    pub lstm: LstmCell,
    pub skip: AgentNet,
    pub jump: AgentNet,
    pub classifier: ClassifierHead,
}

impl ModelParams {
    pub fn init<R: Rng + ?Sized>(dims: ModelDims, rng: &mut R) -> Self {
        let embedding = EmbeddingTable::random(dims.vocab_size, dims.embed_dim, rng);
        Self::with_embedding(embedding, dims, rng)
    }

    /// Random initialization of everything but the given embedding table.
    pub fn with_embedding<R: Rng + ?Sized>(embedding: EmbeddingTable, dims: ModelDims, rng: &mut R) -> Self {
        let m = dims.hidden;
        ModelParams {
            lstm: LstmCell::glorot(embedding.dim(), m, rng),
            skip: AgentNet::glorot(dims.skip_input_dim(), dims.trunk_width, 2, rng),
            jump: AgentNet::glorot(m, dims.trunk_width, 4, rng),
            classifier: ClassifierHead::glorot(m, dims.classes, rng),
            embedding,
        }
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            vocab_size: self.embedding.vocab_size(),
            embed_dim: self.embedding.dim(),
            hidden: self.lstm.hidden(),
            classes: self.classifier.num_classes(),
            trunk_width: self.skip.trunk.output_dim(),
        }
    }

    /// Every tensor except the embedding, in a fixed order shared with
    /// [`Gradients::dense_tensors`].
    pub fn dense_tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = self.lstm.tensors().into();
        v.extend(self.skip.tensors());
        v.extend(self.jump.tensors());
        v.extend(self.classifier.tensors());
        v
    }

    pub fn dense_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = self.lstm.tensors_mut().into();
        v.extend(self.skip.tensors_mut());
        v.extend(self.jump.tensors_mut());
        v.extend(self.classifier.tensors_mut());
        v
    }

    /// Prepare the agents for speed reading: both start out (almost) always
    /// reading and moving to the next word.
    pub fn warm_start_agents(&mut self) {
        self.skip.warm_start(crate::agents::SkipAction::Read.index());
        self.jump.warm_start(crate::agents::JumpAction::NextWord.index());
    }

    pub fn check_consistent(&self) -> Result<()> {
        let d = self.dims();
        let ok = self.lstm.input_dim() == d.embed_dim
            && self.skip.input_dim() == d.skip_input_dim()
            && self.skip.num_actions() == 2
            && self.jump.input_dim() == d.hidden
            && self.jump.num_actions() == 4
            && self.jump.trunk.output_dim() == d.trunk_width
            && self.classifier.hidden.input_dim() == d.hidden
            && self.classifier.hidden.output_dim() == d.hidden;
        if ok {
            Ok(())
        } else {
            Err(Error::Checkpoint("inconsistent tensor shapes".into()))
        }
    }
}

/// Gradient accumulators, one per parameter tensor. Embedding gradients are
/// kept sparse by row.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub embedding: BTreeMap<usize, Vec<f64>>,
    pub lstm: LstmCell,
    pub skip: AgentNet,
    pub jump: AgentNet,
    pub classifier: ClassifierHead,
}

impl Gradients {
    pub fn zeros_for(params: &ModelParams) -> Self {
        Gradients {
            embedding: BTreeMap::new(),
            lstm: params.lstm.zeros_like(),
            skip: params.skip.zeros_like(),
            jump: params.jump.zeros_like(),
            classifier: params.classifier.zeros_like(),
        }
    }

    pub fn add_embedding_row(&mut self, id: usize, g: &[f64]) {
        if id == PAD_ID {
            return;
        }
        let row = self
            .embedding
            .entry(id)
            .or_insert_with(|| vec![0.0; g.len()]);
        for (a, b) in row.iter_mut().zip(g) {
            *a += b;
        }
    }

    pub fn dense_tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = self.lstm.tensors().into();
        v.extend(self.skip.tensors());
        v.extend(self.jump.tensors());
        v.extend(self.classifier.tensors());
        v
    }

    fn dense_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = self.lstm.tensors_mut().into();
        v.extend(self.skip.tensors_mut());
        v.extend(self.jump.tensors_mut());
        v.extend(self.classifier.tensors_mut());
        v
    }

    /// All tensors including embedding rows, for norms and clipping.
    pub fn all_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let Gradients {
            embedding,
            lstm,
            skip,
            jump,
            classifier,
        } = self;
        let mut v: Vec<&mut [f64]> = embedding.values_mut().map(Vec::as_mut_slice).collect();
        v.extend(lstm.tensors_mut());
        v.extend(skip.tensors_mut());
        v.extend(jump.tensors_mut());
        v.extend(classifier.tensors_mut());
        v
    }

    /// self += scale · other
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (id, row) in &other.embedding {
            let dst = self
                .embedding
                .entry(*id)
                .or_insert_with(|| vec![0.0; row.len()]);
            for (a, b) in dst.iter_mut().zip(row) {
                *a += scale * b;
            }
        }
        for (dst, src) in self.dense_tensors_mut().into_iter().zip(other.dense_tensors()) {
            for (a, b) in dst.iter_mut().zip(src) {
                *a += scale * b;
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        let emb: f64 = self.embedding.values().map(|r| sum_squares(r)).sum();
        let dense: f64 = self.dense_tensors().iter().map(|t| sum_squares(t)).sum();
        (emb + dense).sqrt()
    }
}
