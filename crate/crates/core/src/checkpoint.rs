//! Binary checkpoint format.
//!
//! ```text
//! magic     8 bytes   "SJLSTM01"
//! count     u32 LE    number of tensors
//! manifest  count ×   { name_len: u32, name: utf-8, ndim: u32, dims: ndim × u32 }
//! data      count ×   row-major little-endian f32, in manifest order
//! ```

use std::fs;
use std::path::Path;

use crate::agents::AgentNet;
use crate::corpus::{EmbeddingTable, LabelMap, Vocabulary};
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::nn::{Activation, Dense, LstmCell};
use crate::reader::ClassifierHead;
use crate::tensor::Matrix;

pub const MAGIC: &[u8; 8] = b"SJLSTM01";

struct Tensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn push_dense(out: &mut Vec<Tensor>, prefix: &str, layer: &Dense) {
    out.push(Tensor {
        name: format!("{prefix}.weight"),
        shape: vec![layer.weight.rows(), layer.weight.cols()],
        data: layer.weight.as_slice().to_vec(),
    });
    out.push(Tensor {
        name: format!("{prefix}.bias"),
        shape: vec![layer.bias.len()],
        data: layer.bias.clone(),
    });
}

fn tensors_of(params: &ModelParams) -> Vec<Tensor> {
    let mut t = vec![Tensor {
        name: "embedding".into(),
        shape: vec![params.embedding.vocab_size(), params.embedding.dim()],
        data: params.embedding.matrix.as_slice().to_vec(),
    }];
    t.push(Tensor {
        name: "lstm.weight".into(),
        shape: vec![params.lstm.weight.rows(), params.lstm.weight.cols()],
        data: params.lstm.weight.as_slice().to_vec(),
    });
    t.push(Tensor {
        name: "lstm.bias".into(),
        shape: vec![params.lstm.bias.len()],
        data: params.lstm.bias.clone(),
    });
    for (name, agent) in [("skip", &params.skip), ("jump", &params.jump)] {
        push_dense(&mut t, &format!("{name}.trunk"), &agent.trunk);
        push_dense(&mut t, &format!("{name}.policy"), &agent.policy);
        push_dense(&mut t, &format!("{name}.value"), &agent.value);
    }
    push_dense(&mut t, "classifier.hidden", &params.classifier.hidden);
    push_dense(&mut t, "classifier.out", &params.classifier.out);
    t
}

/// Names and shapes in checkpoint order.
pub fn manifest(params: &ModelParams) -> Vec<(String, Vec<usize>)> {
    tensors_of(params).into_iter().map(|t| (t.name, t.shape)).collect()
}

pub fn to_bytes(params: &ModelParams) -> Vec<u8> {
    let tensors = tensors_of(params);
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in &tensors {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for t in &tensors {
        for &v in &t.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("unexpected end of file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelParams> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let count = cur.u32()?;
    let mut header = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let len = cur.u32()?;
        let name = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| Error::Checkpoint("tensor name is not utf-8".into()))?
            .to_string();
        let ndim = cur.u32()?;
        let shape = (0..ndim).map(|_| cur.u32()).collect::<Result<Vec<_>>>()?;
        header.push((name, shape));
    }
    let mut tensors = Vec::with_capacity(header.len());
    for (name, shape) in header {
        let n: usize = shape.iter().product();
        let raw = cur.take(n.checked_mul(4).ok_or_else(|| Error::Checkpoint("tensor too large".into()))?)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        tensors.push(Tensor { name, shape, data });
    }
    if cur.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    assemble(tensors)
}

fn assemble(tensors: Vec<Tensor>) -> Result<ModelParams> {
    let mut map: std::collections::HashMap<String, Tensor> =
        tensors.into_iter().map(|t| (t.name.clone(), t)).collect();
    let mut take = |name: &str| {
        map.remove(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))
    };
    let matrix = |t: Tensor| -> Result<Matrix> {
        if t.shape.len() != 2 {
            return Err(Error::Checkpoint(format!("{} is not a matrix", t.name)));
        }
        Ok(Matrix::from_vec(t.shape[0], t.shape[1], t.data))
    };
    let vector = |t: Tensor| -> Result<Vec<f64>> {
        if t.shape.len() != 1 {
            return Err(Error::Checkpoint(format!("{} is not a vector", t.name)));
        }
        Ok(t.data)
    };
    let mut dense = |prefix: &str, act: Activation| -> Result<Dense> {
        let weight = matrix(take(&format!("{prefix}.weight"))?)?;
        let bias = vector(take(&format!("{prefix}.bias"))?)?;
        if bias.len() != weight.rows() {
            return Err(Error::Checkpoint(format!("{prefix}: bias length")));
        }
        Ok(Dense {
            weight,
            bias,
            activation: act,
        })
    };
    let skip = AgentNet {
        trunk: dense("skip.trunk", Activation::Relu)?,
        policy: dense("skip.policy", Activation::Linear)?,
        value: dense("skip.value", Activation::Linear)?,
    };
    let jump = AgentNet {
        trunk: dense("jump.trunk", Activation::Relu)?,
        policy: dense("jump.policy", Activation::Linear)?,
        value: dense("jump.value", Activation::Linear)?,
    };
    let classifier = ClassifierHead {
        hidden: dense("classifier.hidden", Activation::Relu)?,
        out: dense("classifier.out", Activation::Linear)?,
    };
    let embedding = matrix(take("embedding")?)?;
    let lstm_w = matrix(take("lstm.weight")?)?;
    let lstm_b = vector(take("lstm.bias")?)?;
    if let Some(extra) = map.keys().next() {
        return Err(Error::Checkpoint(format!("unexpected tensor {extra}")));
    }
    let lstm = LstmCell::from_parts(lstm_w, lstm_b, embedding.cols())
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    let params = ModelParams {
        embedding: EmbeddingTable {
            matrix: embedding,
            trainable: false,
        },
        lstm,
        skip,
        jump,
        classifier,
    };
    params.check_consistent()?;
    Ok(params)
}

pub fn save(params: &ModelParams, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<ModelParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const LABELS_FILE: &str = "labels.txt";

/// A checkpoint with the vocabulary and label names stored beside it.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    pub params: ModelParams,
    pub vocab: Vocabulary,
    pub labels: LabelMap,
}

impl SavedModel {
    /// Writes model.ckpt, vocab.txt and labels.txt into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        save(&self.params, &dir.join(CHECKPOINT_FILE))?;
        self.vocab.save(&dir.join(VOCAB_FILE))?;
        self.labels.save(&dir.join(LABELS_FILE))
    }

    /// Loads `checkpoint` and the vocab.txt / labels.txt in its directory.
    pub fn load(checkpoint: &Path) -> Result<Self> {
        let dir = checkpoint.parent().unwrap_or(Path::new("."));
        let params = load(checkpoint).map_err(|e| match e {
            Error::Checkpoint(m) => Error::Checkpoint(format!("{}: {m}", checkpoint.display())),
            other => other,
        })?;
        let vocab_path = dir.join(VOCAB_FILE);
        let labels_path = dir.join(LABELS_FILE);
        let vocab = Vocabulary::load(&vocab_path)?;
        let labels = LabelMap::load(&labels_path)?;
        if vocab.len() != params.embedding.vocab_size() {
            return Err(Error::Checkpoint(format!(
                "{}: {} entries but the checkpoint embeds {}",
                vocab_path.display(),
                vocab.len(),
                params.embedding.vocab_size()
            )));
        }
        if labels.len() != params.classifier.num_classes() {
            return Err(Error::Checkpoint(format!(
                "{}: {} labels but the checkpoint predicts {} classes",
                labels_path.display(),
                labels.len(),
                params.classifier.num_classes()
            )));
        }
        Ok(SavedModel { params, vocab, labels })
    }
}
