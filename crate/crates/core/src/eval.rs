//! Evaluation of a model over a dataset split.

use rayon::prelude::*;

use crate::agents::ActionMode;
use crate::corpus::Document;
use crate::error::Result;
use crate::metrics::{episode_flops, stats_from_counts, CostModel, ReadingStats, Report};
use crate::model::ModelParams;
use crate::nn::softmax;
use crate::reader::{read_document, AgentOverride, ReadOptions};
use crate::seeding::{example_rng, Stream};

#[derive(Clone, Debug, PartialEq)]
pub struct ExampleResult {
    pub prediction: usize,
    pub label: usize,
    pub p_target: f64,
    pub doc_len: usize,
    pub read: usize,
    pub skipped: usize,
    pub jumped: usize,
    pub flops_speed: u64,
    pub flops_full: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub examples: Vec<ExampleResult>,
}

impl Evaluation {
    pub fn accuracy(&self) -> f64 {
        if self.examples.is_empty() {
            return 0.0;
        }
        let correct = self.examples.iter().filter(|e| e.prediction == e.label).count();
        correct as f64 / self.examples.len() as f64
    }

    /// Token-weighted over the whole split.
    pub fn stats(&self) -> ReadingStats {
        let (r, s, j) = self
            .examples
            .iter()
            .fold((0, 0, 0), |(r, s, j), e| (r + e.read, s + e.skipped, j + e.jumped));
        stats_from_counts(r, s, j)
    }

    pub fn flops(&self) -> (u64, u64) {
        self.examples
            .iter()
            .fold((0, 0), |(f, s), e| (f + e.flops_full, s + e.flops_speed))
    }

    /// Mean episode return from the first step (terminal bonus plus the
    /// weighted reading cost).
    pub fn mean_return(&self, c_skip: f64, w_rolling: f64) -> f64 {
        if self.examples.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .examples
            .iter()
            .map(|e| {
                let bonus = if e.prediction == e.label { 1.0 } else { e.p_target };
                let cost = (e.read as f64 + c_skip * e.skipped as f64) / e.doc_len as f64;
                bonus - w_rolling * cost
            })
            .sum();
        total / self.examples.len() as f64
    }

    pub fn report(&self, dataset: &str) -> Report {
        let (flop_full, flop_speed) = self.flops();
        Report {
            dataset: dataset.to_string(),
            accuracy: self.accuracy(),
            stats: self.stats(),
            flop_full,
            flop_speed,
        }
    }
}

/// Runs every document once. Sampled mode draws from a per-example stream
/// derived from `seed`, so results do not depend on thread scheduling.
pub fn evaluate(
    params: &ModelParams,
    docs: &[Document],
    mode: ActionMode,
    force_read: bool,
    seed: u64,
) -> Result<Evaluation> {
    let cost = CostModel::from(params.dims());
    let opts = ReadOptions {
        mode,
        agent_override: if force_read {
            AgentOverride::ForceRead
        } else {
            AgentOverride::None
        },
        dropout: None,
    };
    let examples = docs
        .par_iter()
        .enumerate()
        .map(|(i, doc)| {
            let mut rng = example_rng(seed, Stream::Eval, 0, i);
            let ep = read_document(params, doc, &opts, &mut rng)?;
            let t = &ep.trajectory;
            Ok(ExampleResult {
                prediction: t.prediction(),
                label: doc.label,
                p_target: softmax(&t.logits)[doc.label],
                doc_len: t.doc_len,
                read: t.tokens_read,
                skipped: t.tokens_skipped,
                jumped: t.tokens_jumped,
                flops_speed: episode_flops(t, &cost).total(),
                flops_full: cost.full_read(t.doc_len).total(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evaluation { examples })
}
