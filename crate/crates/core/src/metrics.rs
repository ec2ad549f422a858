//! Analytic FLOP cost model and reading statistics.
//!
//! Conventions: a dense layer costs `2·in·out` for the multiply-adds plus
//! `out` for the bias, plus one per element for a nonlinearity; a softmax
//! costs 3 per class; embedding lookups are table reads and cost nothing.
//! Value heads are not evaluated at inference and cost nothing.

use crate::error::{Error, Result};
use crate::model::ModelDims;
use crate::nn::Activation;
use crate::reader::Trajectory;

/// Model dimensions relevant to cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostModel {
    pub embed_dim: u64,
    pub hidden: u64,
    pub trunk_width: u64,
    pub classes: u64,
}

impl From<ModelDims> for CostModel {
    fn from(d: ModelDims) -> Self {
        CostModel {
            embed_dim: d.embed_dim as u64,
            hidden: d.hidden as u64,
            trunk_width: d.trunk_width as u64,
            classes: d.classes as u64,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FlopLedger {
    pub lstm_flops: u64,
    pub skip_agent_flops: u64,
    pub jump_agent_flops: u64,
    pub classifier_flops: u64,
    pub embedding_flops: u64,
}

impl FlopLedger {
    pub fn total(&self) -> u64 {
        self.lstm_flops + self.skip_agent_flops + self.jump_agent_flops + self.classifier_flops + self.embedding_flops
    }
}

impl std::ops::AddAssign for FlopLedger {
    fn add_assign(&mut self, o: Self) {
        self.lstm_flops += o.lstm_flops;
        self.skip_agent_flops += o.skip_agent_flops;
        self.jump_agent_flops += o.jump_agent_flops;
        self.classifier_flops += o.classifier_flops;
        self.embedding_flops += o.embedding_flops;
    }
}

pub fn flops_dense(input: u64, output: u64, activation: Activation) -> Result<u64> {
    if input == 0 || output == 0 {
        return Err(Error::InvalidArgument("dense layer dimensions must be positive".into()));
    }
    let nonlinear = match activation {
        Activation::Linear => 0,
        Activation::Relu => output,
    };
    Ok(2 * input * output + output + nonlinear)
}

/// Same count as a dense layer with a sigmoid/tanh on every output.
fn flops_gate(input: u64, output: u64) -> u64 {
    2 * input * output + output + output
}

fn flops_softmax(classes: u64) -> u64 {
    3 * classes
}

impl CostModel {
    /// Four gate layers over `d + m` inputs, then `c = f⊙c + i⊙g` (3m) and
    /// `h = o⊙tanh(c)` (2m).
    pub fn lstm_step(&self) -> u64 {
        let (d, m) = (self.embed_dim, self.hidden);
        4 * flops_gate(d + m, m) + 5 * m
    }

    pub fn skip_agent(&self) -> u64 {
        let input = self.embed_dim + self.hidden + 6;
        let w = self.trunk_width;
        (2 * input * w + 2 * w) + (2 * w * 2 + 2) + flops_softmax(2)
    }

    pub fn jump_agent(&self) -> u64 {
        let w = self.trunk_width;
        (2 * self.hidden * w + 2 * w) + (2 * w * 4 + 4) + flops_softmax(4)
    }

    pub fn classifier(&self) -> u64 {
        let m = self.hidden;
        (2 * m * m + 2 * m) + (2 * m * self.classes + self.classes)
    }

    /// Per-step agent cost of a read step relative to one LSTM step.
    pub fn agent_overhead_ratio(&self) -> f64 {
        (self.skip_agent() + self.jump_agent()) as f64 / self.lstm_step() as f64
    }

    /// Cost of a vanilla LSTM classifier reading `doc_len` tokens.
    pub fn full_read(&self, doc_len: usize) -> FlopLedger {
        FlopLedger {
            lstm_flops: doc_len as u64 * self.lstm_step(),
            classifier_flops: self.classifier(),
            ..FlopLedger::default()
        }
    }
}

/// Cost of the computations an episode actually executed. Steps whose
/// agents were overridden carry no agent cost.
pub fn episode_flops(traj: &Trajectory, model: &CostModel) -> FlopLedger {
    let mut ledger = FlopLedger {
        classifier_flops: model.classifier(),
        ..FlopLedger::default()
    };
    for step in &traj.steps {
        if step.skip.is_some() {
            ledger.skip_agent_flops += model.skip_agent();
        }
        if step.jump_action.is_some() {
            ledger.lstm_flops += model.lstm_step();
        }
        if step.jump.is_some() {
            ledger.jump_agent_flops += model.jump_agent();
        }
    }
    ledger
}

/// full / speed.
pub fn flop_reduction(full: u64, speed: u64) -> f64 {
    full as f64 / speed as f64
}

pub fn format_reduction(ratio: f64) -> String {
    format!("{ratio:.1}x")
}

/// Percentages of tokens jumped over, read, and skipped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadingStats {
    pub jump_pct: f64,
    pub read_pct: f64,
    pub skip_pct: f64,
}

pub fn reading_stats(traj: &Trajectory) -> ReadingStats {
    stats_from_counts(traj.tokens_read, traj.tokens_skipped, traj.tokens_jumped)
}

pub fn stats_from_counts(read: usize, skipped: usize, jumped: usize) -> ReadingStats {
    let n = (read + skipped + jumped) as f64;
    if n == 0.0 {
        return ReadingStats {
            jump_pct: 0.0,
            read_pct: 0.0,
            skip_pct: 0.0,
        };
    }
    let read_pct = 100.0 * read as f64 / n;
    let jump_pct = 100.0 * jumped as f64 / n;
    ReadingStats {
        jump_pct,
        read_pct,
        skip_pct: 100.0 - read_pct - jump_pct,
    }
}

/// Aggregate evaluation of one dataset split; rendered as a report row.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub dataset: String,
    pub accuracy: f64,
    pub stats: ReadingStats,
    pub flop_full: u64,
    pub flop_speed: u64,
}

impl Report {
    pub fn flop_r(&self) -> f64 {
        flop_reduction(self.flop_full, self.flop_speed)
    }

    /// `dataset acc jump% read% flop_full flop_speed flop_r`, tab-separated.
    pub fn row(&self) -> String {
        format!(
            "{}\t{:.4}\t{:.1}\t{:.1}\t{}\t{}\t{}",
            self.dataset,
            self.accuracy,
            self.stats.jump_pct,
            self.stats.read_pct,
            self.flop_full,
            self.flop_speed,
            format_reduction(self.flop_r())
        )
    }
}
