//! Two-phase training: supervised full-read pretraining, then advantage
//! actor-critic training of the skip and jump agents.

mod config;
pub mod losses;

pub use config::{EntropyTarget, TrainConfig, KEYS as CONFIG_KEYS};
pub use losses::{
    actor_loss, assign_rewards, class_loss, critic_loss, entropy_loss, episode_objective, returns,
    step_reward, terminal_bonus, total_loss, FrozenTargets, LossComponents,
};

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::agents::ActionMode;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::eval::{evaluate, Evaluation};
use crate::model::{Gradients, ModelParams};
use crate::nn::{clip_global_norm, rmsprop_step, RmsProp};
use crate::reader::{read_document, AgentOverride, DropoutRates, ReadOptions};
use crate::seeding::{example_rng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Pretrain,
    SpeedRead,
}

/// RMSprop over every dense tensor plus the embedding table.
pub struct Optimizer {
    dense: RmsProp,
    embedding_sq: Vec<f64>,
}

impl Optimizer {
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        Optimizer {
            dense: RmsProp::new(lr, params.dense_tensors().iter().map(|t| t.len())),
            embedding_sq: vec![0.0; params.embedding.matrix.as_slice().len()],
        }
    }

    /// The embedding is only touched when it is trainable; its padding row
    /// never changes.
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) {
        if params.embedding.trainable {
            let d = params.embedding.dim();
            let zero = vec![0.0; d];
            for r in 1..params.embedding.vocab_size() {
                let g = grads.embedding.get(&r).map_or(zero.as_slice(), Vec::as_slice);
                let v = &mut self.embedding_sq[r * d..(r + 1) * d];
                rmsprop_step(params.embedding.matrix.row_mut(r), g, v, self.dense.lr);
            }
        }
        self.dense.update(params.dense_tensors_mut(), grads.dense_tensors());
    }
}

/// Loss and gradient of one episode.
pub struct ExampleOutcome {
    pub components: LossComponents,
    pub grads: Gradients,
    pub correct: bool,
    pub read: usize,
    pub skipped: usize,
    pub jumped: usize,
    pub doc_len: usize,
}

fn phase_options(phase: Phase, cfg: &TrainConfig) -> ReadOptions {
    let dropout = Some(DropoutRates {
        embed: cfg.dropout_embed,
        output: cfg.dropout_output,
    });
    match phase {
        Phase::Pretrain => ReadOptions {
            mode: ActionMode::Greedy,
            agent_override: AgentOverride::ForceRead,
            dropout,
        },
        // exploration: actions are always sampled while training
        Phase::SpeedRead => ReadOptions {
            mode: ActionMode::Sample,
            agent_override: AgentOverride::None,
            dropout,
        },
    }
}

/// Runs one training episode and backpropagates the weighted total loss.
pub fn example_gradient<R: Rng + ?Sized>(
    params: &ModelParams,
    doc: &Document,
    cfg: &TrainConfig,
    phase: Phase,
    rng: &mut R,
) -> Result<ExampleOutcome> {
    let opts = phase_options(phase, cfg);
    let mut ep = read_document(params, doc, &opts, rng)?;
    assign_rewards(&mut ep.trajectory, cfg.c_skip);
    let targets = FrozenTargets::from_trajectory(&ep.trajectory, doc.label, cfg.w_rolling);
    let (components, seeds) = episode_objective(&ep.trajectory, doc.label, &targets, cfg);
    let mut grads = Gradients::zeros_for(params);
    ep.backward(params, &seeds, &mut grads, params.embedding.trainable);
    let t = &ep.trajectory;
    Ok(ExampleOutcome {
        components,
        grads,
        correct: t.prediction() == doc.label,
        read: t.tokens_read,
        skipped: t.tokens_skipped,
        jumped: t.tokens_jumped,
        doc_len: t.doc_len,
    })
}

/// Loss and gradient of the weighted total for a fixed action sequence and
/// fixed returns/advantages. `rng` only feeds dropout.
pub fn frozen_loss_and_gradient<R: Rng + ?Sized>(
    params: &ModelParams,
    doc: &Document,
    opts: &ReadOptions,
    targets: &FrozenTargets,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(f64, Gradients)> {
    let ep = read_document(params, doc, opts, rng)?;
    let (components, seeds) = episode_objective(&ep.trajectory, doc.label, targets, cfg);
    let mut grads = Gradients::zeros_for(params);
    ep.backward(params, &seeds, &mut grads, params.embedding.trainable);
    Ok((components.total(cfg), grads))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchStats {
    pub loss: f64,
    pub accuracy: f64,
    pub read_pct: f64,
    pub jump_pct: f64,
    pub grad_norm: f64,
}

/// One optimizer step on the batch-mean loss.
pub fn train_batch(
    params: &mut ModelParams,
    batch: &[(usize, &Document)],
    cfg: &TrainConfig,
    phase: Phase,
    epoch: usize,
    optimizer: &mut Optimizer,
) -> Result<BatchStats> {
    let stream = match phase {
        Phase::Pretrain => Stream::Pretrain,
        Phase::SpeedRead => Stream::SpeedRead,
    };
    let shared: &ModelParams = params;
    let outcomes = batch
        .par_iter()
        .map(|&(index, doc)| {
            let mut rng = example_rng(cfg.seed, stream, epoch, index);
            example_gradient(shared, doc, cfg, phase, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = 1.0 / outcomes.len() as f64;
    let mut grads = Gradients::zeros_for(params);
    for o in &outcomes {
        grads.add_scaled(&o.grads, scale);
    }
    let grad_norm = clip_global_norm(grads.all_tensors_mut(), cfg.clip);
    optimizer.step(params, &grads);

    let components: Vec<LossComponents> = outcomes.iter().map(|o| o.components).collect();
    let tokens: usize = outcomes.iter().map(|o| o.doc_len).sum();
    let read: usize = outcomes.iter().map(|o| o.read).sum();
    let jumped: usize = outcomes.iter().map(|o| o.jumped).sum();
    Ok(BatchStats {
        loss: total_loss(&components, cfg),
        accuracy: outcomes.iter().filter(|o| o.correct).count() as f64 * scale,
        read_pct: 100.0 * read as f64 / tokens as f64,
        jump_pct: 100.0 * jumped as f64 / tokens as f64,
        grad_norm,
    })
}

/// Training progress, one value per logged line.
#[derive(Clone, Debug, PartialEq)]
pub enum LogLine {
    Batch {
        epoch: usize,
        batch: usize,
        stats: BatchStats,
    },
    Validation {
        epoch: usize,
        accuracy: f64,
        read_pct: f64,
        jump_pct: f64,
        mean_return: f64,
    },
}

impl fmt::Display for LogLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogLine::Batch { epoch, batch, stats } => write!(
                f,
                "{epoch}\t{batch}\t{:.6}\t{:.4}\t{:.2}\t{:.2}",
                stats.loss, stats.accuracy, stats.read_pct, stats.jump_pct
            ),
            LogLine::Validation {
                epoch,
                accuracy,
                read_pct,
                jump_pct,
                mean_return,
            } => write!(f, "{epoch}\t{accuracy:.4}\t{read_pct:.2}\t{jump_pct:.2}\t{mean_return:.6}"),
        }
    }
}

/// Which epoch was kept and its validation numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSummary {
    pub best_epoch: usize,
    pub validation: Vec<LogLine>,
}

fn validation_line(epoch: usize, eval: &Evaluation, cfg: &TrainConfig) -> LogLine {
    let s = eval.stats();
    LogLine::Validation {
        epoch,
        accuracy: eval.accuracy(),
        read_pct: s.read_pct,
        jump_pct: s.jump_pct,
        mean_return: eval.mean_return(cfg.c_skip, cfg.w_rolling),
    }
}

fn run_epochs(
    params: &mut ModelParams,
    train: &[Document],
    cfg: &TrainConfig,
    phase: Phase,
    epochs: usize,
    mut validate: impl FnMut(&ModelParams, usize) -> Result<(f64, LogLine)>,
    log: &mut dyn FnMut(&LogLine),
    include_initial: bool,
) -> Result<PhaseSummary> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    cfg.validate()?;
    let mut optimizer = Optimizer::new(params, cfg.lr);
    let mut validation = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;

    if include_initial {
        let (score, line) = validate(params, 0)?;
        log(&line);
        validation.push(line);
        best = Some((score, 0, params.clone()));
    }

    let shuffle_stream = match phase {
        Phase::Pretrain => 0,
        Phase::SpeedRead => 1,
    };
    for epoch in 1..=epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut example_rng(cfg.seed, Stream::Shuffle, epoch, shuffle_stream));
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<(usize, &Document)> = chunk.iter().map(|&i| (i, &train[i])).collect();
            let stats = train_batch(params, &batch, cfg, phase, epoch, &mut optimizer)?;
            log(&LogLine::Batch {
                epoch,
                batch: b + 1,
                stats,
            });
        }
        let (score, line) = validate(params, epoch)?;
        log(&line);
        validation.push(line);
        if best.as_ref().map_or(true, |(s, _, _)| score > *s) {
            best = Some((score, epoch, params.clone()));
        }
    }

    let best_epoch = match best {
        Some((_, epoch, p)) => {
            *params = p;
            epoch
        }
        None => 0,
    };
    Ok(PhaseSummary {
        best_epoch,
        validation,
    })
}

/// Full-read supervised training with a trainable embedding; keeps the
/// epoch with the best validation accuracy.
pub fn pretrain(
    params: &mut ModelParams,
    train: &[Document],
    valid: &[Document],
    cfg: &TrainConfig,
    log: &mut dyn FnMut(&LogLine),
) -> Result<PhaseSummary> {
    params.embedding.trainable = true;
    let seed = cfg.seed;
    let validate = |p: &ModelParams, epoch: usize| {
        let eval = evaluate(p, valid, ActionMode::Greedy, true, seed)?;
        Ok((eval.accuracy(), validation_line(epoch, &eval, cfg)))
    };
    run_epochs(params, train, cfg, Phase::Pretrain, cfg.pretrain_epochs, validate, log, false)
}

/// Actor-critic speed-read training on top of a pretrained model. The agent
/// heads are warm-started to full reading and the embedding is frozen. Keeps
/// the epoch (the warm-started model included) with the highest mean
/// validation return under `cfg.action_mode`.
pub fn speedread_train(
    params: &mut ModelParams,
    train: &[Document],
    valid: &[Document],
    cfg: &TrainConfig,
    log: &mut dyn FnMut(&LogLine),
) -> Result<PhaseSummary> {
    params.warm_start_agents();
    params.embedding.trainable = false;
    let seed = cfg.seed;
    let mode = cfg.action_mode;
    let validate = |p: &ModelParams, epoch: usize| {
        let eval = evaluate(p, valid, mode, false, seed)?;
        Ok((eval.mean_return(cfg.c_skip, cfg.w_rolling), validation_line(epoch, &eval, cfg)))
    };
    run_epochs(params, train, cfg, Phase::SpeedRead, cfg.speedread_epochs, validate, log, true)
}
