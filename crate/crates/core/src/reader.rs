//! Sequential reading of a document under control of the skip and jump
//! agents, and backpropagation through the resulting episode.

use rand::Rng;

use crate::agents::{
    argmax, select_action, skip_input, ActionMode, AgentOutput, JumpAction, PrevActions, SkipAction,
};
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::model::{Gradients, ModelParams};
use crate::nn::{dropout, Activation, Dense, DenseCache, DropoutMask, LstmCache};

/// Fully connected ReLU layer of the cell size followed by a linear output layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierHead {
    pub hidden: Dense,
    pub out: Dense,
}

#[derive(Clone, Debug)]
pub struct ClassifierCache {
    hidden: DenseCache,
    out: DenseCache,
}

impl ClassifierHead {
    pub fn glorot<R: Rng + ?Sized>(cell: usize, classes: usize, rng: &mut R) -> Self {
        ClassifierHead {
            hidden: Dense::glorot(cell, cell, Activation::Relu, rng),
            out: Dense::glorot(cell, classes, Activation::Linear, rng),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ClassifierHead {
            hidden: self.hidden.zeros_like(),
            out: self.out.zeros_like(),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.out.output_dim()
    }

    pub fn forward(&self, h: &[f64]) -> Result<(Vec<f64>, ClassifierCache)> {
        let (z, hidden) = self.hidden.forward(h)?;
        let (logits, out) = self.out.forward(&z)?;
        Ok((logits, ClassifierCache { hidden, out }))
    }

    pub fn backward(&self, cache: &ClassifierCache, dlogits: &[f64], grad: &mut ClassifierHead, dh: &mut [f64]) {
        let mut dz = vec![0.0; self.hidden.output_dim()];
        self.out.backward(&cache.out, dlogits, &mut grad.out, Some(&mut dz));
        self.hidden.backward(&cache.hidden, &dz, &mut grad.hidden, Some(dh));
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.hidden.tensors().into_iter().chain(self.out.tensors()).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.hidden
            .tensors_mut()
            .into_iter()
            .chain(self.out.tensors_mut())
            .collect()
    }
}

/// Actions taken at one step, used to replay an episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepActions {
    pub skip: SkipAction,
    pub jump: Option<JumpAction>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentOverride {
    None,
    /// Read every token; the agents are not evaluated.
    ForceRead,
    /// Evaluate the agents but take the given actions.
    Replay(Vec<StepActions>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DropoutRates {
    pub embed: f64,
    pub output: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReadOptions {
    pub mode: ActionMode,
    pub agent_override: AgentOverride,
    /// `Some` in training mode.
    pub dropout: Option<DropoutRates>,
}

impl ReadOptions {
    pub fn greedy() -> Self {
        ReadOptions {
            mode: ActionMode::Greedy,
            agent_override: AgentOverride::None,
            dropout: None,
        }
    }

    pub fn force_read() -> Self {
        ReadOptions {
            agent_override: AgentOverride::ForceRead,
            ..Self::greedy()
        }
    }
}

/// An agent's distribution, the log-probability of the chosen action and
/// the value estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub dist: Vec<f64>,
    pub logprob: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub position: usize,
    pub skip_action: SkipAction,
    /// `None` when the agents were overridden.
    pub skip: Option<Decision>,
    /// Present iff `skip_action` is `Read`.
    pub jump_action: Option<JumpAction>,
    pub jump: Option<Decision>,
    pub reward: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub doc_len: usize,
    pub tokens_read: usize,
    pub tokens_skipped: usize,
    pub tokens_jumped: usize,
    pub logits: Vec<f64>,
}

impl Trajectory {
    pub fn agents_evaluated(&self) -> bool {
        self.steps.iter().any(|s| s.skip.is_some())
    }

    pub fn actions(&self) -> Vec<StepActions> {
        self.steps
            .iter()
            .map(|s| StepActions {
                skip: s.skip_action,
                jump: s.jump_action,
            })
            .collect()
    }

    pub fn prediction(&self) -> usize {
        predict(&self.logits)
    }
}

struct StepCache {
    token: usize,
    embed_mask: Option<DropoutMask>,
    /// Number of LSTM reads before this step.
    h_index: usize,
    skip: Option<AgentOutput>,
    lstm: Option<LstmCache>,
    jump: Option<AgentOutput>,
}

/// A trajectory plus the intermediate values needed for backpropagation.
pub struct Episode {
    pub trajectory: Trajectory,
    steps: Vec<StepCache>,
    output_mask: Option<DropoutMask>,
    classifier: ClassifierCache,
}

/// Upstream gradient for one agent decision.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecisionGrad {
    pub dlogits: Vec<f64>,
    pub dvalue: f64,
}

/// Loss gradients with respect to every output of an episode.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeSeeds {
    pub class_dlogits: Vec<f64>,
    pub skip: Vec<Option<DecisionGrad>>,
    pub jump: Vec<Option<DecisionGrad>>,
}

/// Argmax, lowest index on ties.
pub fn predict(logits: &[f64]) -> usize {
    argmax(logits)
}

fn decide<R: Rng + ?Sized>(out: &AgentOutput, forced: Option<usize>, mode: ActionMode, rng: &mut R) -> (usize, Decision) {
    let action = forced.unwrap_or_else(|| select_action(&out.probs, mode, rng));
    let d = Decision {
        dist: out.probs.clone(),
        logprob: out.probs[action].ln(),
        value: out.value,
    };
    (action, d)
}

pub fn read_document<R: Rng + ?Sized>(
    params: &ModelParams,
    doc: &Document,
    opts: &ReadOptions,
    rng: &mut R,
) -> Result<Episode> {
    if doc.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let total = doc.len();
    let m = params.lstm.hidden();
    let training = opts.dropout.is_some();
    let rates = opts.dropout.unwrap_or(DropoutRates { embed: 0.0, output: 0.0 });
    let replay = match &opts.agent_override {
        AgentOverride::Replay(seq) => Some(seq.as_slice()),
        _ => None,
    };
    let force = opts.agent_override == AgentOverride::ForceRead;

    let mut h = vec![0.0; m];
    let mut c = vec![0.0; m];
    let mut prev = PrevActions::default();
    let mut pos = 0;
    let mut reads = 0;
    let mut records = Vec::new();
    let mut caches = Vec::new();
    let (mut skipped, mut jumped) = (0, 0);

    while pos < total {
        let t = records.len();
        let planned = match replay {
            Some(seq) => Some(*seq.get(t).ok_or_else(|| {
                Error::InvalidArgument(format!("replay ends at step {t} before the document does"))
            })?),
            None => None,
        };
        let token = doc.tokens[pos].id;
        let (x, embed_mask) = dropout(params.embedding.lookup(token), rates.embed, training, rng);

        let (skip_action, skip_dec, skip_out) = if force {
            (SkipAction::Read, None, None)
        } else {
            let out = params.skip.evaluate(&skip_input(&x, &h, prev))?;
            let (a, d) = decide(&out, planned.map(|p| p.skip.index()), opts.mode, rng);
            (SkipAction::from_index(a), Some(d), Some(out))
        };

        let mut cache = StepCache {
            token,
            embed_mask,
            h_index: reads,
            skip: skip_out,
            lstm: None,
            jump: None,
        };
        let mut record = StepRecord {
            position: pos,
            skip_action,
            skip: skip_dec,
            jump_action: None,
            jump: None,
            reward: 0.0,
        };

        match skip_action {
            SkipAction::Skip => {
                skipped += 1;
                pos += 1;
                prev = PrevActions {
                    skip: Some(SkipAction::Skip),
                    jump: None,
                };
            }
            SkipAction::Read => {
                let (h_new, c_new, lstm_cache) = params.lstm.step(&x, &h, &c)?;
                h = h_new;
                c = c_new;
                reads += 1;
                cache.lstm = Some(lstm_cache);

                let jump_action = if force {
                    JumpAction::NextWord
                } else {
                    let out = params.jump.evaluate(&h)?;
                    let forced = planned.map(|p| {
                        p.jump
                            .ok_or_else(|| Error::InvalidArgument(format!("replay step {t} reads but has no jump")))
                    });
                    let forced = forced.transpose()?.map(JumpAction::index);
                    let (a, d) = decide(&out, forced, opts.mode, rng);
                    record.jump = Some(d);
                    cache.jump = Some(out);
                    JumpAction::from_index(a)
                };
                record.jump_action = Some(jump_action);
                let target = doc.jump_table.target(pos, jump_action);
                jumped += target - pos - 1;
                pos = target;
                prev = PrevActions {
                    skip: Some(SkipAction::Read),
                    jump: Some(jump_action),
                };
            }
        }
        records.push(record);
        caches.push(cache);
    }

    let (h_out, output_mask) = dropout(&h, rates.output, training, rng);
    let (logits, classifier) = params.classifier.forward(&h_out)?;

    Ok(Episode {
        trajectory: Trajectory {
            steps: records,
            doc_len: total,
            tokens_read: reads,
            tokens_skipped: skipped,
            tokens_jumped: jumped,
            logits,
        },
        steps: caches,
        output_mask,
        classifier,
    })
}

/// Plain LSTM classifier over every token of the document (no agents, no dropout).
pub fn full_read_logits(params: &ModelParams, doc: &Document) -> Result<Vec<f64>> {
    if doc.is_empty() {
        return Err(Error::EmptyDocument);
    }
    let m = params.lstm.hidden();
    let mut h = vec![0.0; m];
    let mut c = vec![0.0; m];
    for id in doc.ids() {
        let (h2, c2, _) = params.lstm.step(params.embedding.lookup(id), &h, &c)?;
        h = h2;
        c = c2;
    }
    Ok(params.classifier.forward(&h)?.0)
}

impl Episode {
    /// Accumulates into `grad` the gradient of the loss whose derivatives
    /// with respect to the episode outputs are given by `seeds`. Embedding
    /// gradients are only produced when `train_embedding` is set.
    pub fn backward(&self, params: &ModelParams, seeds: &EpisodeSeeds, grad: &mut Gradients, train_embedding: bool) {
        let m = params.lstm.hidden();
        let d = params.embedding.dim();
        let reads = self.trajectory.tokens_read;
        let mut dh = vec![vec![0.0; m]; reads + 1];
        let mut dx = vec![vec![0.0; d]; self.steps.len()];

        let mut dh_out = vec![0.0; m];
        params
            .classifier
            .backward(&self.classifier, &seeds.class_dlogits, &mut grad.classifier, &mut dh_out);
        if let Some(mask) = &self.output_mask {
            mask.apply(&mut dh_out);
        }
        for (a, b) in dh[reads].iter_mut().zip(&dh_out) {
            *a += b;
        }

        for (t, step) in self.steps.iter().enumerate() {
            if let (Some(out), Some(Some(seed))) = (&step.skip, seeds.skip.get(t)) {
                let mut dinput = vec![0.0; params.skip.input_dim()];
                params.skip.backward(out, &seed.dlogits, seed.dvalue, &mut grad.skip, Some(&mut dinput));
                for (a, b) in dx[t].iter_mut().zip(&dinput[..d]) {
                    *a += b;
                }
                for (a, b) in dh[step.h_index].iter_mut().zip(&dinput[d..d + m]) {
                    *a += b;
                }
            }
            if let (Some(out), Some(Some(seed))) = (&step.jump, seeds.jump.get(t)) {
                let mut dinput = vec![0.0; m];
                params.jump.backward(out, &seed.dlogits, seed.dvalue, &mut grad.jump, Some(&mut dinput));
                for (a, b) in dh[step.h_index + 1].iter_mut().zip(&dinput) {
                    *a += b;
                }
            }
        }

        // backpropagation through the read steps only
        let mut dc = vec![0.0; m];
        for (t, step) in self.steps.iter().enumerate().rev() {
            let Some(cache) = &step.lstm else { continue };
            let k = step.h_index + 1;
            let mut dh_prev = vec![0.0; m];
            let mut dc_prev = vec![0.0; m];
            let dh_k = std::mem::take(&mut dh[k]);
            params.lstm.backward(
                cache,
                &dh_k,
                &dc,
                &mut grad.lstm,
                Some(&mut dx[t]),
                &mut dh_prev,
                &mut dc_prev,
            );
            for (a, b) in dh[k - 1].iter_mut().zip(&dh_prev) {
                *a += b;
            }
            dc = dc_prev;
        }

        if train_embedding {
            for (step, mut g) in self.steps.iter().zip(dx) {
                if let Some(mask) = &step.embed_mask {
                    mask.apply(&mut g);
                }
                grad.add_embedding_row(step.token, &g);
            }
        }
    }
}

/// Renders the episode over the original surfaces: skipped tokens become
/// `~w~`, each jumped-over span is wrapped in `[[ ... ]]`.
pub fn annotate(doc: &Document, traj: &Trajectory) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(doc.len());
    for (k, step) in traj.steps.iter().enumerate() {
        let surface = &doc.tokens[step.position].surface;
        match step.skip_action {
            SkipAction::Skip => parts.push(format!("~{surface}~")),
            SkipAction::Read => {
                parts.push(surface.clone());
                let next = traj
                    .steps
                    .get(k + 1)
                    .map_or(doc.len(), |s| s.position);
                if next > step.position + 1 {
                    let span: Vec<&str> = doc.tokens[step.position + 1..next]
                        .iter()
                        .map(|t| t.surface.as_str())
                        .collect();
                    parts.push(format!("[[{}]]", span.join(" ")));
                }
            }
        }
    }
    parts.join(" ")
}

/// Greedy annotated reading of one document.
pub fn trace(params: &ModelParams, doc: &Document, force_read: bool) -> Result<String> {
    let opts = if force_read {
        ReadOptions::force_read()
    } else {
        ReadOptions::greedy()
    };
    // greedy mode without dropout never draws from the generator
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let ep = read_document(params, doc, &opts, &mut rng)?;
    Ok(annotate(doc, &ep.trajectory))
}
