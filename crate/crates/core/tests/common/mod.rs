#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sjlstm::agents::ActionMode;
use sjlstm::corpus::{Document, Vocabulary};
use sjlstm::model::{ModelDims, ModelParams};
use sjlstm::reader::{read_document, AgentOverride, DropoutRates, ReadOptions};
use sjlstm::trainer::{assign_rewards, frozen_loss_and_gradient, EntropyTarget, FrozenTargets, TrainConfig};

const WORDS: &[&str] = &["a", "b", "c", "d", "e", "f", "g"];
const MARKS: &[&str] = &[",", ";", ".", "!", "?"];

/// Random punctuated text of `n` tokens.
pub fn random_text<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.25) {
                *MARKS.choose(rng).unwrap()
            } else {
                *WORDS.choose(rng).unwrap()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn toy_vocab() -> Vocabulary {
    let all: Vec<&str> = WORDS.iter().chain(MARKS).copied().collect();
    Vocabulary::build([all.join(" ").as_str()])
}

/// Toy model: d=4, m=6, trunk 3, 3 classes.
pub fn toy_params(vocab: &Vocabulary, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dims = ModelDims::new(vocab.len(), 4, 6, 3);
    dims.trunk_width = 3;
    let mut p = ModelParams::init(dims, &mut rng);
    p.embedding.trainable = true;
    p
}

/// Largest elementwise relative error between analytic and central
/// finite-difference gradients, plus the number of entries compared.
pub struct GradCheck {
    pub max_rel: f64,
    pub entries: usize,
    pub skip_decisions: usize,
    pub jump_decisions: usize,
}

const EPS: f64 = 1e-5;
/// Entries with both magnitudes below this are compared absolutely.
const FLOOR: f64 = 1e-5;

pub fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FLOOR)
}

/// Samples one episode on a random document, freezes its actions, returns
/// and advantages, and checks the gradient of the total loss with respect to
/// every parameter.
pub fn gradient_check(seed: u64) -> GradCheck {
    let vocab = toy_vocab();
    let mut params = toy_params(&vocab, seed);
    // mild preference for reading word by word keeps episodes long
    params.skip.policy.bias[1] += 1.0;
    params.jump.policy.bias[0] += 1.5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD0C);
    let len = rng.gen_range(6..16);
    let doc = Document::from_text(&random_text(&mut rng, len), &vocab, rng.gen_range(0..3)).unwrap();

    let mut cfg = TrainConfig::default();
    cfg.alpha = 1.0;
    cfg.beta = 0.7;
    cfg.gamma = 0.9;
    cfg.entropy_weight = 0.3;
    if seed % 2 == 1 {
        cfg.entropy_target = EntropyTarget::ReadBiased95;
    }

    let sampled = ReadOptions {
        mode: ActionMode::Sample,
        agent_override: AgentOverride::None,
        dropout: None,
    };
    let mut ep = read_document(&params, &doc, &sampled, &mut rng).unwrap();
    assign_rewards(&mut ep.trajectory, cfg.c_skip);
    let targets = FrozenTargets::from_trajectory(&ep.trajectory, doc.label, cfg.w_rolling);
    let skip_decisions = ep.trajectory.steps.iter().filter(|s| s.skip.is_some()).count();
    let jump_decisions = ep.trajectory.steps.iter().filter(|s| s.jump.is_some()).count();

    let replay = ReadOptions {
        mode: ActionMode::Greedy,
        agent_override: AgentOverride::Replay(ep.trajectory.actions()),
        dropout: Some(DropoutRates {
            embed: 0.2,
            output: 0.2,
        }),
    };
    let mask_seed = seed.wrapping_mul(31).wrapping_add(7);
    let loss_at = |p: &ModelParams| {
        let mut r = ChaCha8Rng::seed_from_u64(mask_seed);
        frozen_loss_and_gradient(p, &doc, &replay, &targets, &cfg, &mut r).unwrap()
    };
    let (_, grads) = loss_at(&params);

    let mut analytic: Vec<f64> = grads.dense_tensors().concat();
    let d = params.embedding.dim();
    for r in 0..params.embedding.vocab_size() {
        match grads.embedding.get(&r) {
            Some(row) => analytic.extend(row),
            None => analytic.extend(std::iter::repeat(0.0).take(d)),
        }
    }

    let mut max_rel: f64 = 0.0;
    let mut k = 0;
    let n_dense = params.dense_tensors().iter().map(|t| t.len()).sum::<usize>();
    let total = n_dense + params.embedding.matrix.as_slice().len();
    for idx in 0..total {
        let numeric = {
            let original = value(&mut params, idx, None);
            value(&mut params, idx, Some(original + EPS));
            let up = loss_at(&params).0;
            value(&mut params, idx, Some(original - EPS));
            let down = loss_at(&params).0;
            value(&mut params, idx, Some(original));
            (up - down) / (2.0 * EPS)
        };
        max_rel = max_rel.max(rel_error(analytic[idx], numeric));
        k += 1;
    }
    GradCheck {
        max_rel,
        entries: k,
        skip_decisions,
        jump_decisions,
    }
}

/// Reads (and optionally overwrites) the flat parameter at `idx`, ordered
/// as dense tensors followed by the embedding table.
fn value(p: &mut ModelParams, idx: usize, set: Option<f64>) -> f64 {
    let mut i = idx;
    let mut slot: Option<&mut f64> = None;
    for t in p.dense_tensors_mut() {
        if i < t.len() {
            slot = Some(&mut t[i]);
            break;
        }
        i -= t.len();
    }
    let slot = match slot {
        Some(s) => s,
        None => &mut p.embedding.matrix.as_mut_slice()[i],
    };
    if let Some(v) = set {
        *slot = v;
    }
    *slot
}

pub struct SyntheticOutcome {
    pub pretrain_acc: f64,
    pub speed: sjlstm::metrics::Report,
    pub seconds: f64,
}

/// Generated keyword task: pretrain, speed-read train, evaluate on the test split.
pub fn synthetic_run(cfg: &TrainConfig, n_train: usize, n_test: usize, log: bool) -> SyntheticOutcome {
    use sjlstm::corpus::{make_documents, synthetic, LabelMap};
    use sjlstm::eval::evaluate;
    use sjlstm::seeding::{example_rng, Stream};
    use sjlstm::trainer::{pretrain, speedread_train};

    let start = std::time::Instant::now();
    let data_seed = cfg.seed.wrapping_mul(1000);
    let train_raw = synthetic::keyword_task(n_train, data_seed + 1);
    let valid_raw = synthetic::keyword_task(n_test / 2, data_seed + 2);
    let test_raw = synthetic::keyword_task(n_test, data_seed + 3);
    let vocab = Vocabulary::build(train_raw.iter().map(|e| e.text.as_str()));
    let labels = LabelMap::from_names(&["neg", "pos"]);
    let train = make_documents(&train_raw, &vocab, &labels).unwrap();
    let valid = make_documents(&valid_raw, &vocab, &labels).unwrap();
    let test = make_documents(&test_raw, &vocab, &labels).unwrap();

    let mut dims = ModelDims::new(vocab.len(), cfg.embed_dim, cfg.cell_size, labels.len());
    dims.trunk_width = cfg.trunk_width;
    let mut params = ModelParams::init(dims, &mut example_rng(cfg.seed, Stream::Init, 0, 0));
    let mut sink = |l: &sjlstm::trainer::LogLine| {
        if log {
            eprintln!("{l}");
        }
    };
    pretrain(&mut params, &train, &valid, cfg, &mut sink).unwrap();
    let pretrain_acc = evaluate(&params, &test, ActionMode::Greedy, true, cfg.seed)
        .unwrap()
        .accuracy();
    if log {
        eprintln!("pretrain test acc {pretrain_acc:.4} at {:.1}s", start.elapsed().as_secs_f64());
    }
    speedread_train(&mut params, &train, &valid, cfg, &mut sink).unwrap();
    let speed = evaluate(&params, &test, cfg.action_mode, false, cfg.seed)
        .unwrap()
        .report("synthetic");
    SyntheticOutcome {
        pretrain_acc,
        speed,
        seconds: start.elapsed().as_secs_f64(),
    }
}
