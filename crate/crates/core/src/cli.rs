//! Command-line entry point: `pretrain`, `speedread`, `eval` and `trace`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::agents::ActionMode;
use crate::checkpoint::{SavedModel, CHECKPOINT_FILE, LABELS_FILE, VOCAB_FILE};
use crate::corpus::{load_dataset, load_embeddings, read_examples, DataFormat, Document, EmbeddingTable, LabelMap, Vocabulary};
use crate::error::Error;
use crate::eval::evaluate;
use crate::model::{ModelDims, ModelParams};
use crate::reader::trace;
use crate::seeding::{example_rng, Stream};
use crate::trainer::{pretrain, speedread_train, LogLine, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const THREADS_ENV: &str = "SJLSTM_THREADS";

const MANIFEST_FILE: &str = "manifest.json";
const TRAIN_LOG: &str = "train.log";
const VALID_LOG: &str = "valid.log";

#[derive(Parser, Debug)]
#[command(name = "sjlstm", version, about = "Skip-and-jump speed-reading LSTM classifier")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Train the full-read classifier.
    Pretrain(TrainArgs),
    /// Train the skip and jump agents on top of a pretrained checkpoint.
    Speedread(SpeedreadArgs),
    /// Evaluate a checkpoint on a labelled split and print a report row.
    Eval(EvalArgs),
    /// Annotate each line of a text file with the reading behaviour.
    Trace(TraceArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding train.tsv, valid.tsv and optionally embeddings.txt.
    #[arg(long)]
    data: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct SpeedreadArgs {
    /// Pretrained checkpoint; vocab.txt and labels.txt are read from its directory.
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Greedy,
    Sample,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Labelled split (TSV, or CSV by extension).
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "greedy")]
    mode: ModeArg,
    /// Read every token without consulting the agents.
    #[arg(long)]
    force_read: bool,
    /// Seed for sampled mode.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset name in the report row; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,
    /// Per-example `index<TAB>gold<TAB>predicted` output.
    #[arg(long)]
    predictions: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Plain text, one document per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    force_read: bool,
}

/// One flag per config key; flags override file values.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long = "lr")]
    lr: Option<String>,
    #[arg(long = "batch_size")]
    batch_size: Option<String>,
    #[arg(long = "dropout_embed")]
    dropout_embed: Option<String>,
    #[arg(long = "dropout_output")]
    dropout_output: Option<String>,
    #[arg(long = "cell_size")]
    cell_size: Option<String>,
    #[arg(long = "embed_dim")]
    embed_dim: Option<String>,
    #[arg(long = "trunk_width")]
    trunk_width: Option<String>,
    #[arg(long = "clip")]
    clip: Option<String>,
    #[arg(long = "c_skip")]
    c_skip: Option<String>,
    #[arg(long = "w_rolling")]
    w_rolling: Option<String>,
    #[arg(long = "entropy_weight")]
    entropy_weight: Option<String>,
    #[arg(long = "alpha")]
    alpha: Option<String>,
    #[arg(long = "beta")]
    beta: Option<String>,
    #[arg(long = "gamma")]
    gamma: Option<String>,
    #[arg(long = "action_mode")]
    action_mode: Option<String>,
    #[arg(long = "entropy_target")]
    entropy_target: Option<String>,
    #[arg(long = "pretrain_epochs")]
    pretrain_epochs: Option<String>,
    #[arg(long = "speedread_epochs")]
    speedread_epochs: Option<String>,
    #[arg(long = "seed")]
    seed: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> [(&'static str, &Option<String>); 19] {
        [
            ("lr", &self.lr),
            ("batch_size", &self.batch_size),
            ("dropout_embed", &self.dropout_embed),
            ("dropout_output", &self.dropout_output),
            ("cell_size", &self.cell_size),
            ("embed_dim", &self.embed_dim),
            ("trunk_width", &self.trunk_width),
            ("clip", &self.clip),
            ("c_skip", &self.c_skip),
            ("w_rolling", &self.w_rolling),
            ("entropy_weight", &self.entropy_weight),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
            ("action_mode", &self.action_mode),
            ("entropy_target", &self.entropy_target),
            ("pretrain_epochs", &self.pretrain_epochs),
            ("speedread_epochs", &self.speedread_epochs),
            ("seed", &self.seed),
        ]
    }
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_input_error() { EXIT_INPUT } else { EXIT_INTERNAL },
            message: e.to_string(),
        }
    }
}

/// Attaches the file name to errors that do not already carry it.
fn in_file(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| {
        let mut c = CliError::from(e);
        if !c.message.contains(&*path.to_string_lossy()) {
            c.message = format!("{}: {}", path.display(), c.message);
        }
        c
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Snapshot of a training run, written before training starts and
/// completed when it ends.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: TrainConfig,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub train_path: PathBuf,
    pub valid_path: PathBuf,
    pub embeddings_path: Option<PathBuf>,
    pub init_checkpoint: Option<PathBuf>,
    pub checkpoint: PathBuf,
    pub git_describe: String,
    pub started_unix: u64,
    pub finished_unix: Option<u64>,
    pub best_epoch: Option<usize>,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<()> {
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(manifest).map_err(|e| CliError {
        code: EXIT_INTERNAL,
        message: format!("serializing manifest: {e}"),
    })?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e).into())
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError {
        code: EXIT_INPUT,
        message: format!("{THREADS_ENV} must be a positive integer, got {v:?}"),
    })?;
    // a second initialization in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn load_config(args: &TrainArgs) -> CliResult<TrainConfig> {
    let mut cfg = match &args.config {
        Some(p) => TrainConfig::load(p).map_err(in_file(p))?,
        None => TrainConfig::default(),
    };
    for (key, value) in args.overrides.pairs() {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_INPUT,
            message: format!("{}: no such file", path.display()),
        })
    }
}

struct Splits {
    train: Vec<Document>,
    valid: Vec<Document>,
    train_path: PathBuf,
    valid_path: PathBuf,
}

fn load_splits(data: &Path, vocab: &Vocabulary, labels: &LabelMap) -> CliResult<Splits> {
    let train_path = data.join("train.tsv");
    let valid_path = data.join("valid.tsv");
    require_file(&train_path)?;
    require_file(&valid_path)?;
    let train = load_dataset(&train_path, DataFormat::Tsv, vocab, labels).map_err(in_file(&train_path))?;
    let valid = load_dataset(&valid_path, DataFormat::Tsv, vocab, labels).map_err(in_file(&valid_path))?;
    if train.is_empty() {
        return Err(in_file(&train_path)(Error::EmptyTrainingSet));
    }
    Ok(Splits {
        train,
        valid,
        train_path,
        valid_path,
    })
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

/// Collects log lines: batches go to train.log, epochs to valid.log.
#[derive(Default)]
struct Logs {
    train: String,
    valid: String,
}

impl Logs {
    fn push(&mut self, line: &LogLine) {
        let target = match line {
            LogLine::Batch { .. } => &mut self.train,
            LogLine::Validation { .. } => &mut self.valid,
        };
        let _ = writeln!(target, "{line}");
        if let LogLine::Validation { .. } = line {
            eprintln!("valid\t{line}");
        }
    }

    fn save(&self, dir: &Path) -> CliResult<()> {
        write_text(&dir.join(TRAIN_LOG), &self.train)?;
        write_text(&dir.join(VALID_LOG), &self.valid)
    }
}

/// Loads a checkpoint together with the vocabulary and labels stored beside it.
fn load_model(ckpt: &Path) -> CliResult<SavedModel> {
    require_file(ckpt)?;
    let dir = ckpt.parent().unwrap_or(Path::new("."));
    require_file(&dir.join(VOCAB_FILE))?;
    require_file(&dir.join(LABELS_FILE))?;
    Ok(SavedModel::load(ckpt)?)
}

fn cmd_pretrain(args: &TrainArgs) -> CliResult<()> {
    let cfg = load_config(args)?;
    let train_path = args.data.join("train.tsv");
    require_file(&train_path)?;
    let train_raw = read_examples(&train_path, DataFormat::Tsv).map_err(in_file(&train_path))?;
    let vocab = Vocabulary::build(train_raw.iter().map(|e| e.text.as_str()));
    let labels = LabelMap::from_examples(&train_raw);
    let splits = load_splits(&args.data, &vocab, &labels)?;

    let mut init_rng = example_rng(cfg.seed, Stream::Init, 0, 0);
    let emb_path = args.data.join("embeddings.txt");
    let embeddings_path = emb_path.is_file().then_some(emb_path);
    let embedding = match &embeddings_path {
        Some(p) => load_embeddings(p, &vocab, cfg.embed_dim, &mut init_rng).map_err(in_file(p))?,
        None => EmbeddingTable::random(vocab.len(), cfg.embed_dim, &mut init_rng),
    };
    let mut dims = ModelDims::new(vocab.len(), cfg.embed_dim, cfg.cell_size, labels.len());
    dims.trunk_width = cfg.trunk_width;
    let mut params = ModelParams::with_embedding(embedding, dims, &mut init_rng);

    create_dir(&args.out)?;
    let mut manifest = RunManifest {
        command: "pretrain".into(),
        config: cfg.clone(),
        seed: cfg.seed,
        data_dir: args.data.clone(),
        train_path: splits.train_path.clone(),
        valid_path: splits.valid_path.clone(),
        embeddings_path,
        init_checkpoint: None,
        checkpoint: args.out.join(CHECKPOINT_FILE),
        git_describe: git_describe(),
        started_unix: unix_now(),
        finished_unix: None,
        best_epoch: None,
    };
    write_manifest(&args.out, &manifest)?;

    let mut logs = Logs::default();
    let summary = pretrain(&mut params, &splits.train, &splits.valid, &cfg, &mut |l| logs.push(l))?;
    logs.save(&args.out)?;
    SavedModel { params, vocab, labels }.save(&args.out)?;
    manifest.best_epoch = Some(summary.best_epoch);
    manifest.finished_unix = Some(unix_now());
    write_manifest(&args.out, &manifest)
}

fn cmd_speedread(args: &SpeedreadArgs) -> CliResult<()> {
    let t = &args.train;
    let cfg = load_config(t)?;
    let SavedModel {
        mut params,
        vocab,
        labels,
    } = load_model(&args.checkpoint)?;
    let dims = params.dims();
    if dims.embed_dim != cfg.embed_dim || dims.hidden != cfg.cell_size || dims.trunk_width != cfg.trunk_width {
        return Err(CliError {
            code: EXIT_INPUT,
            message: format!(
                "{}: checkpoint has embed_dim {}, cell_size {}, trunk_width {}; config asks for {}, {}, {}",
                args.checkpoint.display(),
                dims.embed_dim,
                dims.hidden,
                dims.trunk_width,
                cfg.embed_dim,
                cfg.cell_size,
                cfg.trunk_width
            ),
        });
    }
    let splits = load_splits(&t.data, &vocab, &labels)?;

    create_dir(&t.out)?;
    let mut manifest = RunManifest {
        command: "speedread".into(),
        config: cfg.clone(),
        seed: cfg.seed,
        data_dir: t.data.clone(),
        train_path: splits.train_path.clone(),
        valid_path: splits.valid_path.clone(),
        embeddings_path: None,
        init_checkpoint: Some(args.checkpoint.clone()),
        checkpoint: t.out.join(CHECKPOINT_FILE),
        git_describe: git_describe(),
        started_unix: unix_now(),
        finished_unix: None,
        best_epoch: None,
    };
    write_manifest(&t.out, &manifest)?;

    let mut logs = Logs::default();
    let summary = speedread_train(&mut params, &splits.train, &splits.valid, &cfg, &mut |l| logs.push(l))?;
    logs.save(&t.out)?;
    SavedModel { params, vocab, labels }.save(&t.out)?;
    manifest.best_epoch = Some(summary.best_epoch);
    manifest.finished_unix = Some(unix_now());
    write_manifest(&t.out, &manifest)
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn std::io::Write) -> CliResult<()> {
    let SavedModel { params, vocab, labels } = load_model(&args.checkpoint)?;
    require_file(&args.data)?;
    let docs = load_dataset(&args.data, DataFormat::from_path(&args.data), &vocab, &labels).map_err(in_file(&args.data))?;
    if docs.is_empty() {
        return Err(CliError {
            code: EXIT_INPUT,
            message: format!("{}: no examples", args.data.display()),
        });
    }
    let mode = match args.mode {
        ModeArg::Greedy => ActionMode::Greedy,
        ModeArg::Sample => ActionMode::Sample,
    };
    let evaluation = evaluate(&params, &docs, mode, args.force_read, args.seed)?;
    let name = args.name.clone().unwrap_or_else(|| {
        args.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "data".into())
    });
    if let Some(path) = &args.predictions {
        let mut text = String::new();
        for (i, ex) in evaluation.examples.iter().enumerate() {
            let gold = labels.name(ex.label).unwrap_or("?");
            let pred = labels.name(ex.prediction).unwrap_or("?");
            let _ = writeln!(text, "{i}\t{gold}\t{pred}");
        }
        write_text(path, &text)?;
    }
    writeln!(out, "{}", evaluation.report(&name).row()).map_err(|e| CliError {
        code: EXIT_INTERNAL,
        message: format!("writing report: {e}"),
    })
}

fn cmd_trace(args: &TraceArgs, out: &mut dyn std::io::Write) -> CliResult<()> {
    let SavedModel { params, vocab, .. } = load_model(&args.checkpoint)?;
    let text = fs::read_to_string(&args.input).map_err(|e| Error::io(&args.input, e))?;
    let mut rendered = String::new();
    for line in text.lines() {
        match Document::from_text(line, &vocab, 0) {
            Ok(doc) => {
                rendered.push_str(&trace(&params, &doc, args.force_read)?);
            }
            // blank lines stay blank
            Err(Error::EmptyDocument) => {}
            Err(e) => return Err(e.into()),
        }
        rendered.push('\n');
    }
    out.write_all(rendered.as_bytes()).map_err(|e| CliError {
        code: EXIT_INTERNAL,
        message: format!("writing trace: {e}"),
    })
}

/// Runs the CLI on `args` (program name first), writing results to `out`
/// and diagnostics to stderr. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Cmd::Pretrain(a) => cmd_pretrain(a),
        Cmd::Speedread(a) => cmd_speedread(a),
        Cmd::Eval(a) => cmd_eval(a, out),
        Cmd::Trace(a) => cmd_trace(a, out),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let code = run(std::env::args_os(), &mut lock);
    let _ = lock.flush();
    code
}

