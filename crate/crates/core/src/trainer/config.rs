use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::agents::ActionMode;
use crate::error::{Error, Result};

/// Distribution the entropy term pulls each policy toward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyTarget {
    Uniform,
    /// 0.95 on Read / NextWord, the remainder split evenly.
    ReadBiased95,
}

impl EntropyTarget {
    pub fn distribution(self, actions: usize) -> Vec<f64> {
        match self {
            EntropyTarget::Uniform => vec![1.0 / actions as f64; actions],
            EntropyTarget::ReadBiased95 => {
                // Read is index 1 of the skip policy, NextWord index 0 of the jump policy
                let preferred = if actions == 2 { 1 } else { 0 };
                let rest = 0.05 / (actions - 1) as f64;
                (0..actions)
                    .map(|k| if k == preferred { 0.95 } else { rest })
                    .collect()
            }
        }
    }
}

/// Every training hyperparameter.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub dropout_embed: f64,
    pub dropout_output: f64,
    pub cell_size: usize,
    pub embed_dim: usize,
    pub trunk_width: usize,
    pub clip: f64,
    pub c_skip: f64,
    pub w_rolling: f64,
    pub entropy_weight: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    #[serde(serialize_with = "ser_display")]
    pub action_mode: ActionMode,
    pub entropy_target: EntropyTarget,
    pub pretrain_epochs: usize,
    pub speedread_epochs: usize,
    pub seed: u64,
}

fn ser_display<S: serde::Serializer>(m: &ActionMode, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(mode_name(*m))
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.0005,
            batch_size: 32,
            dropout_embed: 0.1,
            dropout_output: 0.1,
            cell_size: 128,
            embed_dim: 100,
            trunk_width: crate::agents::TRUNK_WIDTH,
            clip: 0.1,
            c_skip: 0.5,
            w_rolling: 0.1,
            entropy_weight: 0.1,
            alpha: 1.0,
            beta: 10.0,
            gamma: 1.0,
            action_mode: ActionMode::Greedy,
            entropy_target: EntropyTarget::Uniform,
            pretrain_epochs: 5,
            speedread_epochs: 5,
            seed: 0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "lr",
    "batch_size",
    "dropout_embed",
    "dropout_output",
    "cell_size",
    "embed_dim",
    "trunk_width",
    "clip",
    "c_skip",
    "w_rolling",
    "entropy_weight",
    "alpha",
    "beta",
    "gamma",
    "action_mode",
    "entropy_target",
    "pretrain_epochs",
    "speedread_epochs",
    "seed",
];

fn mode_name(m: ActionMode) -> &'static str {
    match m {
        ActionMode::Greedy => "greedy",
        ActionMode::Sample => "sample",
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

impl TrainConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "lr" => self.lr = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "dropout_embed" => self.dropout_embed = parse(key, v)?,
            "dropout_output" => self.dropout_output = parse(key, v)?,
            "cell_size" => self.cell_size = parse(key, v)?,
            "embed_dim" => self.embed_dim = parse(key, v)?,
            "trunk_width" => self.trunk_width = parse(key, v)?,
            "clip" => self.clip = parse(key, v)?,
            "c_skip" => self.c_skip = parse(key, v)?,
            "w_rolling" => self.w_rolling = parse(key, v)?,
            "entropy_weight" => self.entropy_weight = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "gamma" => self.gamma = parse(key, v)?,
            "action_mode" => {
                self.action_mode = match v {
                    "greedy" => ActionMode::Greedy,
                    "sample" => ActionMode::Sample,
                    _ => return Err(Error::Config(format!("action_mode: expected greedy or sample, got {v:?}"))),
                }
            }
            "entropy_target" => {
                self.entropy_target = match v {
                    "uniform" => EntropyTarget::Uniform,
                    "read_biased95" => EntropyTarget::ReadBiased95,
                    _ => {
                        return Err(Error::Config(format!(
                            "entropy_target: expected uniform or read_biased95, got {v:?}"
                        )))
                    }
                }
            }
            "pretrain_epochs" => self.pretrain_epochs = parse(key, v)?,
            "speedread_epochs" => self.speedread_epochs = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys not present keep
    /// their defaults.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {}", n + 1, e.to_string().trim_start_matches("invalid configuration: "))))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        for (name, r) in [("dropout_embed", self.dropout_embed), ("dropout_output", self.dropout_output)] {
            if !(0.0..1.0).contains(&r) {
                return bad(&format!("{name} must lie in [0, 1)"));
            }
        }
        if self.cell_size == 0 || self.embed_dim == 0 || self.trunk_width == 0 {
            return bad("dimensions must be positive");
        }
        if !(self.clip > 0.0) {
            return bad("clip must be positive");
        }
        if !(self.c_skip > 0.0 && self.c_skip <= 1.0) {
            return bad("c_skip must lie in (0, 1]");
        }
        for (name, w) in [
            ("w_rolling", self.w_rolling),
            ("entropy_weight", self.entropy_weight),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(w >= 0.0) {
                return bad(&format!("{name} must be nonnegative"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for TrainConfig {
    /// Same `key = value` format accepted by [`TrainConfig::parse_str`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lr = {}", self.lr)?;
        writeln!(f, "batch_size = {}", self.batch_size)?;
        writeln!(f, "dropout_embed = {}", self.dropout_embed)?;
        writeln!(f, "dropout_output = {}", self.dropout_output)?;
        writeln!(f, "cell_size = {}", self.cell_size)?;
        writeln!(f, "embed_dim = {}", self.embed_dim)?;
        writeln!(f, "trunk_width = {}", self.trunk_width)?;
        writeln!(f, "clip = {}", self.clip)?;
        writeln!(f, "c_skip = {}", self.c_skip)?;
        writeln!(f, "w_rolling = {}", self.w_rolling)?;
        writeln!(f, "entropy_weight = {}", self.entropy_weight)?;
        writeln!(f, "alpha = {}", self.alpha)?;
        writeln!(f, "beta = {}", self.beta)?;
        writeln!(f, "gamma = {}", self.gamma)?;
        writeln!(f, "action_mode = {}", mode_name(self.action_mode))?;
        let target = match self.entropy_target {
            EntropyTarget::Uniform => "uniform",
            EntropyTarget::ReadBiased95 => "read_biased95",
        };
        writeln!(f, "entropy_target = {target}")?;
        writeln!(f, "pretrain_epochs = {}", self.pretrain_epochs)?;
        writeln!(f, "speedread_epochs = {}", self.speedread_epochs)?;
        writeln!(f, "seed = {}", self.seed)
    }
}
