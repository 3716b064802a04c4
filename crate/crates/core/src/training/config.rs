//! Training configuration and its flat `key = value` file format.
//!
//! Recognised keys: `lambda`, `lr`, `batch_size`, `epochs`, `warmup_ratio`,
//! `eval_every_steps`, `seed`, `d_model`, `n_layers`, `n_heads`, `d_ff`,
//! `vocab_size`, `max_len`. Lines starting with `#` and blank lines are
//! ignored. Unknown keys are rejected. `vocab_size` is the vocabulary size
//! limit; the trained model's actual vocabulary may be smaller.

use std::path::Path;

use super::adam::AdamConfig;
use crate::error::{Error, Result};
use crate::model::ModelConfig;

pub const CONFIG_KEYS: [&str; 13] = [
    "lambda",
    "lr",
    "batch_size",
    "epochs",
    "warmup_ratio",
    "eval_every_steps",
    "seed",
    "d_model",
    "n_layers",
    "n_heads",
    "d_ff",
    "vocab_size",
    "max_len",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub lambda: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_ratio: f64,
    pub eval_every_steps: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.5,
            lr: 5e-5,
            batch_size: 32,
            epochs: 12,
            warmup_ratio: 0.1,
            eval_every_steps: 400,
            seed: 42,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Validation(format!("lambda {} outside [0, 1]", self.lambda)));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Validation(format!("lr {} must be positive", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_ratio) {
            return Err(Error::Validation(format!(
                "warmup_ratio {} outside [0, 1)",
                self.warmup_ratio
            )));
        }
        if self.eval_every_steps == 0 {
            return Err(Error::Validation("eval_every_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Model shape plus training hyperparameters, as read from a config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    /// `vocab_size` is a limit and `n_types` is replaced by the ontology size at training time.
    pub model: ModelConfig,
    pub train: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Validation(format!("invalid value {value:?} for {key}")))
}

impl ExperimentConfig {
    /// Sets one key; used for file lines and command-line overrides alike.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (m, t) = (&mut self.model, &mut self.train);
        match key {
            "lambda" => t.lambda = num(key, value)?,
            "lr" => t.lr = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "epochs" => t.epochs = num(key, value)?,
            "warmup_ratio" => t.warmup_ratio = num(key, value)?,
            "eval_every_steps" => t.eval_every_steps = num(key, value)?,
            "seed" => t.seed = num(key, value)?,
            "d_model" => m.d_model = num(key, value)?,
            "n_layers" => m.n_layers = num(key, value)?,
            "n_heads" => m.n_heads = num(key, value)?,
            "d_ff" => m.d_ff = num(key, value)?,
            "vocab_size" => m.vocab_size = num(key, value)?,
            "max_len" => m.max_len = num(key, value)?,
            _ => return Err(Error::Validation(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::parse(&text, path)
    }

    /// Renders every key; `parse` reads it back unchanged.
    pub fn render(&self) -> String {
        let (m, t) = (&self.model, &self.train);
        format!(
            "lambda = {}\nlr = {:e}\nbatch_size = {}\nepochs = {}\nwarmup_ratio = {}\n\
             eval_every_steps = {}\nseed = {}\nd_model = {}\nn_layers = {}\nn_heads = {}\n\
             d_ff = {}\nvocab_size = {}\nmax_len = {}\n",
            t.lambda,
            t.lr,
            t.batch_size,
            t.epochs,
            t.warmup_ratio,
            t.eval_every_steps,
            t.seed,
            m.d_model,
            m.n_layers,
            m.n_heads,
            m.d_ff,
            m.vocab_size,
            m.max_len
        )
    }
}
