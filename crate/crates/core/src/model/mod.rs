//! Tokenization, the transformer encoder, and the two multi-task heads.

pub mod checkpoint;
pub mod encoder;
pub mod params;
pub mod tensor;
pub mod vocab;

use std::collections::BTreeSet;

pub use encoder::{encoder_forward, forward, mtl_forward, sigmoid, EncoderOutput, ForwardOutput, HeadOutput};
pub use params::{ModelConfig, ModelParams};
pub use tensor::Matrix;
pub use vocab::{Encoding, Vocab};

use crate::corpus::{RunRecord, Tweet};
use crate::error::{Error, Result};
use crate::ontology::Ontology;

/// A trained (or freshly initialised) classifier: everything needed to predict.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub vocab: Vocab,
    pub ontology: Ontology,
}

impl Model {
    pub fn new(config: ModelConfig, params: ModelParams, vocab: Vocab, ontology: Ontology) -> Result<Self> {
        config.validate()?;
        if config.vocab_size != vocab.len() {
            return Err(Error::Validation(format!(
                "config vocab_size {} but vocabulary has {} tokens",
                config.vocab_size,
                vocab.len()
            )));
        }
        if config.n_types != ontology.len() {
            return Err(Error::Validation(format!(
                "config n_types {} but ontology has {} labels",
                config.n_types,
                ontology.len()
            )));
        }
        if !params.config_shape_matches(&config) {
            return Err(Error::Validation("parameter shapes do not match the model config".into()));
        }
        Ok(Model {
            config,
            params,
            vocab,
            ontology,
        })
    }

    pub fn encode(&self, text: &str) -> Encoding {
        self.vocab.encode(text, self.config.max_len)
    }

    pub fn forward_text(&self, text: &str) -> Result<ForwardOutput> {
        let e = self.encode(text);
        forward(&self.params, self.config.n_heads, &e.ids, &e.mask)
    }

    pub fn predict_run(&self, tweets: &[Tweet]) -> Result<Vec<RunRecord>> {
        predict_run(&self.params, self.config.n_heads, &self.vocab, &self.ontology, self.config.max_len, tweets)
    }
}

/// Labels whose probability is strictly above 0.5.
pub fn assigned_types(probs: &[f64], ontology: &Ontology) -> BTreeSet<String> {
    probs
        .iter()
        .zip(ontology.types())
        .filter(|(&p, _)| p > 0.5)
        .map(|(_, t)| t.name.clone())
        .collect()
}

/// One run record per tweet, in input order.
pub fn predict_run(
    params: &ModelParams,
    n_heads: usize,
    vocab: &Vocab,
    ontology: &Ontology,
    max_len: usize,
    tweets: &[Tweet],
) -> Result<Vec<RunRecord>> {
    tweets
        .iter()
        .map(|t| {
            let e = vocab.encode(&t.text, max_len);
            let out = forward(params, n_heads, &e.ids, &e.mask)?;
            Ok(RunRecord {
                tweet_id: t.tweet_id.clone(),
                event_id: t.event_id.clone(),
                info_types: assigned_types(&out.type_probs, ontology),
                priority_score: out.priority_score,
                priority_level: None,
            })
        })
        .collect()
}
