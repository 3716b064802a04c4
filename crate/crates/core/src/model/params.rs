use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Matrix;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_LEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_len: usize,
    pub n_types: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            d_ff: 128,
            vocab_size: 8000,
            max_len: DEFAULT_MAX_LEN,
            n_types: 25,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("d_model", self.d_model),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("vocab_size", self.vocab_size),
            ("n_types", self.n_types),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Validation(format!("{name} must be at least 1")));
        }
        if self.d_model % self.n_heads != 0 {
            return Err(Error::Validation(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        if self.max_len < 3 {
            return Err(Error::Validation(format!("max_len {} < 3", self.max_len)));
        }
        if self.vocab_size < 4 {
            return Err(Error::Validation(format!(
                "vocab_size {} cannot hold the reserved tokens",
                self.vocab_size
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

/// Parameters of one post-norm encoder layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub wq: Matrix,
    pub bq: Matrix,
    pub wk: Matrix,
    pub bk: Matrix,
    pub wv: Matrix,
    pub bv: Matrix,
    pub wo: Matrix,
    pub bo: Matrix,
    pub ln1_gamma: Matrix,
    pub ln1_beta: Matrix,
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub ln2_gamma: Matrix,
    pub ln2_beta: Matrix,
}

pub const LAYER_TENSOR_NAMES: [&str; 16] = [
    "attention.query.weight",
    "attention.query.bias",
    "attention.key.weight",
    "attention.key.bias",
    "attention.value.weight",
    "attention.value.bias",
    "attention.output.weight",
    "attention.output.bias",
    "attention.norm.gamma",
    "attention.norm.beta",
    "ffn.inner.weight",
    "ffn.inner.bias",
    "ffn.outer.weight",
    "ffn.outer.bias",
    "ffn.norm.gamma",
    "ffn.norm.beta",
];

impl LayerParams {
    fn zeros(d: usize, ff: usize) -> Self {
        LayerParams {
            wq: Matrix::zeros(d, d),
            bq: Matrix::zeros(1, d),
            wk: Matrix::zeros(d, d),
            bk: Matrix::zeros(1, d),
            wv: Matrix::zeros(d, d),
            bv: Matrix::zeros(1, d),
            wo: Matrix::zeros(d, d),
            bo: Matrix::zeros(1, d),
            ln1_gamma: Matrix::zeros(1, d),
            ln1_beta: Matrix::zeros(1, d),
            w1: Matrix::zeros(d, ff),
            b1: Matrix::zeros(1, ff),
            w2: Matrix::zeros(ff, d),
            b2: Matrix::zeros(1, d),
            ln2_gamma: Matrix::zeros(1, d),
            ln2_beta: Matrix::zeros(1, d),
        }
    }

    pub fn tensors(&self) -> [&Matrix; 16] {
        [
            &self.wq,
            &self.bq,
            &self.wk,
            &self.bk,
            &self.wv,
            &self.bv,
            &self.wo,
            &self.bo,
            &self.ln1_gamma,
            &self.ln1_beta,
            &self.w1,
            &self.b1,
            &self.w2,
            &self.b2,
            &self.ln2_gamma,
            &self.ln2_beta,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 16] {
        [
            &mut self.wq,
            &mut self.bq,
            &mut self.wk,
            &mut self.bk,
            &mut self.wv,
            &mut self.bv,
            &mut self.wo,
            &mut self.bo,
            &mut self.ln1_gamma,
            &mut self.ln1_beta,
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.ln2_gamma,
            &mut self.ln2_beta,
        ]
    }
}

/// All trainable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub token_embedding: Matrix,
    pub position_embedding: Matrix,
    pub layers: Vec<LayerParams>,
    /// `d_model x n_types`
    pub w_type: Matrix,
    /// `d_model x 1`
    pub w_priority: Matrix,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.d_model;
        ModelParams {
            token_embedding: Matrix::zeros(config.vocab_size, d),
            position_embedding: Matrix::zeros(config.max_len, d),
            layers: (0..config.n_layers)
                .map(|_| LayerParams::zeros(d, config.d_ff))
                .collect(),
            w_type: Matrix::zeros(d, config.n_types),
            w_priority: Matrix::zeros(d, 1),
        }
    }

    /// Glorot-uniform weights and embeddings, zero biases, unit layer-norm scales.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ModelParams::zeros(config);
        let mut glorot = |m: &mut Matrix| {
            let bound = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
            for x in m.data_mut() {
                *x = rng.random_range(-bound..=bound);
            }
        };
        glorot(&mut p.token_embedding);
        glorot(&mut p.position_embedding);
        for layer in &mut p.layers {
            for m in [
                &mut layer.wq,
                &mut layer.wk,
                &mut layer.wv,
                &mut layer.wo,
                &mut layer.w1,
                &mut layer.w2,
            ] {
                glorot(m);
            }
            layer.ln1_gamma.data_mut().fill(1.0);
            layer.ln2_gamma.data_mut().fill(1.0);
        }
        glorot(&mut p.w_type);
        glorot(&mut p.w_priority);
        Ok(p)
    }

    pub fn config_shape_matches(&self, config: &ModelConfig) -> bool {
        let z = ModelParams::zeros(config);
        z.tensors()
            .iter()
            .zip(self.tensors())
            .all(|((_, a), (_, b))| a.shape() == b.shape())
            && z.layers.len() == self.layers.len()
    }

    /// Every tensor with its stable name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![
            ("embeddings.token".to_string(), &self.token_embedding),
            ("embeddings.position".to_string(), &self.position_embedding),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            for (name, m) in LAYER_TENSOR_NAMES.iter().zip(layer.tensors()) {
                out.push((format!("layers.{i}.{name}"), m));
            }
        }
        out.push(("heads.type.weight".to_string(), &self.w_type));
        out.push(("heads.priority.weight".to_string(), &self.w_priority));
        out
    }

    /// Same order as [`ModelParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out = vec![&mut self.token_embedding, &mut self.position_embedding];
        for layer in &mut self.layers {
            out.extend(layer.tensors_mut());
        }
        out.push(&mut self.w_type);
        out.push(&mut self.w_priority);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.data().len()).sum()
    }

    /// Name of the first tensor containing a NaN or infinity.
    pub fn first_non_finite(&self) -> Option<String> {
        self.tensors()
            .into_iter()
            .find(|(_, m)| !m.is_finite())
            .map(|(n, _)| n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig {
            d_model: 8,
            n_layers: 2,
            n_heads: 2,
            d_ff: 16,
            vocab_size: 20,
            max_len: 6,
            n_types: 5,
        }
    }

    #[test]
    fn init_is_deterministic() {
        let a = ModelParams::init(&tiny(), 3).unwrap();
        let b = ModelParams::init(&tiny(), 3).unwrap();
        for ((_, x), (_, y)) in a.tensors().iter().zip(b.tensors()) {
            let xb: Vec<u64> = x.data().iter().map(|v| v.to_bits()).collect();
            let yb: Vec<u64> = y.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(xb, yb);
        }
        assert_ne!(a, ModelParams::init(&tiny(), 4).unwrap());
    }

    #[test]
    fn init_declared_values() {
        let p = ModelParams::init(&tiny(), 1).unwrap();
        for l in &p.layers {
            assert!(l.ln1_gamma.data().iter().all(|&g| g == 1.0));
            assert!(l.ln2_gamma.data().iter().all(|&g| g == 1.0));
            assert!(l.ln1_beta.data().iter().all(|&b| b == 0.0));
            assert!(l.bq.data().iter().all(|&b| b == 0.0));
        }
        for (name, m) in p.tensors() {
            let bound = (6.0 / (m.rows() + m.cols()) as f64).sqrt();
            let is_gamma = name.ends_with("gamma");
            for &x in m.data() {
                assert!(x.is_finite());
                if !is_gamma {
                    assert!(x.abs() <= bound, "{name}");
                    assert!(x.abs() <= 1.0, "{name}");
                }
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut c = tiny();
        c.n_heads = 3;
        assert!(c.validate().is_err());
        let mut c = tiny();
        c.max_len = 2;
        assert!(c.validate().is_err());
        let mut c = tiny();
        c.n_types = 0;
        assert!(c.validate().is_err());
        assert!(tiny().validate().is_ok());
    }

    #[test]
    fn tensor_listing_is_consistent() {
        let mut p = ModelParams::init(&tiny(), 1).unwrap();
        let n = p.tensors().len();
        assert_eq!(n, 2 + 16 * 2 + 2);
        assert_eq!(p.tensors_mut().len(), n);
        assert!(p.config_shape_matches(&tiny()));
        let mut other = tiny();
        other.n_types = 4;
        assert!(!p.config_shape_matches(&other));
    }
}
