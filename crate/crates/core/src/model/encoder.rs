//! Post-norm transformer encoder and the two projection heads.
//!
//! Each layer computes
//!
//! ```text
//! y = LayerNorm(x + MultiHeadAttention(x))
//! out = LayerNorm(y + W2·gelu(W1·y + b1) + b2)
//! ```
//!
//! Attention scores towards padded keys are set to −∞ before the softmax, so
//! padded positions receive exactly zero weight. Every intermediate needed by
//! the backward pass is kept in the returned caches.

use super::params::{LayerParams, ModelParams};
use super::tensor::Matrix;
use crate::error::{Error, Result};

pub const LAYER_NORM_EPS: f64 = 1e-12;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_K: f64 = 0.044_715;

/// Tanh approximation of GELU.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_K * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_K * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct LayerNormCache {
    pub xhat: Matrix,
    pub inv_std: Vec<f64>,
}

fn layer_norm(x: &Matrix, gamma: &Matrix, beta: &Matrix) -> (Matrix, LayerNormCache) {
    let (rows, cols) = x.shape();
    let mut xhat = Matrix::zeros(rows, cols);
    let mut out = Matrix::zeros(rows, cols);
    let mut inv_std = Vec::with_capacity(rows);
    for r in 0..rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / cols as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / cols as f64;
        let is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
        inv_std.push(is);
        for c in 0..cols {
            let h = (row[c] - mean) * is;
            xhat[(r, c)] = h;
            out[(r, c)] = gamma.data()[c] * h + beta.data()[c];
        }
    }
    (out, LayerNormCache { xhat, inv_std })
}

/// Backward of layer norm: accumulates gamma/beta grads, returns grad w.r.t. the input.
pub(crate) fn layer_norm_backward(
    dout: &Matrix,
    cache: &LayerNormCache,
    gamma: &Matrix,
    dgamma: &mut Matrix,
    dbeta: &mut Matrix,
) -> Matrix {
    let (rows, cols) = dout.shape();
    let n = cols as f64;
    let mut dx = Matrix::zeros(rows, cols);
    for r in 0..rows {
        let g = dout.row(r);
        let xh = cache.xhat.row(r);
        let mut sum_d = 0.0;
        let mut sum_dx = 0.0;
        let mut dxhat = vec![0.0; cols];
        for c in 0..cols {
            dgamma.data_mut()[c] += g[c] * xh[c];
            dbeta.data_mut()[c] += g[c];
            dxhat[c] = g[c] * gamma.data()[c];
            sum_d += dxhat[c];
            sum_dx += dxhat[c] * xh[c];
        }
        let is = cache.inv_std[r];
        for c in 0..cols {
            dx[(r, c)] = is * (dxhat[c] - sum_d / n - xh[c] * sum_dx / n);
        }
    }
    dx
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    pub input: Matrix,
    pub q: Matrix,
    pub k: Matrix,
    pub v: Matrix,
    /// Attention weights per head, `seq x seq`.
    pub probs: Vec<Matrix>,
    pub context: Matrix,
    pub norm1: LayerNormCache,
    pub y1: Matrix,
    pub ffn_pre: Matrix,
    pub ffn_act: Matrix,
    pub norm2: LayerNormCache,
}

/// Intermediates of one encoder pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    pub(crate) ids: Vec<usize>,
    pub(crate) layers: Vec<LayerCache>,
}

impl EncoderCache {
    /// Attention weights of `head` in `layer`, rows are queries.
    pub fn attention(&self, layer: usize, head: usize) -> &Matrix {
        &self.layers[layer].probs[head]
    }
}

#[derive(Debug, Clone)]
pub struct EncoderOutput {
    /// `seq x d_model`; row 0 is the `[CLS]` vector.
    pub token_outputs: Matrix,
    pub cache: EncoderCache,
}

/// Outputs of the two heads on the `[CLS]` vector.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    pub type_logits: Vec<f64>,
    pub type_probs: Vec<f64>,
    pub priority_logit: f64,
    pub priority_score: f64,
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub token_outputs: Matrix,
    pub type_probs: Vec<f64>,
    pub priority_score: f64,
    pub heads: HeadOutput,
    pub(crate) cache: EncoderCache,
}

impl ForwardOutput {
    pub fn cls(&self) -> &[f64] {
        self.token_outputs.row(0)
    }

    pub fn cache(&self) -> &EncoderCache {
        &self.cache
    }
}

fn attention_layer(layer: &LayerParams, x: &Matrix, mask: &[bool], n_heads: usize) -> (Matrix, Matrix, Matrix, Vec<Matrix>, Matrix) {
    let (seq, d) = x.shape();
    let dk = d / n_heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut q = x.matmul(&layer.wq);
    q.add_row_broadcast(&layer.bq);
    let mut k = x.matmul(&layer.wk);
    k.add_row_broadcast(&layer.bk);
    let mut v = x.matmul(&layer.wv);
    v.add_row_broadcast(&layer.bv);

    let mut context = Matrix::zeros(seq, d);
    let mut probs = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let off = h * dk;
        let mut p = Matrix::zeros(seq, seq);
        for i in 0..seq {
            let qi = &q.row(i)[off..off + dk];
            let mut max = f64::NEG_INFINITY;
            let row = p.row_mut(i);
            for j in 0..seq {
                row[j] = if mask[j] {
                    let kj = &k.row(j)[off..off + dk];
                    let s = super::tensor::dot(qi, kj) * scale;
                    max = max.max(s);
                    s
                } else {
                    f64::NEG_INFINITY
                };
            }
            let mut total = 0.0;
            for x in row.iter_mut() {
                *x = (*x - max).exp();
                total += *x;
            }
            for x in row.iter_mut() {
                *x /= total;
            }
        }
        for i in 0..seq {
            for j in 0..seq {
                let w = p[(i, j)];
                if w == 0.0 {
                    continue;
                }
                let vj = &v.row(j)[off..off + dk];
                let ci = &mut context.row_mut(i)[off..off + dk];
                for (c, &vv) in ci.iter_mut().zip(vj) {
                    *c += w * vv;
                }
            }
        }
        probs.push(p);
    }
    (q, k, v, probs, context)
}

/// Runs the encoder over one padded sequence.
pub fn encoder_forward(params: &ModelParams, n_heads: usize, ids: &[usize], mask: &[bool]) -> Result<EncoderOutput> {
    let (vocab, d) = params.token_embedding.shape();
    let max_len = params.position_embedding.rows();
    if ids.len() != mask.len() || ids.len() > max_len || ids.is_empty() {
        return Err(Error::Internal(format!(
            "sequence length {} / mask length {} incompatible with max_len {max_len}",
            ids.len(),
            mask.len()
        )));
    }
    if !mask[0] {
        return Err(Error::Internal("first position must be unmasked".into()));
    }
    if let Some(&bad) = ids.iter().find(|&&i| i >= vocab) {
        return Err(Error::Internal(format!("token index {bad} outside vocabulary of {vocab}")));
    }
    let seq = ids.len();
    let mut x = Matrix::zeros(seq, d);
    for (t, &id) in ids.iter().enumerate() {
        let pos = params.position_embedding.row(t);
        let tok = params.token_embedding.row(id);
        for (o, (&a, &b)) in x.row_mut(t).iter_mut().zip(pos.iter().zip(tok)) {
            *o = a + b;
        }
    }

    let mut caches = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let (q, k, v, probs, context) = attention_layer(layer, &x, mask, n_heads);
        let mut z1 = context.matmul(&layer.wo);
        z1.add_row_broadcast(&layer.bo);
        z1.add_assign(&x);
        let (y1, norm1) = layer_norm(&z1, &layer.ln1_gamma, &layer.ln1_beta);

        let mut ffn_pre = y1.matmul(&layer.w1);
        ffn_pre.add_row_broadcast(&layer.b1);
        let mut ffn_act = ffn_pre.clone();
        for a in ffn_act.data_mut() {
            *a = gelu(*a);
        }
        let mut z2 = ffn_act.matmul(&layer.w2);
        z2.add_row_broadcast(&layer.b2);
        z2.add_assign(&y1);
        let (out, norm2) = layer_norm(&z2, &layer.ln2_gamma, &layer.ln2_beta);

        caches.push(LayerCache {
            input: x,
            q,
            k,
            v,
            probs,
            context,
            norm1,
            y1,
            ffn_pre,
            ffn_act,
            norm2,
        });
        x = out;
    }
    Ok(EncoderOutput {
        token_outputs: x,
        cache: EncoderCache {
            ids: ids.to_vec(),
            layers: caches,
        },
    })
}

/// Type probabilities `σ(o_cls · W_t)` and priority score `σ(o_cls · W_p)`.
pub fn mtl_forward(params: &ModelParams, token_outputs: &Matrix) -> HeadOutput {
    let cls = Matrix::from_vec(1, token_outputs.cols(), token_outputs.row(0).to_vec());
    let type_logits = cls.matmul(&params.w_type).data().to_vec();
    let type_probs = type_logits.iter().map(|&a| sigmoid(a)).collect();
    let priority_logit = cls.matmul(&params.w_priority).data()[0];
    HeadOutput {
        type_logits,
        type_probs,
        priority_logit,
        priority_score: sigmoid(priority_logit),
    }
}

pub fn forward(params: &ModelParams, n_heads: usize, ids: &[usize], mask: &[bool]) -> Result<ForwardOutput> {
    let enc = encoder_forward(params, n_heads, ids, mask)?;
    let heads = mtl_forward(params, &enc.token_outputs);
    Ok(ForwardOutput {
        type_probs: heads.type_probs.clone(),
        priority_score: heads.priority_score,
        token_outputs: enc.token_outputs,
        heads,
        cache: enc.cache,
    })
}
