//! Exact reverse-mode gradients of the batch-mean joint loss.

use super::loss::{clamp_prob, info_type_loss, priority_loss, total_loss, BatchLoss};
use crate::error::{Error, Result};
use crate::model::encoder::{gelu_grad, layer_norm_backward, LayerCache};
use crate::model::params::LayerParams;
use crate::model::{forward, Encoding, Matrix, ModelParams};
use crate::ontology::{priority_to_score, PriorityLevel};

/// One tokenized training example.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub encoding: Encoding,
    /// Gold membership per ontology index.
    pub gold_types: Vec<bool>,
    pub gold_priority: PriorityLevel,
}

/// Multipliers of the two task losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub info: f64,
    pub priority: f64,
}

impl LossWeights {
    pub fn from_lambda(lambda: f64) -> Self {
        LossWeights {
            info: lambda,
            priority: 1.0 - lambda,
        }
    }

    pub fn info_only() -> Self {
        LossWeights {
            info: 1.0,
            priority: 0.0,
        }
    }

    pub fn priority_only() -> Self {
        LossWeights {
            info: 0.0,
            priority: 1.0,
        }
    }
}

/// Batch-mean losses without gradients.
pub fn batch_loss(params: &ModelParams, n_heads: usize, batch: &[Example], lambda: f64) -> Result<BatchLoss> {
    let mut acc = BatchLoss::default();
    for ex in batch {
        let out = forward(params, n_heads, &ex.encoding.ids, &ex.encoding.mask)?;
        let li = info_type_loss(&out.type_probs, &ex.gold_types);
        let lp = priority_loss(out.priority_score, ex.gold_priority);
        acc.info += li;
        acc.priority += lp;
    }
    let n = batch.len() as f64;
    acc.info /= n;
    acc.priority /= n;
    acc.total = total_loss(lambda, acc.info, acc.priority);
    Ok(acc)
}

/// Loss and gradient of `lambda * L_it + (1 - lambda) * L_pri`, averaged over the batch.
pub fn backward(params: &ModelParams, n_heads: usize, batch: &[Example], lambda: f64) -> Result<(BatchLoss, ModelParams)> {
    let (mut loss, grads) = backward_weighted(params, n_heads, batch, LossWeights::from_lambda(lambda))?;
    loss.total = total_loss(lambda, loss.info, loss.priority);
    Ok((loss, grads))
}

/// Gradient of `w.info * L_it + w.priority * L_pri`. A head whose weight is
/// exactly zero contributes nothing, so its projection gradient is exactly zero.
pub fn backward_weighted(
    params: &ModelParams,
    n_heads: usize,
    batch: &[Example],
    weights: LossWeights,
) -> Result<(BatchLoss, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::Internal("empty batch".into()));
    }
    let d = params.w_type.rows();
    let n_types = params.w_type.cols();
    let inv_n = 1.0 / batch.len() as f64;
    let mut grads = zeros_like(params);
    let mut loss = BatchLoss::default();

    for ex in batch {
        let out = forward(params, n_heads, &ex.encoding.ids, &ex.encoding.mask)?;
        loss.info += info_type_loss(&out.type_probs, &ex.gold_types);
        loss.priority += priority_loss(out.priority_score, ex.gold_priority);

        let cls = out.token_outputs.row(0).to_vec();
        let mut d_cls = vec![0.0; d];

        if weights.info != 0.0 {
            let dlogits: Vec<f64> = out
                .type_probs
                .iter()
                .zip(&ex.gold_types)
                .map(|(&p, &b)| {
                    if clamp_prob(p) != p {
                        0.0
                    } else {
                        weights.info * (p - if b { 1.0 } else { 0.0 }) * inv_n
                    }
                })
                .collect();
            for r in 0..d {
                let wrow = params.w_type.row(r);
                let grow = grads.w_type.row_mut(r);
                let mut acc = 0.0;
                for j in 0..n_types {
                    grow[j] += cls[r] * dlogits[j];
                    acc += wrow[j] * dlogits[j];
                }
                d_cls[r] += acc;
            }
        }

        if weights.priority != 0.0 {
            let s = out.priority_score;
            let target = priority_to_score(ex.gold_priority);
            let dg = weights.priority * (-2.0 * (target - s)) * s * (1.0 - s) * inv_n;
            for r in 0..d {
                grads.w_priority[(r, 0)] += cls[r] * dg;
                d_cls[r] += params.w_priority[(r, 0)] * dg;
            }
        }

        let seq = ex.encoding.ids.len();
        let mut dx = Matrix::zeros(seq, d);
        dx.row_mut(0).copy_from_slice(&d_cls);
        for (li, lc) in out.cache.layers.iter().enumerate().rev() {
            dx = layer_backward(&params.layers[li], lc, &dx, &mut grads.layers[li], n_heads);
        }
        for (t, &id) in out.cache.ids.iter().enumerate() {
            let g = dx.row(t);
            for (a, &b) in grads.token_embedding.row_mut(id).iter_mut().zip(g) {
                *a += b;
            }
            for (a, &b) in grads.position_embedding.row_mut(t).iter_mut().zip(g) {
                *a += b;
            }
        }
    }
    loss.info *= inv_n;
    loss.priority *= inv_n;
    loss.total = weights.info * loss.info + weights.priority * loss.priority;
    Ok((loss, grads))
}

fn zeros_like(params: &ModelParams) -> ModelParams {
    let mut z = params.clone();
    for m in z.tensors_mut() {
        m.data_mut().fill(0.0);
    }
    z
}

fn layer_backward(p: &LayerParams, c: &LayerCache, dout: &Matrix, g: &mut LayerParams, n_heads: usize) -> Matrix {
    // out = LN2(y1 + ffn(y1))
    let dz2 = layer_norm_backward(dout, &c.norm2, &p.ln2_gamma, &mut g.ln2_gamma, &mut g.ln2_beta);
    c.ffn_act.t_matmul_acc(&dz2, &mut g.w2);
    dz2.col_sum_acc(&mut g.b2);
    let mut dpre = dz2.matmul_t(&p.w2);
    for (d, &x) in dpre.data_mut().iter_mut().zip(c.ffn_pre.data()) {
        *d *= gelu_grad(x);
    }
    c.y1.t_matmul_acc(&dpre, &mut g.w1);
    dpre.col_sum_acc(&mut g.b1);
    let mut dy1 = dpre.matmul_t(&p.w1);
    dy1.add_assign(&dz2);

    // y1 = LN1(x + attn(x))
    let dz1 = layer_norm_backward(&dy1, &c.norm1, &p.ln1_gamma, &mut g.ln1_gamma, &mut g.ln1_beta);
    c.context.t_matmul_acc(&dz1, &mut g.wo);
    dz1.col_sum_acc(&mut g.bo);
    let dctx = dz1.matmul_t(&p.wo);

    let (seq, d) = c.input.shape();
    let dk = d / n_heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut dq = Matrix::zeros(seq, d);
    let mut dkm = Matrix::zeros(seq, d);
    let mut dv = Matrix::zeros(seq, d);
    let mut ds = vec![0.0; seq];
    for (h, probs) in c.probs.iter().enumerate() {
        let off = h * dk;
        for i in 0..seq {
            let dci = &dctx.row(i)[off..off + dk];
            let a = probs.row(i);
            let mut weighted = 0.0;
            for j in 0..seq {
                if a[j] == 0.0 {
                    ds[j] = 0.0;
                    continue;
                }
                let da: f64 = dci.iter().zip(&c.v.row(j)[off..off + dk]).map(|(x, y)| x * y).sum();
                ds[j] = da;
                weighted += a[j] * da;
                for (x, &y) in dv.row_mut(j)[off..off + dk].iter_mut().zip(dci) {
                    *x += a[j] * y;
                }
            }
            for j in 0..seq {
                if a[j] == 0.0 {
                    continue;
                }
                let dsij = a[j] * (ds[j] - weighted) * scale;
                for t in 0..dk {
                    dq[(i, off + t)] += dsij * c.k[(j, off + t)];
                    dkm[(j, off + t)] += dsij * c.q[(i, off + t)];
                }
            }
        }
    }
    c.input.t_matmul_acc(&dq, &mut g.wq);
    dq.col_sum_acc(&mut g.bq);
    c.input.t_matmul_acc(&dkm, &mut g.wk);
    dkm.col_sum_acc(&mut g.bk);
    c.input.t_matmul_acc(&dv, &mut g.wv);
    dv.col_sum_acc(&mut g.bv);

    let mut dx = dz1;
    dx.add_assign(&dq.matmul_t(&p.wq));
    dx.add_assign(&dkm.matmul_t(&p.wk));
    dx.add_assign(&dv.matmul_t(&p.wv));
    dx
}
