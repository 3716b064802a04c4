//! The training loop, dev-set model selection, and grid search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamState};
use super::backward::{backward, Example};
use super::config::TrainConfig;
use super::loss::BatchLoss;
use super::schedule::lr_at_step;
use crate::corpus::{GoldRecord, Tweet};
use crate::error::{Error, Result};
use crate::metrics::{evaluate_all, EvalOptions, MetricReport, EVAL_CSV_HEADER};
use crate::model::{predict_run, Model, ModelConfig, ModelParams, Vocab};
use crate::ontology::Ontology;

pub const HISTORY_CSV_HEADER: &str = "step,L_total,L_it,L_pri,ndcg,aw_hc,aw_a,cf1_h,cf1_a,cacc,perr_h,perr_a,harm";

pub const DEFAULT_LR_GRID: [f64; 6] = [5e-4, 2e-4, 1e-4, 5e-5, 2e-5, 1e-5];
pub const DEFAULT_BS_GRID: [usize; 4] = [8, 16, 32, 64];

/// One evaluation point. Losses are means over the training batches since the
/// previous point.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    pub step: usize,
    pub epoch: usize,
    pub loss: BatchLoss,
    /// Dev metrics; absent when training without a dev set.
    pub metrics: Option<MetricReport>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub entries: Vec<HistoryEntry>,
    /// Mean batch loss of each epoch.
    pub epoch_losses: Vec<BatchLoss>,
    /// Index into `entries` of the selected checkpoint.
    pub best: Option<usize>,
    pub total_steps: usize,
}

impl TrainHistory {
    pub fn best_entry(&self) -> Option<&HistoryEntry> {
        self.best.map(|i| &self.entries[i])
    }

    /// CSV with one row per evaluation point; metric cells are empty without a dev set.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTORY_CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}", e.step, e.loss.total, e.loss.info, e.loss.priority));
            match &e.metrics {
                Some(m) => {
                    for v in m.csv_values() {
                        out.push_str(&format!(",{v}"));
                    }
                }
                None => out.push_str(&",".repeat(EVAL_CSV_HEADER.split(',').count())),
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: TrainHistory,
}

fn examples(records: &[GoldRecord], vocab: &Vocab, ontology: &Ontology, max_len: usize) -> Result<Vec<Example>> {
    records
        .iter()
        .map(|r| {
            let mut gold_types = vec![false; ontology.len()];
            for name in &r.info_types {
                let i = ontology
                    .index_of(name)
                    .ok_or_else(|| Error::Validation(format!("tweet {}: unknown information type {name:?}", r.tweet_id)))?;
                gold_types[i] = true;
            }
            Ok(Example {
                encoding: vocab.encode(&r.text, max_len),
                gold_types,
                gold_priority: r.priority,
            })
        })
        .collect()
}

fn mean_loss(sum: &BatchLoss, n: usize) -> BatchLoss {
    let n = n.max(1) as f64;
    BatchLoss {
        total: sum.total / n,
        info: sum.info / n,
        priority: sum.priority / n,
    }
}

fn add_loss(acc: &mut BatchLoss, l: &BatchLoss) {
    acc.total += l.total;
    acc.info += l.info;
    acc.priority += l.priority;
}

/// Number of optimizer updates for a corpus of `n` examples.
pub fn total_steps(n: usize, batch_size: usize, epochs: usize) -> usize {
    epochs * n.div_ceil(batch_size)
}

/// Trains from scratch. The vocabulary is built from the training texts with
/// `model_config.vocab_size` as its limit and `n_types` follows the ontology.
/// With a dev set the checkpoint with the highest dev HarM is returned (the
/// earlier one on ties); without one the final parameters are returned.
pub fn train(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    train_set: &[GoldRecord],
    dev_set: &[GoldRecord],
    ontology: &Ontology,
) -> Result<TrainOutcome> {
    train_config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Validation("training set is empty".into()));
    }
    let mut config = *model_config;
    config.n_types = ontology.len();
    config.validate()?;
    let vocab = Vocab::build(train_set.iter().map(|r| r.text.as_str()), config.vocab_size)?;
    config.vocab_size = vocab.len();

    let data = examples(train_set, &vocab, ontology, config.max_len)?;
    let dev_tweets: Vec<Tweet> = dev_set.iter().map(Tweet::from).collect();
    let mut params = ModelParams::init(&config, train_config.seed)?;
    let mut state = AdamState::new(&params);

    let tc = train_config;
    let total = total_steps(data.len(), tc.batch_size, tc.epochs);
    log::info!(
        "training {} parameters on {} examples for {} steps",
        params.num_parameters(),
        data.len(),
        total
    );

    let mut history = TrainHistory {
        total_steps: total,
        ..TrainHistory::default()
    };
    let mut best: Option<(f64, ModelParams)> = None;
    let mut since_eval = BatchLoss::default();
    let mut batches_since_eval = 0;
    let mut step = 0;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(tc.batch_size);

    for epoch in 0..tc.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
        rng.set_stream(epoch as u64 + 1);
        order.sort_unstable();
        order.shuffle(&mut rng);

        let mut epoch_sum = BatchLoss::default();
        let mut epoch_batches = 0;
        for chunk in order.chunks(tc.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let (loss, grads) = backward(&params, config.n_heads, &batch, tc.lambda)?;
            if !loss.total.is_finite() {
                return Err(Error::NonFinite {
                    step,
                    what: format!("loss {}", loss.total),
                });
            }
            if let Some(name) = grads.first_non_finite() {
                return Err(Error::NonFinite {
                    step,
                    what: format!("gradient of {name}"),
                });
            }
            let lr = lr_at_step(step, total, tc.lr, tc.warmup_ratio);
            adam_step(&mut params, &grads, &mut state, lr, &tc.adam);
            step += 1;

            add_loss(&mut epoch_sum, &loss);
            add_loss(&mut since_eval, &loss);
            epoch_batches += 1;
            batches_since_eval += 1;

            if step % tc.eval_every_steps == 0 || step == total {
                let metrics = if dev_set.is_empty() {
                    None
                } else {
                    let run = predict_run(&params, config.n_heads, &vocab, ontology, config.max_len, &dev_tweets)?;
                    Some(evaluate_all(&run, dev_set, ontology, &EvalOptions::default())?)
                };
                let entry = HistoryEntry {
                    step,
                    epoch: epoch + 1,
                    loss: mean_loss(&since_eval, batches_since_eval),
                    metrics,
                };
                log::info!(
                    "step {step}/{total} loss {:.6} dev harm {}",
                    entry.loss.total,
                    metrics.map_or("-".to_string(), |m| format!("{:.4}", m.harm))
                );
                if let Some(m) = metrics {
                    if best.as_ref().is_none_or(|(h, _)| m.harm > *h) {
                        best = Some((m.harm, params.clone()));
                        history.best = Some(history.entries.len());
                    }
                }
                history.entries.push(entry);
                since_eval = BatchLoss::default();
                batches_since_eval = 0;
            }
        }
        history.epoch_losses.push(mean_loss(&epoch_sum, epoch_batches));
    }

    let params = match best {
        Some((_, p)) => p,
        None => {
            history.best = history.entries.len().checked_sub(1);
            params
        }
    };
    let model = Model::new(config, params, vocab, ontology.clone())?;
    Ok(TrainOutcome { model, history })
}

/// One grid-search cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridResult {
    pub lr: f64,
    pub batch_size: usize,
    pub dev_harm: f64,
    pub best_step: usize,
}

/// Trains once per (lr, batch size) cell and sorts the cells by dev HarM,
/// best first; equal scores keep grid order.
pub fn grid_search(
    model_config: &ModelConfig,
    train_config: &TrainConfig,
    train_set: &[GoldRecord],
    dev_set: &[GoldRecord],
    ontology: &Ontology,
    lr_grid: &[f64],
    bs_grid: &[usize],
) -> Result<Vec<GridResult>> {
    if lr_grid.is_empty() || bs_grid.is_empty() {
        return Err(Error::Validation("grid search needs non-empty lr and batch size grids".into()));
    }
    if dev_set.is_empty() {
        return Err(Error::Validation("grid search needs a non-empty dev set".into()));
    }
    let mut results = Vec::with_capacity(lr_grid.len() * bs_grid.len());
    for &lr in lr_grid {
        for &batch_size in bs_grid {
            let tc = TrainConfig {
                lr,
                batch_size,
                ..*train_config
            };
            let out = train(model_config, &tc, train_set, dev_set, ontology)?;
            let best = out.history.best_entry().expect("dev set yields an evaluated checkpoint");
            let dev_harm = best.metrics.map_or(0.0, |m| m.harm);
            log::info!("grid lr {lr} bs {batch_size}: dev harm {dev_harm:.4}");
            results.push(GridResult {
                lr,
                batch_size,
                dev_harm,
                best_step: best.step,
            });
        }
    }
    results.sort_by(|a, b| b.dev_harm.total_cmp(&a.dev_harm));
    Ok(results)
}

/// Renders grid results as CSV.
pub fn grid_csv(results: &[GridResult]) -> String {
    let mut out = String::from("lr,batch_size,dev_harm,best_step\n");
    for r in results {
        out.push_str(&format!("{},{},{},{}\n", r.lr, r.batch_size, r.dev_harm, r.best_step));
    }
    out
}
