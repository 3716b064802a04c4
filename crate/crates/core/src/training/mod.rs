//! Joint loss, gradients, optimizer, schedule, and the training loop.

pub mod adam;
pub mod backward;
pub mod config;
pub mod loss;
pub mod schedule;
pub mod trainer;

pub use adam::{adam_step, adam_update, AdamConfig, AdamState};
pub use backward::{backward, backward_weighted, batch_loss, Example, LossWeights};
pub use config::{ExperimentConfig, TrainConfig, CONFIG_KEYS};
pub use loss::{info_type_loss, priority_loss, total_loss, BatchLoss, PROB_CLAMP};
pub use schedule::{lr_at_step, warmup_steps};
pub use trainer::{
    grid_csv, grid_search, total_steps, train, GridResult, HistoryEntry, TrainHistory, TrainOutcome, DEFAULT_BS_GRID,
    DEFAULT_LR_GRID, HISTORY_CSV_HEADER,
};
