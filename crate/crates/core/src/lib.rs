//! Multi-task transformer classification of crisis tweets: information types
//! and priority from one shared encoder, run ensembling, and an evaluation
//! suite of ranking, alerting, categorisation and prioritisation metrics.

pub mod cli;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod metrics;
pub mod model;
pub mod ontology;
pub mod synthetic;
pub mod training;

pub use corpus::{GoldRecord, RunRecord, Tweet};
pub use ensemble::{ensemble_runs, EnsembleConfig, PriorityStrategy, TypeStrategy};
pub use error::{Error, Result};
pub use metrics::{evaluate_all, EvalOptions, MetricReport};
pub use model::{Model, ModelConfig, ModelParams};
pub use ontology::{default_ontology, priority_to_score, score_to_priority, InfoType, Ontology, PriorityLevel};
pub use training::{train, TrainConfig, TrainHistory};
