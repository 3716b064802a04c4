//! TREC-IS style scoring: ranking (NDCG), alerting worth, information-feed
//! categorisation (CF1-H, CF1-A, Cacc), prioritisation (PErr-H, PErr-A),
//! their harmonic mean, and Wilson score intervals.
//!
//! Every metric evaluates the gold tweets only. Run records for tweets absent
//! from gold are ignored, and a gold tweet missing from the run is an error
//! unless [`EvalOptions::lenient`] is set.

mod classification;
mod ranking;
mod summary;

use std::collections::BTreeMap;

pub use classification::{cacc, cacc_counts, cf1, perr};
pub use ranking::{alert_worth, ndcg, rank_by_priority, AlertScope, AlertWorthParams};
pub use summary::{confident_difference, harm, wilson_interval, HARM_INPUTS};

use serde::{Deserialize, Serialize};

use crate::corpus::{align_run, GoldRecord, RunRecord};
use crate::error::Result;
use crate::ontology::{Ontology, PriorityLevel};

pub const DEFAULT_NDCG_K: usize = 100;

/// Metric column names in report order.
pub const METRIC_COLUMNS: [&str; 9] = [
    "ndcg", "aw_hc", "aw_a", "perr_h", "perr_a", "cf1_h", "cf1_a", "cacc", "harm",
];

/// Header of the single-row `eval` CSV.
pub const EVAL_CSV_HEADER: &str = "ndcg,aw_hc,aw_a,cf1_h,cf1_a,cacc,perr_h,perr_a,harm";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub ndcg: f64,
    pub aw_hc: f64,
    pub aw_a: f64,
    pub cf1_h: f64,
    pub cf1_a: f64,
    pub cacc: f64,
    pub perr_h: f64,
    pub perr_a: f64,
    pub harm: f64,
}

impl MetricReport {
    /// Builds a report and fills `harm` from the other eight values.
    pub fn from_parts(ndcg: f64, aw_hc: f64, aw_a: f64, cf1_h: f64, cf1_a: f64, cacc: f64, perr_h: f64, perr_a: f64) -> Self {
        let mut r = MetricReport {
            ndcg,
            aw_hc,
            aw_a,
            cf1_h,
            cf1_a,
            cacc,
            perr_h,
            perr_a,
            harm: 0.0,
        };
        r.harm = harm(&r);
        r
    }

    /// Value of a column named as in [`METRIC_COLUMNS`].
    pub fn get(&self, column: &str) -> Option<f64> {
        Some(match column {
            "ndcg" => self.ndcg,
            "aw_hc" => self.aw_hc,
            "aw_a" => self.aw_a,
            "cf1_h" => self.cf1_h,
            "cf1_a" => self.cf1_a,
            "cacc" => self.cacc,
            "perr_h" => self.perr_h,
            "perr_a" => self.perr_a,
            "harm" => self.harm,
            _ => return None,
        })
    }

    /// Values in [`EVAL_CSV_HEADER`] order.
    pub fn csv_values(&self) -> [f64; 9] {
        [
            self.ndcg, self.aw_hc, self.aw_a, self.cf1_h, self.cf1_a, self.cacc, self.perr_h, self.perr_a, self.harm,
        ]
    }

    pub fn to_csv_row(&self) -> String {
        self.csv_values()
            .iter()
            .map(|v| format!("{v}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// NDCG cutoff per event.
    pub k: usize,
    /// NDCG gain per gold level, indexed Low..Critical.
    pub gains: [f64; 4],
    pub alert: AlertWorthParams,
    /// Fill gold tweets missing from the run with no types and score 0.
    pub lenient: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            k: DEFAULT_NDCG_K,
            gains: [0.0, 1.0, 2.0, 3.0],
            alert: AlertWorthParams::default(),
            lenient: false,
        }
    }
}

/// A gold tweet paired with the run's prediction for it.
#[derive(Debug, Clone)]
pub(crate) struct Judged<'a> {
    pub tweet_id: &'a str,
    pub event_id: &'a str,
    pub gold_types: Vec<bool>,
    pub gold_level: PriorityLevel,
    pub pred_types: Vec<bool>,
    pub pred_score: f64,
    pub pred_level: PriorityLevel,
}

pub(crate) fn judge<'a>(
    run: &[RunRecord],
    gold: &'a [GoldRecord],
    ontology: &Ontology,
    lenient: bool,
) -> Result<Vec<Judged<'a>>> {
    let aligned = align_run(run, gold, lenient)?;
    let bits = |names: &std::collections::BTreeSet<String>| {
        ontology
            .types()
            .iter()
            .map(|t| names.contains(&t.name))
            .collect::<Vec<_>>()
    };
    Ok(gold
        .iter()
        .zip(aligned)
        .map(|(g, r)| Judged {
            tweet_id: &g.tweet_id,
            event_id: &g.event_id,
            gold_types: bits(&g.info_types),
            gold_level: g.priority,
            pred_types: bits(&r.info_types),
            pred_score: r.priority_score,
            pred_level: r.level(),
        })
        .collect())
}

/// Groups judged tweets by event, events in lexicographic order.
pub(crate) fn by_event<'a, 'b>(judged: &'b [Judged<'a>]) -> BTreeMap<&'a str, Vec<&'b Judged<'a>>> {
    let mut m: BTreeMap<&str, Vec<&Judged>> = BTreeMap::new();
    for j in judged {
        m.entry(j.event_id).or_default().push(j);
    }
    m
}

/// All eight metrics plus their harmonic mean.
pub fn evaluate_all(run: &[RunRecord], gold: &[GoldRecord], ontology: &Ontology, opts: &EvalOptions) -> Result<MetricReport> {
    let judged = judge(run, gold, ontology, opts.lenient)?;
    Ok(evaluate_judged(&judged, ontology, opts))
}

pub(crate) fn evaluate_judged(judged: &[Judged<'_>], ontology: &Ontology, opts: &EvalOptions) -> MetricReport {
    let actionable = ontology.actionable_indices();
    let all = ontology.all_indices();
    MetricReport::from_parts(
        ranking::ndcg_judged(judged, opts.k, &opts.gains),
        ranking::alert_worth_judged(judged, AlertScope::HighCritical, &opts.alert),
        ranking::alert_worth_judged(judged, AlertScope::All, &opts.alert),
        classification::cf1_judged(judged, &actionable),
        classification::cf1_judged(judged, &all),
        classification::cacc_judged(judged, ontology.len()),
        classification::perr_judged(judged, &actionable),
        classification::perr_judged(judged, &all),
    )
}

/// One report per event, events in lexicographic order.
pub fn evaluate_per_event(
    run: &[RunRecord],
    gold: &[GoldRecord],
    ontology: &Ontology,
    opts: &EvalOptions,
) -> Result<Vec<(String, MetricReport)>> {
    let judged = judge(run, gold, ontology, opts.lenient)?;
    Ok(by_event(&judged)
        .into_iter()
        .map(|(event, js)| {
            let owned: Vec<Judged> = js.into_iter().cloned().collect();
            (event.to_string(), evaluate_judged(&owned, ontology, opts))
        })
        .collect())
}
