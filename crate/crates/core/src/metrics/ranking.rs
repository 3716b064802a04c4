use std::cmp::Ordering;

use super::{by_event, judge, EvalOptions, Judged};
use crate::corpus::{GoldRecord, RunRecord};
use crate::error::Result;
use crate::ontology::Ontology;

/// Descending score, ties by ascending tweet id.
fn rank_order(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Tweet ids of one event's run records in priority order.
pub fn rank_by_priority<'a>(run: &'a [RunRecord], event_id: &str) -> Vec<&'a str> {
    let mut recs: Vec<&RunRecord> = run.iter().filter(|r| r.event_id == event_id).collect();
    recs.sort_by(|a, b| rank_order((a.priority_score, &a.tweet_id), (b.priority_score, &b.tweet_id)));
    recs.into_iter().map(|r| r.tweet_id.as_str()).collect()
}

fn ranked<'a, 'b>(mut tweets: Vec<&'b Judged<'a>>) -> Vec<&'b Judged<'a>> {
    tweets.sort_by(|a, b| rank_order((a.pred_score, a.tweet_id), (b.pred_score, b.tweet_id)));
    tweets
}

fn dcg(gains: impl Iterator<Item = f64>, k: usize) -> f64 {
    gains
        .take(k)
        .enumerate()
        .map(|(i, g)| g / ((i + 2) as f64).log2())
        .sum()
}

pub(crate) fn ndcg_judged(judged: &[Judged<'_>], k: usize, gains: &[f64; 4]) -> f64 {
    let mut scores = Vec::new();
    for (_, tweets) in by_event(judged) {
        let mut ideal: Vec<f64> = tweets.iter().map(|j| gains[j.gold_level.ordinal()]).collect();
        ideal.sort_by(|a, b| b.total_cmp(a));
        let idcg = dcg(ideal.into_iter(), k);
        if idcg == 0.0 {
            continue;
        }
        let order = ranked(tweets);
        let got = dcg(order.iter().map(|j| gains[j.gold_level.ordinal()]), k);
        scores.push(got / idcg);
    }
    if scores.is_empty() {
        log::warn!("NDCG: every event has zero ideal gain; reporting 0");
        return 0.0;
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Mean per-event NDCG@k over events with non-zero ideal DCG.
pub fn ndcg(run: &[RunRecord], gold: &[GoldRecord], ontology: &Ontology, k: usize) -> Result<f64> {
    let opts = EvalOptions::default();
    Ok(ndcg_judged(&judge(run, gold, ontology, false)?, k, &opts.gains))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlertScope {
    /// Tweets whose gold level is High or Critical.
    HighCritical,
    All,
}

/// Constants of the alerting-worth formula.
///
/// Walking each event's ranked tweets, a prediction of High or Critical is an
/// alert. A true alert earns `true_alert` and clears the false-alert streak.
/// The `c`-th consecutive false alert costs
/// `min(false_alert_cap, false_alert_base + false_alert_step * (c - 1))`.
/// Silence on a High/Critical tweet costs `missed_alert`; silence on any
/// other tweet earns 0 and clears the streak. The streak restarts at each
/// event. The metric is the total divided by the number of scoped tweets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlertWorthParams {
    pub true_alert: f64,
    pub missed_alert: f64,
    pub false_alert_base: f64,
    pub false_alert_step: f64,
    pub false_alert_cap: f64,
}

impl Default for AlertWorthParams {
    fn default() -> Self {
        AlertWorthParams {
            true_alert: 1.0,
            missed_alert: 1.0,
            false_alert_base: 0.5,
            false_alert_step: 0.25,
            false_alert_cap: 1.0,
        }
    }
}

pub(crate) fn alert_worth_judged(judged: &[Judged<'_>], scope: AlertScope, p: &AlertWorthParams) -> f64 {
    let mut total = 0.0;
    let mut scoped = 0usize;
    for (_, tweets) in by_event(judged) {
        let mut streak = 0u32;
        for j in ranked(tweets) {
            let gold_alert = j.gold_level.is_alert();
            if scope == AlertScope::HighCritical && !gold_alert {
                continue;
            }
            scoped += 1;
            total += match (j.pred_level.is_alert(), gold_alert) {
                (true, true) => {
                    streak = 0;
                    p.true_alert
                }
                (true, false) => {
                    streak += 1;
                    -(p.false_alert_base + p.false_alert_step * (streak - 1) as f64).min(p.false_alert_cap)
                }
                (false, true) => -p.missed_alert,
                (false, false) => {
                    streak = 0;
                    0.0
                }
            };
        }
    }
    if scoped == 0 {
        0.0
    } else {
        total / scoped as f64
    }
}

pub fn alert_worth(
    run: &[RunRecord],
    gold: &[GoldRecord],
    ontology: &Ontology,
    scope: AlertScope,
    params: &AlertWorthParams,
) -> Result<f64> {
    Ok(alert_worth_judged(&judge(run, gold, ontology, false)?, scope, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{default_ontology, PriorityLevel};
    use std::collections::BTreeSet;

    fn rec(id: &str, score: f64) -> RunRecord {
        RunRecord {
            tweet_id: id.into(),
            event_id: "e".into(),
            info_types: BTreeSet::new(),
            priority_score: score,
            priority_level: None,
        }
    }

    fn gold(id: &str, level: PriorityLevel) -> GoldRecord {
        GoldRecord {
            tweet_id: id.into(),
            event_id: "e".into(),
            text: String::new(),
            info_types: BTreeSet::new(),
            priority: level,
        }
    }

    #[test]
    fn ranking_order_and_ties() {
        let run = vec![rec("a", 0.9), rec("b", 0.1), rec("c", 0.5)];
        assert_eq!(rank_by_priority(&run, "e"), vec!["a", "c", "b"]);
        let run = vec![rec("z", 0.4), rec("m", 0.4), rec("a", 0.4)];
        assert_eq!(rank_by_priority(&run, "e"), vec!["a", "m", "z"]);
        assert_eq!(rank_by_priority(&run[..1], "e"), vec!["z"]);
        assert!(rank_by_priority(&run, "other").is_empty());
    }

    #[test]
    fn ndcg_hand_evaluation() {
        use PriorityLevel::*;
        let o = default_ontology();
        // Gold gains 3, 1, 0 for x, y, z; the system ranks z, x, y.
        let g = vec![gold("x", Critical), gold("y", Medium), gold("z", Low)];
        let run = vec![rec("x", 0.5), rec("y", 0.2), rec("z", 0.9)];
        let dcg = 0.0 / 2f64.log2() + 3.0 / 3f64.log2() + 1.0 / 4f64.log2();
        let idcg = 3.0 / 2f64.log2() + 1.0 / 3f64.log2() + 0.0;
        let want = dcg / idcg;
        assert!((want - 0.659_001_8).abs() < 1e-6);
        assert!((ndcg(&run, &g, o, 100).unwrap() - want).abs() < 1e-12);
        let ideal = vec![rec("x", 0.9), rec("y", 0.5), rec("z", 0.1)];
        assert!((ndcg(&ideal, &g, o, 100).unwrap() - 1.0).abs() < 1e-12);
        let all_low = vec![gold("x", Low), gold("y", Low)];
        assert_eq!(ndcg(&run[..2], &all_low, o, 100).unwrap(), 0.0);
    }

    #[test]
    fn alert_worth_hand_trace() {
        use PriorityLevel::*;
        let o = default_ontology();
        // Ranked gold (C, L, L, H) with predicted levels (C, H, H, L).
        let g = vec![gold("1", Critical), gold("2", Low), gold("3", Low), gold("4", High)];
        let run = vec![rec("1", 0.95), rec("2", 0.74), rec("3", 0.7), rec("4", 0.2)];
        let p = AlertWorthParams::default();
        let aw = alert_worth(&run, &g, o, AlertScope::All, &p).unwrap();
        assert!((aw - (-0.3125)).abs() < 1e-12);
        let hc = alert_worth(&run, &g, o, AlertScope::HighCritical, &p).unwrap();
        assert!((hc - 0.0).abs() < 1e-12);
    }

    #[test]
    fn alert_worth_extremes() {
        use PriorityLevel::*;
        let o = default_ontology();
        let g = vec![gold("1", Critical), gold("2", Critical)];
        let silent = vec![rec("1", 0.1), rec("2", 0.2)];
        let p = AlertWorthParams::default();
        assert_eq!(alert_worth(&silent, &g, o, AlertScope::HighCritical, &p).unwrap(), -1.0);
        let loud = vec![rec("1", 0.9), rec("2", 0.8)];
        assert_eq!(alert_worth(&loud, &g, o, AlertScope::HighCritical, &p).unwrap(), 1.0);
        assert_eq!(alert_worth(&loud, &g, o, AlertScope::All, &p).unwrap(), 1.0);
    }

    #[test]
    fn false_alert_penalty_caps() {
        use PriorityLevel::*;
        let o = default_ontology();
        let g: Vec<_> = (0..5).map(|i| gold(&i.to_string(), Low)).collect();
        let run: Vec<_> = (0..5).map(|i| rec(&i.to_string(), 0.9)).collect();
        let aw = alert_worth(&run, &g, o, AlertScope::All, &AlertWorthParams::default()).unwrap();
        assert!((aw - -(0.5 + 0.75 + 1.0 + 1.0 + 1.0) / 5.0).abs() < 1e-12);
    }
}
