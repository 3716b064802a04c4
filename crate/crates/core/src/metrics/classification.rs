use super::{judge, Judged};
use crate::corpus::{GoldRecord, RunRecord};
use crate::error::Result;
use crate::ontology::{Ontology, PriorityLevel};

/// `2TP / (2TP + FP + FN)`; zero when TP is zero.
fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        0.0
    } else {
        (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
    }
}

pub(crate) fn cf1_judged(judged: &[Judged<'_>], types: &[usize]) -> f64 {
    let mut scores = Vec::new();
    for &t in types {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for j in judged {
            match (j.pred_types[t], j.gold_types[t]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        if tp + fn_ > 0 {
            scores.push(f1(tp, fp, fn_));
        }
    }
    if scores.is_empty() {
        log::warn!("CF1: no type in the subset has a gold-positive tweet; reporting 0");
        return 0.0;
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Macro-F1 of the positive class over the types in `type_subset` that have
/// at least one gold-positive tweet.
pub fn cf1(run: &[RunRecord], gold: &[GoldRecord], ontology: &Ontology, type_subset: &[usize]) -> Result<f64> {
    Ok(cf1_judged(&judge(run, gold, ontology, false)?, type_subset))
}

fn cacc_counts_judged(judged: &[Judged<'_>], n_types: usize) -> (u64, u64) {
    let correct = judged
        .iter()
        .map(|j| (0..n_types).filter(|&t| j.pred_types[t] == j.gold_types[t]).count() as u64)
        .sum();
    (correct, (judged.len() * n_types) as u64)
}

pub(crate) fn cacc_judged(judged: &[Judged<'_>], n_types: usize) -> f64 {
    let (correct, total) = cacc_counts_judged(judged, n_types);
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

/// Correct `(tweet, type)` decisions and the number of decisions.
pub fn cacc_counts(run: &[RunRecord], gold: &[GoldRecord], ontology: &Ontology) -> Result<(u64, u64)> {
    Ok(cacc_counts_judged(&judge(run, gold, ontology, false)?, ontology.len()))
}

/// Fraction of correct binary decisions over all `(tweet, type)` pairs.
pub fn cacc(run: &[RunRecord], gold: &[GoldRecord], ontology: &Ontology) -> Result<f64> {
    Ok(cacc_judged(&judge(run, gold, ontology, false)?, ontology.len()))
}

pub(crate) fn perr_judged(judged: &[Judged<'_>], types: &[usize]) -> f64 {
    let mut scores = Vec::new();
    for &t in types {
        let restricted: Vec<&Judged> = judged.iter().filter(|j| j.gold_types[t]).collect();
        if restricted.is_empty() {
            continue;
        }
        let mut class_scores = Vec::new();
        for level in PriorityLevel::ALL {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for j in &restricted {
                match (j.pred_level == level, j.gold_level == level) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            if tp + fp + fn_ > 0 {
                class_scores.push(f1(tp, fp, fn_));
            }
        }
        scores.push(class_scores.iter().sum::<f64>() / class_scores.len() as f64);
    }
    if scores.is_empty() {
        log::warn!("PErr: no type in the subset has a gold-positive tweet; reporting 0");
        return 0.0;
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

/// Mean over types in `type_subset` of the 4-class priority macro-F1,
/// computed on that type's gold-positive tweets.
pub fn perr(run: &[RunRecord], gold: &[GoldRecord], ontology: &Ontology, type_subset: &[usize]) -> Result<f64> {
    Ok(perr_judged(&judge(run, gold, ontology, false)?, type_subset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn onto() -> Ontology {
        Ontology::new([("A", true), ("B", false)]).unwrap()
    }

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn g(id: &str, types: &[&str], level: PriorityLevel) -> GoldRecord {
        GoldRecord {
            tweet_id: id.into(),
            event_id: "e".into(),
            text: String::new(),
            info_types: set(types),
            priority: level,
        }
    }

    fn r(id: &str, types: &[&str], score: f64) -> RunRecord {
        RunRecord {
            tweet_id: id.into(),
            event_id: "e".into(),
            info_types: set(types),
            priority_score: score,
            priority_level: None,
        }
    }

    #[test]
    fn cf1_mixed_counts() {
        use PriorityLevel::Low;
        let o = onto();
        let gold = vec![g("1", &["A"], Low), g("2", &["A", "B"], Low), g("3", &[], Low), g("4", &["B"], Low)];
        let run = vec![r("1", &["A"], 0.1), r("2", &["B"], 0.1), r("3", &["A", "B"], 0.1), r("4", &[], 0.1)];
        // A: TP 1, FP 1, FN 1 -> 0.5. B: TP 1, FP 1, FN 1 -> 0.5.
        assert!((cf1(&run, &gold, &o, &[0, 1]).unwrap() - 0.5).abs() < 1e-12);
        assert!((cf1(&run, &gold, &o, &[0]).unwrap() - 0.5).abs() < 1e-12);
        // 8 decisions, correct: t1 A,B ; t2 B ; t4 A -> 4 of 8.
        assert!((cacc(&run, &gold, &o).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(cacc_counts(&run, &gold, &o).unwrap(), (4, 8));
    }

    #[test]
    fn cf1_excludes_types_without_gold_positives() {
        use PriorityLevel::Low;
        let o = onto();
        let gold = vec![g("1", &["A"], Low)];
        let run = vec![r("1", &["A", "B"], 0.1)];
        assert_eq!(cf1(&run, &gold, &o, &[0, 1]).unwrap(), 1.0);
        assert_eq!(cf1(&run, &gold, &o, &[1]).unwrap(), 0.0);
    }

    #[test]
    fn cacc_complement_and_prevalence() {
        use PriorityLevel::Low;
        let o = onto();
        let gold = vec![g("1", &["A"], Low), g("2", &[], Low)];
        let comp = vec![r("1", &["B"], 0.1), r("2", &["A", "B"], 0.1)];
        assert_eq!(cacc(&comp, &gold, &o).unwrap(), 0.0);
        let none = vec![r("1", &[], 0.1), r("2", &[], 0.1)];
        assert_eq!(cacc(&none, &gold, &o).unwrap(), 1.0 - 1.0 / 4.0);
    }

    #[test]
    fn perr_cases() {
        use PriorityLevel::*;
        let o = onto();
        let gold = vec![g("1", &["A"], Critical), g("2", &["A"], Low), g("3", &["A"], High)];
        let exact = vec![r("1", &[], 1.0), r("2", &[], 0.1), r("3", &[], 0.6)];
        assert_eq!(perr(&exact, &gold, &o, &[0, 1]).unwrap(), 1.0);
        let medium = vec![r("1", &[], 0.4), r("2", &[], 0.4), r("3", &[], 0.4)];
        assert_eq!(perr(&medium, &gold, &o, &[0]).unwrap(), 0.0);
        // Predicted (Critical, Critical, High): Critical F1 2/3, Low 0, High 1.
        let mixed = vec![r("1", &[], 0.9), r("2", &[], 0.9), r("3", &[], 0.6)];
        let want = (2.0 / 3.0 + 0.0 + 1.0) / 3.0;
        assert!((perr(&mixed, &gold, &o, &[0]).unwrap() - want).abs() < 1e-12);
    }
}
