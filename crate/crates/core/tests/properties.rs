use std::collections::BTreeSet;

use proptest::prelude::*;

use tweet_triage::corpus::{GoldRecord, RunRecord};
use tweet_triage::ensemble::{ensemble_runs, EnsembleConfig, PriorityStrategy, TypeStrategy};
use tweet_triage::metrics::{evaluate_all, ndcg, wilson_interval, EvalOptions, MetricReport};
use tweet_triage::ontology::{Ontology, PriorityLevel};
use tweet_triage::training::{info_type_loss, lr_at_step, priority_loss, warmup_steps};

const NAMES: [&str; 3] = ["A", "B", "C"];

fn ontology() -> Ontology {
    Ontology::new([("A", true), ("B", false), ("C", false)]).unwrap()
}

fn level() -> impl Strategy<Value = PriorityLevel> {
    prop::sample::select(PriorityLevel::ALL.to_vec())
}

fn types() -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set(prop::sample::select(NAMES.to_vec()), 0..=3)
        .prop_map(|s| s.into_iter().map(String::from).collect())
}

/// Gold and run over the same tweets.
fn instance() -> impl Strategy<Value = (Vec<GoldRecord>, Vec<RunRecord>)> {
    prop::collection::vec((0..3usize, types(), level(), types(), 0.0..=1.0f64), 1..25).prop_map(|rows| {
        let gold = rows
            .iter()
            .enumerate()
            .map(|(i, (e, t, l, _, _))| GoldRecord {
                tweet_id: format!("{i:03}"),
                event_id: format!("e{e}"),
                text: String::new(),
                info_types: t.clone(),
                priority: *l,
            })
            .collect();
        let run = rows
            .iter()
            .enumerate()
            .map(|(i, (e, _, _, t, s))| RunRecord {
                tweet_id: format!("{i:03}"),
                event_id: format!("e{e}"),
                info_types: t.clone(),
                priority_score: *s,
                priority_level: None,
            })
            .collect();
        (gold, run)
    })
}

fn in_ranges(r: &MetricReport) -> bool {
    let unit = [r.ndcg, r.cf1_h, r.cf1_a, r.cacc, r.perr_h, r.perr_a, r.harm];
    unit.iter().all(|v| (0.0..=1.0).contains(v)) && [r.aw_hc, r.aw_a].iter().all(|v| (-1.0..=1.0).contains(v))
}

proptest! {
    #[test]
    fn metrics_stay_in_range((gold, run) in instance()) {
        let r = evaluate_all(&run, &gold, &ontology(), &EvalOptions::default()).unwrap();
        prop_assert!(in_ranges(&r), "{:?}", r);
    }

    #[test]
    fn tweet_order_is_irrelevant((gold, run) in instance(), seed in any::<u64>()) {
        let o = ontology();
        let base = evaluate_all(&run, &gold, &o, &EvalOptions::default()).unwrap();
        let mut shuffled_run = run.clone();
        let mut shuffled_gold = gold.clone();
        let n = run.len();
        for i in 0..n {
            let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % n as u64) as usize;
            shuffled_run.swap(i, j);
            shuffled_gold.swap(n - 1 - i, j);
        }
        let again = evaluate_all(&shuffled_run, &shuffled_gold, &o, &EvalOptions::default()).unwrap();
        prop_assert_eq!(base.ndcg, again.ndcg);
        prop_assert_eq!(base.aw_a, again.aw_a);
        prop_assert_eq!(base.aw_hc, again.aw_hc);
        prop_assert_eq!(base.cf1_a, again.cf1_a);
        prop_assert_eq!(base.perr_a, again.perr_a);
        prop_assert_eq!(base.cacc, again.cacc);
    }

    #[test]
    fn ndcg_depends_only_on_order((gold, run) in instance(), k in 1..30usize) {
        let o = ontology();
        let squashed: Vec<RunRecord> = run
            .iter()
            .map(|r| RunRecord { priority_score: r.priority_score * r.priority_score * 0.5, ..r.clone() })
            .collect();
        prop_assert_eq!(ndcg(&run, &gold, &o, k).unwrap(), ndcg(&squashed, &gold, &o, k).unwrap());
    }

    #[test]
    fn identical_members_are_idempotent((_, run) in instance(), copies in 1..4usize) {
        let members = vec![run.clone(); copies];
        for types in [TypeStrategy::Union, TypeStrategy::Intersection] {
            for priority in [PriorityStrategy::Highest, PriorityStrategy::Average, PriorityStrategy::Lowest] {
                let out = ensemble_runs(&members, EnsembleConfig { types, priority }).unwrap();
                prop_assert_eq!(&out, &run);
            }
        }
    }

    #[test]
    fn wilson_brackets_the_proportion(trials in 1..500u64, frac in 0.0..=1.0f64) {
        let s = (frac * trials as f64).floor() as u64;
        let (lo, hi) = wilson_interval(s, trials, 1.96).unwrap();
        let p = s as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
        let (mlo, mhi) = wilson_interval(trials - s, trials, 1.96).unwrap();
        prop_assert_eq!(mhi, 1.0 - lo);
        prop_assert_eq!(hi, 1.0 - mlo);
    }

    #[test]
    fn schedule_is_continuous_with_one_peak(total in 10..3000usize, ratio in 0.01..0.5f64) {
        let base = 1.0;
        let w = warmup_steps(total, ratio);
        let lrs: Vec<f64> = (0..=total).map(|s| lr_at_step(s, total, base, ratio)).collect();
        let peak = lrs.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(peak, base);
        prop_assert_eq!(lrs.iter().filter(|&&x| x == peak).count(), 1);
        prop_assert_eq!(lrs[w], base);
        let bound = 1.0 / w.max(1).min(total - w) as f64 + 1e-12;
        for pair in lrs.windows(2) {
            prop_assert!((pair[1] - pair[0]).abs() <= bound);
        }
    }

    #[test]
    fn losses_are_bounded(probs in prop::collection::vec(0.0..=1.0f64, 1..30), score in 0.0..=1.0f64, l in level()) {
        let gold: Vec<bool> = probs.iter().map(|p| *p > 0.3).collect();
        let li = info_type_loss(&probs, &gold);
        prop_assert!(li >= 0.0 && li.is_finite());
        let lp = priority_loss(score, l);
        prop_assert!((0.0..=1.0).contains(&lp));
    }
}
