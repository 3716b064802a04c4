//! Merging several runs into one.
//!
//! Type sets merge by union or intersection. Priority merges by taking the
//! highest, lowest, or average level, where the average is taken over the
//! members' canonical level scores and mapped back to a level. Each merged
//! record also carries a rankable score: the max, min, or mean of the
//! members' raw scores for the respective strategy.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::corpus::RunRecord;
use crate::error::{Error, Result};
use crate::ontology::{priority_to_score, score_to_priority, PriorityLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TypeStrategy {
    #[default]
    Union,
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorityStrategy {
    #[default]
    Highest,
    Average,
    Lowest,
}

impl FromStr for TypeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "union" => Ok(TypeStrategy::Union),
            "intersection" => Ok(TypeStrategy::Intersection),
            _ => Err(Error::Validation(format!("unknown type strategy {s:?}"))),
        }
    }
}

impl FromStr for PriorityStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "highest" => Ok(PriorityStrategy::Highest),
            "average" => Ok(PriorityStrategy::Average),
            "lowest" => Ok(PriorityStrategy::Lowest),
            _ => Err(Error::Validation(format!("unknown priority strategy {s:?}"))),
        }
    }
}

impl fmt::Display for TypeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeStrategy::Union => "Union",
            TypeStrategy::Intersection => "Intersection",
        })
    }
}

impl fmt::Display for PriorityStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorityStrategy::Highest => "Highest",
            PriorityStrategy::Average => "Average",
            PriorityStrategy::Lowest => "Lowest",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EnsembleConfig {
    pub types: TypeStrategy,
    pub priority: PriorityStrategy,
}

pub fn merge_info_types<'a>(
    members: impl IntoIterator<Item = &'a BTreeSet<String>>,
    strategy: TypeStrategy,
) -> BTreeSet<String> {
    let mut it = members.into_iter();
    let Some(first) = it.next() else {
        return BTreeSet::new();
    };
    let mut acc = first.clone();
    for s in it {
        match strategy {
            TypeStrategy::Union => acc.extend(s.iter().cloned()),
            TypeStrategy::Intersection => acc.retain(|t| s.contains(t)),
        }
    }
    acc
}

/// Merged level. Panics on an empty slice.
pub fn merge_priority(levels: &[PriorityLevel], strategy: PriorityStrategy) -> PriorityLevel {
    assert!(!levels.is_empty(), "at least one member level");
    match strategy {
        PriorityStrategy::Highest => *levels.iter().max().unwrap(),
        PriorityStrategy::Lowest => *levels.iter().min().unwrap(),
        PriorityStrategy::Average => {
            let mean = levels.iter().map(|&l| priority_to_score(l)).sum::<f64>() / levels.len() as f64;
            score_to_priority(mean).expect("mean of canonical scores lies in [0, 1]")
        }
    }
}

fn merge_scores(scores: &mut [f64], strategy: PriorityStrategy) -> f64 {
    // Sorted so the mean does not depend on member order.
    scores.sort_by(f64::total_cmp);
    let (lo, hi) = (scores[0], scores[scores.len() - 1]);
    match strategy {
        PriorityStrategy::Highest => hi,
        PriorityStrategy::Lowest => lo,
        // Offsets from the minimum, so identical members give back their own score.
        PriorityStrategy::Average => {
            let spread = scores.iter().map(|s| s - lo).sum::<f64>() / scores.len() as f64;
            (lo + spread).clamp(lo, hi)
        }
    }
}

/// Merges member runs tweet by tweet, in the first member's order.
pub fn ensemble_runs(members: &[Vec<RunRecord>], config: EnsembleConfig) -> Result<Vec<RunRecord>> {
    let Some(first) = members.first() else {
        return Err(Error::Validation("ensemble needs at least one member run".into()));
    };
    let reference: HashSet<&str> = first.iter().map(|r| r.tweet_id.as_str()).collect();
    let mut indexed = Vec::with_capacity(members.len());
    for (i, m) in members.iter().enumerate() {
        let map: HashMap<&str, &RunRecord> = m.iter().map(|r| (r.tweet_id.as_str(), r)).collect();
        let mut missing: Vec<&str> = reference.iter().filter(|id| !map.contains_key(*id)).copied().collect();
        let mut extra: Vec<&str> = map.keys().filter(|id| !reference.contains(*id)).copied().collect();
        if !missing.is_empty() || !extra.is_empty() || map.len() != m.len() {
            missing.sort_unstable();
            extra.sort_unstable();
            return Err(Error::Validation(format!(
                "member {i} covers a different tweet set: missing [{}], extra [{}]",
                missing.join(", "),
                extra.join(", ")
            )));
        }
        indexed.push(map);
    }

    let mut out = Vec::with_capacity(first.len());
    for rec in first {
        let id = rec.tweet_id.as_str();
        let recs: Vec<&RunRecord> = indexed.iter().map(|m| m[id]).collect();
        let info_types = merge_info_types(recs.iter().map(|r| &r.info_types), config.types);
        let levels: Vec<PriorityLevel> = recs.iter().map(|r| r.level()).collect();
        let level = merge_priority(&levels, config.priority);
        let mut scores: Vec<f64> = recs.iter().map(|r| r.priority_score).collect();
        let score = merge_scores(&mut scores, config.priority);
        let explicit = recs.iter().any(|r| r.priority_level.is_some());
        let priority_level = if explicit || score_to_priority(score)? != level {
            Some(level)
        } else {
            None
        };
        out.push(RunRecord {
            tweet_id: rec.tweet_id.clone(),
            event_id: rec.event_id.clone(),
            info_types,
            priority_score: score,
            priority_level,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use PriorityLevel::*;

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn rec(id: &str, types: &[&str], score: f64) -> RunRecord {
        RunRecord {
            tweet_id: id.into(),
            event_id: "e".into(),
            info_types: set(types),
            priority_score: score,
            priority_level: None,
        }
    }

    #[test]
    fn type_merging() {
        let a = set(&["A"]);
        let b = set(&["B"]);
        assert_eq!(merge_info_types([&a, &b], TypeStrategy::Union), set(&["A", "B"]));
        let ab = set(&["A", "B"]);
        let bc = set(&["B", "C"]);
        assert_eq!(merge_info_types([&ab, &bc], TypeStrategy::Intersection), set(&["B"]));
        assert_eq!(merge_info_types([&ab], TypeStrategy::Intersection), ab);
        assert_eq!(merge_info_types([&ab], TypeStrategy::Union), ab);
    }

    #[test]
    fn priority_merging() {
        assert_eq!(merge_priority(&[Critical, Medium], PriorityStrategy::Highest), Critical);
        assert_eq!(merge_priority(&[High, Low], PriorityStrategy::Lowest), Low);
        assert_eq!(merge_priority(&[Critical, Medium], PriorityStrategy::Average), High);
    }

    #[test]
    fn highest_uses_max_raw_score() {
        let a = vec![rec("1", &["A"], 0.9)];
        let b = vec![rec("1", &["B"], 0.4)];
        let out = ensemble_runs(&[a, b], EnsembleConfig::default()).unwrap();
        assert_eq!(out[0].priority_score, 0.9);
        assert_eq!(out[0].level(), Critical);
        assert_eq!(out[0].priority_level, None);
        assert_eq!(out[0].info_types, set(&["A", "B"]));
    }

    #[test]
    fn average_level_recorded_when_scores_disagree() {
        let cfg = EnsembleConfig {
            types: TypeStrategy::Union,
            priority: PriorityStrategy::Average,
        };
        // Critical + Low: mapped mean 0.625 gives High, raw mean 0.45 would give Medium.
        let a = vec![rec("1", &[], 0.8)];
        let b = vec![rec("1", &[], 0.1)];
        let out = ensemble_runs(&[a, b], cfg).unwrap();
        assert_eq!(out[0].priority_level, Some(High));
        assert!((out[0].priority_score - 0.45).abs() < 1e-15);
        // Agreeing levels leave the field unset.
        let a = vec![rec("1", &[], 0.6)];
        let b = vec![rec("1", &[], 0.7)];
        let out = ensemble_runs(&[a, b], cfg).unwrap();
        assert_eq!(out[0].priority_level, None);
        assert_eq!(out[0].level(), High);
    }

    #[test]
    fn coverage_mismatch_lists_ids() {
        let a = vec![rec("1", &[], 0.1), rec("2", &[], 0.1)];
        let b = vec![rec("1", &[], 0.1), rec("3", &[], 0.1)];
        let err = ensemble_runs(&[a, b], EnsembleConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("missing [2]") && msg.contains("extra [3]"), "{msg}");
        assert!(ensemble_runs(&[], EnsembleConfig::default()).is_err());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("union".parse::<TypeStrategy>().unwrap(), TypeStrategy::Union);
        assert_eq!("Lowest".parse::<PriorityStrategy>().unwrap(), PriorityStrategy::Lowest);
        assert!("vote".parse::<TypeStrategy>().is_err());
    }
}
