use crate::ontology::{priority_to_score, PriorityLevel};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

pub(crate) fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Multi-label binary cross-entropy for one example, summed over types.
pub fn info_type_loss(type_probs: &[f64], gold: &[bool]) -> f64 {
    assert_eq!(type_probs.len(), gold.len(), "one probability per type");
    type_probs
        .iter()
        .zip(gold)
        .map(|(&p, &b)| {
            let p = clamp_prob(p);
            if b {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum()
}

/// Squared error between the level's canonical score and the predicted score.
pub fn priority_loss(priority_score: f64, gold: PriorityLevel) -> f64 {
    let d = priority_to_score(gold) - priority_score;
    d * d
}

pub fn total_loss(lambda: f64, info: f64, priority: f64) -> f64 {
    lambda * info + (1.0 - lambda) * priority
}

/// Batch-mean losses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatchLoss {
    pub total: f64,
    pub info: f64,
    pub priority: f64,
}
