//! Seeded generator for small corpora whose labels are determined by marker words.
//!
//! Every tweet carries one priority marker and one marker per assigned
//! information type, mixed with filler words in random order.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::GoldRecord;
use crate::error::Result;
use crate::ontology::{Ontology, PriorityLevel};

pub const SYNTHETIC_TYPES: [(&str, bool); 4] = [
    ("Request-SearchAndRescue", true),
    ("Report-EmergingThreats", true),
    ("Report-Weather", false),
    ("Other-Sentiment", false),
];

/// Marker word per type, aligned with [`SYNTHETIC_TYPES`].
pub const TYPE_MARKERS: [&str; 4] = ["trapped", "collapse", "rainfall", "prayers"];

/// Marker word per level, Low..Critical.
pub const PRIORITY_MARKERS: [&str; 4] = ["fyi", "update", "serious", "urgent"];

const FILLER: [&str; 16] = [
    "the", "city", "near", "river", "people", "today", "road", "news", "north", "area", "team", "local", "now", "still",
    "photo", "via",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub n_tweets: usize,
    pub n_events: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_tweets: 200,
            n_events: 2,
            seed: 7,
        }
    }
}

pub fn synthetic_ontology() -> Ontology {
    Ontology::new(SYNTHETIC_TYPES).expect("synthetic labels are unique")
}

pub fn generate(spec: &SyntheticSpec) -> Result<(Ontology, Vec<GoldRecord>)> {
    let ontology = synthetic_ontology();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_events = spec.n_events.max(1);
    let mut out = Vec::with_capacity(spec.n_tweets);
    for i in 0..spec.n_tweets {
        let level = PriorityLevel::ALL[rng.random_range(0..4)];
        let mut words: Vec<&str> = vec![PRIORITY_MARKERS[level.ordinal()]];
        let mut info_types = std::collections::BTreeSet::new();
        // At least one type, rarely all of them.
        let first = rng.random_range(0..SYNTHETIC_TYPES.len());
        for (j, (name, _)) in SYNTHETIC_TYPES.iter().enumerate() {
            if j == first || rng.random_bool(0.25) {
                info_types.insert(name.to_string());
                words.push(TYPE_MARKERS[j]);
            }
        }
        let n_filler = rng.random_range(2..=5);
        for _ in 0..n_filler {
            words.push(FILLER.choose(&mut rng).expect("non-empty filler"));
        }
        words.shuffle(&mut rng);
        out.push(GoldRecord {
            tweet_id: format!("t{i:05}"),
            event_id: format!("event{}", i % n_events),
            text: words.join(" "),
            info_types,
            priority: level,
        });
    }
    Ok((ontology, out))
}
