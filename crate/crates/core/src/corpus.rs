//! Assessed tweets (gold), system predictions (runs), and train/dev splitting.
//!
//! Both file kinds are JSON Lines: one flat object per line, UTF-8. See the
//! README for the exact key sets.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontology::{score_to_priority, Ontology, PriorityLevel};

pub const DEFAULT_SPLIT_SEED: u64 = 42;

/// A human-assessed tweet.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldRecord {
    pub tweet_id: String,
    pub event_id: String,
    pub text: String,
    pub info_types: BTreeSet<String>,
    pub priority: PriorityLevel,
}

/// A system's prediction for one tweet.
///
/// `priority_level` is only present when the level was decided separately from
/// the score (average-strategy ensembles); level-based metrics then use it
/// instead of mapping `priority_score`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub tweet_id: String,
    pub event_id: String,
    pub info_types: BTreeSet<String>,
    pub priority_score: f64,
    pub priority_level: Option<PriorityLevel>,
}

impl RunRecord {
    /// The level used by level-based metrics.
    pub fn level(&self) -> PriorityLevel {
        match self.priority_level {
            Some(l) => l,
            None => score_to_priority(self.priority_score)
                .expect("run record invariant: score in [0, 1]"),
        }
    }
}

/// Text-only input for prediction. Gold files are accepted too; their labels are ignored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tweet {
    pub tweet_id: String,
    pub event_id: String,
    pub text: String,
}

impl From<&GoldRecord> for Tweet {
    fn from(g: &GoldRecord) -> Self {
        Tweet {
            tweet_id: g.tweet_id.clone(),
            event_id: g.event_id.clone(),
            text: g.text.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<GoldRecord>,
    pub dev: Vec<GoldRecord>,
    pub seed: u64,
    pub ratio: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GoldLine {
    tweet_id: String,
    event_id: String,
    text: String,
    info_types: Vec<String>,
    priority: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TweetLine {
    tweet_id: String,
    event_id: String,
    text: String,
    #[serde(default)]
    #[allow(dead_code)]
    info_types: Option<Vec<String>>,
    #[serde(default)]
    #[allow(dead_code)]
    priority: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunLine {
    tweet_id: String,
    event_id: String,
    info_types: Vec<String>,
    priority_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priority_level: Option<String>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_line<'a, T: Deserialize<'a>>(line: &'a str, path: &Path, lineno: usize) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: lineno,
        message: e.to_string(),
    })
}

fn check_labels(
    labels: Vec<String>,
    ontology: &Ontology,
    path: &Path,
    lineno: usize,
) -> Result<BTreeSet<String>> {
    for l in &labels {
        if !ontology.contains(l) {
            return Err(Error::Validation(format!(
                "{}:{lineno}: unknown information type {l:?}",
                path.display()
            )));
        }
    }
    Ok(labels.into_iter().collect())
}

fn check_unique<'a>(seen: &mut HashSet<String>, id: &str, path: &Path, lineno: usize) -> Result<()> {
    if !seen.insert(id.to_string()) {
        return Err(Error::Validation(format!(
            "{}:{lineno}: duplicate tweet_id {id:?}",
            path.display()
        )));
    }
    Ok(())
}

pub fn parse_gold(text: &str, path: &Path, ontology: &Ontology) -> Result<Vec<GoldRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in records(text) {
        let raw: GoldLine = parse_line(line, path, lineno)?;
        let priority = raw.priority.parse::<PriorityLevel>().map_err(|_| {
            Error::Validation(format!(
                "{}:{lineno}: unknown priority {:?}",
                path.display(),
                raw.priority
            ))
        })?;
        check_unique(&mut seen, &raw.tweet_id, path, lineno)?;
        out.push(GoldRecord {
            info_types: check_labels(raw.info_types, ontology, path, lineno)?,
            tweet_id: raw.tweet_id,
            event_id: raw.event_id,
            text: raw.text,
            priority,
        });
    }
    Ok(out)
}

pub fn load_gold(path: impl AsRef<Path>, ontology: &Ontology) -> Result<Vec<GoldRecord>> {
    let path = path.as_ref();
    parse_gold(&read(path)?, path, ontology)
}

pub fn parse_tweets(text: &str, path: &Path) -> Result<Vec<Tweet>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in records(text) {
        let raw: TweetLine = parse_line(line, path, lineno)?;
        check_unique(&mut seen, &raw.tweet_id, path, lineno)?;
        out.push(Tweet {
            tweet_id: raw.tweet_id,
            event_id: raw.event_id,
            text: raw.text,
        });
    }
    Ok(out)
}

/// Loads prediction input: gold-format lines or lines with only `tweet_id`, `event_id`, `text`.
pub fn load_tweets(path: impl AsRef<Path>) -> Result<Vec<Tweet>> {
    let path = path.as_ref();
    parse_tweets(&read(path)?, path)
}

pub fn parse_run(text: &str, path: &Path, ontology: &Ontology) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in records(text) {
        let raw: RunLine = parse_line(line, path, lineno)?;
        if !(0.0..=1.0).contains(&raw.priority_score) {
            return Err(Error::Validation(format!(
                "{}:{lineno}: priority_score {} outside [0, 1]",
                path.display(),
                raw.priority_score
            )));
        }
        let priority_level = match raw.priority_level {
            None => None,
            Some(s) => Some(s.parse::<PriorityLevel>().map_err(|_| {
                Error::Validation(format!("{}:{lineno}: unknown priority {s:?}", path.display()))
            })?),
        };
        check_unique(&mut seen, &raw.tweet_id, path, lineno)?;
        out.push(RunRecord {
            info_types: check_labels(raw.info_types, ontology, path, lineno)?,
            tweet_id: raw.tweet_id,
            event_id: raw.event_id,
            priority_score: raw.priority_score,
            priority_level,
        });
    }
    Ok(out)
}

pub fn load_run(path: impl AsRef<Path>, ontology: &Ontology) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    parse_run(&read(path)?, path, ontology)
}

/// Serializes a run as JSON Lines. Scores use the shortest representation that
/// parses back to the identical `f64`.
pub fn format_run(records: &[RunRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let line = RunLine {
            tweet_id: r.tweet_id.clone(),
            event_id: r.event_id.clone(),
            info_types: r.info_types.iter().cloned().collect(),
            priority_score: r.priority_score,
            priority_level: r.priority_level.map(|l| l.as_str().to_string()),
        };
        out.push_str(&serde_json::to_string(&line).expect("run line serializes"));
        out.push('\n');
    }
    out
}

pub fn write_run(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(format_run(records).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Serializes gold records in the gold file format.
pub fn format_gold(records: &[GoldRecord]) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        tweet_id: &'a str,
        event_id: &'a str,
        text: &'a str,
        info_types: Vec<&'a str>,
        priority: &'a str,
    }
    let mut out = String::new();
    for g in records {
        let line = Out {
            tweet_id: &g.tweet_id,
            event_id: &g.event_id,
            text: &g.text,
            info_types: g.info_types.iter().map(String::as_str).collect(),
            priority: g.priority.as_str(),
        };
        out.push_str(&serde_json::to_string(&line).expect("gold line serializes"));
        out.push('\n');
    }
    out
}

pub fn write_gold(records: &[GoldRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_gold(records)).map_err(|e| Error::io(path, e))
}

/// Number of dev records for a split: `ratio * n` rounded up, with products
/// that are integral up to float noise taken as-is.
pub fn dev_size(n: usize, ratio: f64) -> usize {
    let x = ratio * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

/// Uniform sample without replacement of the dev set; both halves keep corpus order.
pub fn split_train_dev(corpus: &[GoldRecord], ratio: f64, seed: u64) -> Result<CorpusSplit> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(Error::Domain(format!("split ratio {ratio} outside [0, 1)")));
    }
    let n = corpus.len();
    let k = dev_size(n, ratio);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_dev = vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, k) {
        in_dev[i] = true;
    }
    let (mut train, mut dev) = (Vec::with_capacity(n - k), Vec::with_capacity(k));
    for (rec, &d) in corpus.iter().zip(&in_dev) {
        if d {
            dev.push(rec.clone());
        } else {
            train.push(rec.clone());
        }
    }
    Ok(CorpusSplit {
        train,
        dev,
        seed,
        ratio,
    })
}

/// Returns one run record per gold record, in gold order.
///
/// Strict mode fails listing every gold tweet the run does not cover. Lenient
/// mode fills each gap with an empty type set and score 0. Run records for
/// tweets absent from gold are ignored.
pub fn align_run(run: &[RunRecord], gold: &[GoldRecord], lenient: bool) -> Result<Vec<RunRecord>> {
    let by_id: HashMap<&str, &RunRecord> = run.iter().map(|r| (r.tweet_id.as_str(), r)).collect();
    let mut missing = Vec::new();
    let mut out = Vec::with_capacity(gold.len());
    for g in gold {
        match by_id.get(g.tweet_id.as_str()) {
            Some(r) => out.push((*r).clone()),
            None if lenient => out.push(RunRecord {
                tweet_id: g.tweet_id.clone(),
                event_id: g.event_id.clone(),
                info_types: BTreeSet::new(),
                priority_score: 0.0,
                priority_level: None,
            }),
            None => missing.push(g.tweet_id.as_str()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Validation(format!(
            "run is missing {} gold tweet(s): {}",
            missing.len(),
            missing.join(", ")
        )));
    }
    Ok(out)
}
