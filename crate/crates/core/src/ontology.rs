//! Label space: information types, the actionable subset, and priority levels.
//!
//! The priority mapping works in both directions. Forward, each level has a
//! canonical score (Low 0.25, Medium 0.5, High 0.75, Critical 1.0). In reverse,
//! a score is assigned to the level whose half-open interval contains it:
//! Low on `[0, 0.25]`, Medium on `(0.25, 0.5]`, High on `(0.5, 0.75]`,
//! Critical on `(0.75, 1]`. The canonical points map back to their own level.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label names of the 25-type ontology with their actionable flag, in index order.
const DEFAULT_TYPES: [(&str, bool); 25] = [
    ("Request-GoodsServices", true),
    ("Request-SearchAndRescue", true),
    ("Report-NewSubEvent", true),
    ("Report-ServiceAvailable", true),
    ("CallToAction-MovePeople", true),
    ("Report-EmergingThreats", true),
    ("CallToAction-Volunteer", false),
    ("CallToAction-Donations", false),
    ("Report-Weather", false),
    ("Report-Location", false),
    ("Request-InformationWanted", false),
    ("Report-FirstPartyObservation", false),
    ("Report-ThirdPartyObservation", false),
    ("Report-MultimediaShare", false),
    ("Report-Factoid", false),
    ("Report-Official", false),
    ("Report-News", false),
    ("Report-CleanUp", false),
    ("Report-Hashtags", false),
    ("Report-OriginalEvent", false),
    ("Other-ContextualInformation", false),
    ("Other-Advice", false),
    ("Other-Sentiment", false),
    ("Other-Discussion", false),
    ("Other-Irrelevant", false),
];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InfoType {
    pub name: String,
    pub actionable: bool,
    pub index: usize,
}

/// An ordered, immutable set of information types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    types: Vec<InfoType>,
    by_name: HashMap<String, usize>,
}

impl Ontology {
    /// Builds an ontology from `(name, actionable)` pairs; order defines indices.
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = (S, bool)>) -> Result<Self> {
        let mut types = Vec::new();
        let mut by_name = HashMap::new();
        for (index, (name, actionable)) in labels.into_iter().enumerate() {
            let name = name.into();
            if name.is_empty() || name.chars().any(char::is_whitespace) {
                return Err(Error::Validation(format!("invalid label name {name:?}")));
            }
            if by_name.insert(name.clone(), index).is_some() {
                return Err(Error::Validation(format!("duplicate label {name:?}")));
            }
            types.push(InfoType {
                name,
                actionable,
                index,
            });
        }
        if types.is_empty() {
            return Err(Error::Validation("ontology has no labels".into()));
        }
        Ok(Ontology { types, by_name })
    }

    /// Parses an override file: one label per line, optionally followed by a
    /// tab and the word `actionable`. Blank lines are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut labels = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let name = parts.next().unwrap_or_default().trim();
            let actionable = match parts.next().map(str::trim) {
                None | Some("") => false,
                Some("actionable") => true,
                Some(other) => {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: format!("expected \"actionable\" marker, found {other:?}"),
                    })
                }
            };
            labels.push((name.to_string(), actionable));
        }
        Ontology::new(labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ontology::parse(&text, path)
    }

    /// Serializes in the override file format; `parse` reads it back unchanged.
    pub fn to_label_file(&self) -> String {
        let mut out = String::new();
        for t in &self.types {
            out.push_str(&t.name);
            if t.actionable {
                out.push_str("\tactionable");
            }
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[InfoType] {
        &self.types
    }

    pub fn get(&self, name: &str) -> Option<&InfoType> {
        self.by_name.get(name).map(|&i| &self.types[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    /// Indices of the actionable types.
    pub fn actionable_indices(&self) -> Vec<usize> {
        self.types
            .iter()
            .filter(|t| t.actionable)
            .map(|t| t.index)
            .collect()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.types.len()).collect()
    }
}

/// The compiled-in 25-type ontology. Built once and shared for the process lifetime.
pub fn default_ontology() -> &'static Ontology {
    static ONTOLOGY: OnceLock<Ontology> = OnceLock::new();
    ONTOLOGY.get_or_init(|| Ontology::new(DEFAULT_TYPES).expect("default ontology is valid"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PriorityLevel {
    Low,
    Medium,
    High,
    Critical,
}

impl PriorityLevel {
    pub const ALL: [PriorityLevel; 4] = [
        PriorityLevel::Low,
        PriorityLevel::Medium,
        PriorityLevel::High,
        PriorityLevel::Critical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PriorityLevel::Low => "Low",
            PriorityLevel::Medium => "Medium",
            PriorityLevel::High => "High",
            PriorityLevel::Critical => "Critical",
        }
    }

    /// Position in the Low..Critical order, 0..=3.
    pub fn ordinal(self) -> usize {
        self as usize
    }

    /// High or Critical.
    pub fn is_alert(self) -> bool {
        self >= PriorityLevel::High
    }
}

impl fmt::Display for PriorityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PriorityLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PriorityLevel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown priority level {s:?}")))
    }
}

/// Canonical score of a level.
pub fn priority_to_score(level: PriorityLevel) -> f64 {
    match level {
        PriorityLevel::Low => 0.25,
        PriorityLevel::Medium => 0.5,
        PriorityLevel::High => 0.75,
        PriorityLevel::Critical => 1.0,
    }
}

/// Level whose interval contains `score`; errors outside `[0, 1]` (including NaN).
pub fn score_to_priority(score: f64) -> Result<PriorityLevel> {
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::Domain(format!(
            "priority score {score} outside [0, 1]"
        )));
    }
    Ok(if score <= 0.25 {
        PriorityLevel::Low
    } else if score <= 0.5 {
        PriorityLevel::Medium
    } else if score <= 0.75 {
        PriorityLevel::High
    } else {
        PriorityLevel::Critical
    })
}
