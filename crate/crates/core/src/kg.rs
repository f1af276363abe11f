//! Chest-disease knowledge graph: file format, validation, and synonym
//! canonicalization.
//!
//! The graph is a flat catalogue of disease keywords grouped under organ
//! categories, plus a synonym pool that maps surface phrases to canonical
//! phrases. It is immutable after loading and shared read-only by the
//! labeling, augmentation, and evaluation stages.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::label::DiseasePair;

/// Category names every graph must declare. "spine" findings are folded
/// under "bone" in the seed file.
pub const REQUIRED_CATEGORIES: [&str; 9] = [
    "lung",
    "heart",
    "pleural",
    "mediastinum",
    "bone",
    "airspace",
    "diaphragm",
    "other",
    "normal",
];

/// The category reserved for sentences with no disease mention.
pub const NORMAL_CATEGORY: &str = "normal";

/// One disease keyword attached to an organ category.
///
/// `triggers` are canonical lowercase phrases whose presence in a sentence
/// fires the entry. A trigger shared by several entries is "generic": the
/// organ is then resolved through `organ_cues`, falling back to the single
/// sharing entry with `default_organ` set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgEntry {
    pub disease: String,
    pub organ: String,
    pub triggers: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub organ_cues: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub default_organ: bool,
}

impl KgEntry {
    /// The (disease, organ) pair this entry labels with.
    pub fn pair(&self) -> DiseasePair {
        DiseasePair::new(&self.disease, &self.organ)
    }
}

/// The full knowledge graph. Synonym declaration order is preserved because
/// it breaks ties between equally long synonym phrases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    pub version: String,
    pub categories: Vec<String>,
    pub synonyms: IndexMap<String, String>,
    pub entries: Vec<KgEntry>,
}

/// A single validation failure: which entry (or phrase) broke which rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub subject: String,
    pub detail: String,
}

impl Violation {
    fn new(rule: &'static str, subject: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            rule,
            subject: subject.into(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.subject, self.detail)
    }
}

pub mod rules {
    pub const MISSING_CATEGORY: &str = "missing required category";
    pub const DUPLICATE_CATEGORY: &str = "duplicate category";
    pub const UNDECLARED_ORGAN: &str = "undeclared organ";
    pub const DUPLICATE_PAIR: &str = "duplicate pair";
    pub const EMPTY_TRIGGERS: &str = "empty triggers";
    pub const TRIGGER_NOT_CANONICAL: &str = "trigger not canonical";
    pub const SYNONYM_NOT_FIXED_POINT: &str = "synonym value not a fixed point";
    pub const AMBIGUOUS_DEFAULT: &str = "ambiguous default";
    pub const MISSING_DEFAULT: &str = "missing default";
}

#[derive(Debug, Error)]
pub enum KgError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed KG document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("KG validation failed with {} violation(s):\n{}", .0.len(), render_violations(.0))]
    Invalid(Vec<Violation>),
}

fn render_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Load, normalize, and validate a KG file. Every violation is reported,
/// not just the first.
pub fn load_kg(path: impl AsRef<Path>) -> Result<KnowledgeGraph, KgError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| KgError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_kg(&text)
}

/// Parse a KG document from a JSON string.
pub fn parse_kg(text: &str) -> Result<KnowledgeGraph, KgError> {
    let mut kg: KnowledgeGraph = serde_json::from_str(text)?;
    normalize_kg(&mut kg);
    let violations = validate_kg(&kg);
    if violations.is_empty() {
        Ok(kg)
    } else {
        Err(KgError::Invalid(violations))
    }
}

/// Serialize the graph back to its file format (pretty JSON, atomic write).
pub fn save_kg(kg: &KnowledgeGraph, path: impl AsRef<Path>) -> Result<(), KgError> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(kg)?;
    text.push('\n');
    crate::io::write_atomic(path, text.as_bytes()).map_err(|source| KgError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// The seed graph shipped with the toolkit, embedded at build time.
pub fn seed_kg() -> KnowledgeGraph {
    parse_kg(SEED_KG_JSON).expect("embedded seed KG must be valid")
}

/// Raw JSON of the shipped seed graph.
pub const SEED_KG_JSON: &str = include_str!("../data/seed_kg.json");

/// Lowercase and whitespace-normalize every phrase in the graph.
fn normalize_kg(kg: &mut KnowledgeGraph) {
    for category in &mut kg.categories {
        *category = normalize_phrase(category);
    }
    let synonyms = std::mem::take(&mut kg.synonyms);
    kg.synonyms = synonyms
        .into_iter()
        .map(|(k, v)| (normalize_phrase(&k), normalize_phrase(&v)))
        .collect();
    for entry in &mut kg.entries {
        entry.disease = normalize_phrase(&entry.disease);
        entry.organ = normalize_phrase(&entry.organ);
        for trigger in &mut entry.triggers {
            *trigger = normalize_phrase(trigger);
        }
        for cue in &mut entry.organ_cues {
            *cue = normalize_phrase(cue);
        }
    }
}

fn normalize_phrase(phrase: &str) -> String {
    phrase
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Check every type invariant. An empty result means the graph is valid;
/// violations are data, not errors.
pub fn validate_kg(kg: &KnowledgeGraph) -> Vec<Violation> {
    let mut violations = Vec::new();

    let mut declared: HashSet<&str> = HashSet::new();
    for category in &kg.categories {
        if !declared.insert(category.as_str()) {
            violations.push(Violation::new(
                rules::DUPLICATE_CATEGORY,
                category.clone(),
                "category declared more than once",
            ));
        }
    }
    for required in REQUIRED_CATEGORIES {
        if !declared.contains(required) {
            violations.push(Violation::new(
                rules::MISSING_CATEGORY,
                required,
                "required category is not declared",
            ));
        }
    }

    // Synonym values must be fixed points: applying the pool twice must
    // equal applying it once.
    let table = SynonymTable::new(kg);
    for (surface, canonical) in &kg.synonyms {
        let value_tokens: Vec<String> =
            canonical.split_whitespace().map(str::to_string).collect();
        if table.apply(&value_tokens) != value_tokens {
            violations.push(Violation::new(
                rules::SYNONYM_NOT_FIXED_POINT,
                format!("{surface} -> {canonical}"),
                "synonym value is rewritten by another synonym",
            ));
        }
    }

    let mut seen_pairs: HashSet<(String, String)> = HashSet::new();
    for entry in &kg.entries {
        let subject = format!("({}, {})", entry.disease, entry.organ);
        if entry.organ == NORMAL_CATEGORY || !declared.contains(entry.organ.as_str()) {
            violations.push(Violation::new(
                rules::UNDECLARED_ORGAN,
                subject.clone(),
                format!("organ {:?} is not a declared non-normal category", entry.organ),
            ));
        }
        if !seen_pairs.insert((entry.disease.clone(), entry.organ.clone())) {
            violations.push(Violation::new(
                rules::DUPLICATE_PAIR,
                subject.clone(),
                "another entry already claims this (disease, organ) pair",
            ));
        }
        if entry.triggers.is_empty() {
            violations.push(Violation::new(
                rules::EMPTY_TRIGGERS,
                subject.clone(),
                "entry declares no trigger phrases",
            ));
        }
        for trigger in &entry.triggers {
            let tokens: Vec<String> = trigger.split_whitespace().map(str::to_string).collect();
            if table.apply(&tokens) != tokens {
                violations.push(Violation::new(
                    rules::TRIGGER_NOT_CANONICAL,
                    subject.clone(),
                    format!("trigger {trigger:?} is not synonym-resolved"),
                ));
            }
        }
    }

    // Generic triggers (shared by several entries) need exactly one
    // default_organ fallback among the sharing entries.
    let mut owners: HashMap<&str, Vec<&KgEntry>> = HashMap::new();
    for entry in &kg.entries {
        for trigger in &entry.triggers {
            owners.entry(trigger.as_str()).or_default().push(entry);
        }
    }
    let mut shared: Vec<(&str, &Vec<&KgEntry>)> = owners
        .iter()
        .filter(|(_, entries)| entries.len() > 1)
        .map(|(trigger, entries)| (*trigger, entries))
        .collect();
    shared.sort_by_key(|(trigger, _)| *trigger);
    for (trigger, entries) in shared {
        let defaults: Vec<&&KgEntry> = entries.iter().filter(|e| e.default_organ).collect();
        if defaults.len() > 1 {
            violations.push(Violation::new(
                rules::AMBIGUOUS_DEFAULT,
                trigger.to_string(),
                format!(
                    "trigger is shared but {} entries set default_organ",
                    defaults.len()
                ),
            ));
        } else if defaults.is_empty() {
            violations.push(Violation::new(
                rules::MISSING_DEFAULT,
                trigger.to_string(),
                "trigger is shared but no entry sets default_organ",
            ));
        }
    }

    violations
}

impl KnowledgeGraph {
    /// All distinct (disease, organ) pairs declared by the graph.
    pub fn disease_pairs(&self) -> std::collections::BTreeSet<DiseasePair> {
        self.entries.iter().map(KgEntry::pair).collect()
    }

    /// Categories other than "normal".
    pub fn organ_categories(&self) -> Vec<&str> {
        self.categories
            .iter()
            .map(String::as_str)
            .filter(|c| *c != NORMAL_CATEGORY)
            .collect()
    }
}

/// Synonym phrases compiled to token sequences for longest-match-first
/// replacement. Ties between equally long phrases keep declaration order.
pub(crate) struct SynonymTable {
    /// (surface tokens, canonical tokens), sorted by surface length
    /// descending, then declaration index ascending.
    patterns: Vec<(Vec<String>, Vec<String>)>,
}

impl SynonymTable {
    pub(crate) fn new(kg: &KnowledgeGraph) -> Self {
        let mut patterns: Vec<(usize, Vec<String>, Vec<String>)> = kg
            .synonyms
            .iter()
            .enumerate()
            .map(|(idx, (surface, canonical))| {
                let key: Vec<String> = surface.split_whitespace().map(str::to_string).collect();
                let value: Vec<String> =
                    canonical.split_whitespace().map(str::to_string).collect();
                (idx, key, value)
            })
            .filter(|(_, key, _)| !key.is_empty())
            .collect();
        patterns.sort_by(|(ai, ak, _), (bi, bk, _)| bk.len().cmp(&ak.len()).then(ai.cmp(bi)));
        Self {
            patterns: patterns.into_iter().map(|(_, k, v)| (k, v)).collect(),
        }
    }

    /// Single left-to-right pass: at each position replace the longest
    /// matching surface phrase, then continue after the replacement.
    pub(crate) fn apply(&self, tokens: &[String]) -> Vec<String> {
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let hit = self
                .patterns
                .iter()
                .find(|(key, _)| tokens[i..].len() >= key.len() && tokens[i..i + key.len()] == key[..]);
            match hit {
                Some((key, value)) => {
                    out.extend(value.iter().cloned());
                    i += key.len();
                }
                None => {
                    out.push(tokens[i].clone());
                    i += 1;
                }
            }
        }
        out
    }
}

/// Replace synonym phrases in a lowercase token sequence with their
/// canonical forms. Longest match wins; the result is a fixed point.
pub fn canonicalize(kg: &KnowledgeGraph, tokens: &[String]) -> Vec<String> {
    SynonymTable::new(kg).apply(tokens)
}
