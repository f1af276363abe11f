//! Rule-based sentence and report labeling.
//!
//! A report is split into sentences; each sentence is lowercased, tokenized,
//! synonym-canonicalized, and matched against the KG trigger phrases. The
//! resulting label is a sorted list of (disease, organ) pairs, or "normal"
//! when nothing fires. Keyword presence is all that matters: negation is
//! deliberately not interpreted.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::ReportRecord;
use crate::kg::{KnowledgeGraph, SynonymTable};

/// A canonical disease keyword qualified by its organ category.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DiseasePair {
    pub disease: String,
    pub organ: String,
}

impl DiseasePair {
    pub fn new(disease: impl Into<String>, organ: impl Into<String>) -> Self {
        Self {
            disease: disease.into(),
            organ: organ.into(),
        }
    }

    /// Display form used in rendered labels, pool keys, and JSON maps.
    pub fn render(&self) -> String {
        format!("{}-{}", self.disease, self.organ)
    }
}

impl fmt::Display for DiseasePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.disease, self.organ)
    }
}

/// Serialize a pair-keyed count map as a JSON object with rendered keys.
pub(crate) fn ser_pair_counts<S: serde::Serializer>(
    counts: &std::collections::BTreeMap<DiseasePair, u64>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = serializer.serialize_map(Some(counts.len()))?;
    for (pair, count) in counts {
        map.serialize_entry(&pair.render(), count)?;
    }
    map.end()
}

/// Serialize a pair set as a sorted JSON array of rendered keys.
pub(crate) fn ser_pair_set<S: serde::Serializer>(
    pairs: &BTreeSet<DiseasePair>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = serializer.serialize_seq(Some(pairs.len()))?;
    for pair in pairs {
        seq.serialize_element(&pair.render())?;
    }
    seq.end()
}

/// Label of one sentence: deduplicated (disease, organ) pairs sorted by
/// disease keyword, then organ. An empty list means "normal".
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentenceLabel {
    pairs: Vec<DiseasePair>,
}

/// Rendering of the normal (empty) label.
pub const NORMAL_LABEL: &str = "normal";

impl SentenceLabel {
    pub fn normal() -> Self {
        Self { pairs: Vec::new() }
    }

    /// Build from arbitrary pairs; sorts and removes duplicates.
    pub fn from_pairs(pairs: impl IntoIterator<Item = DiseasePair>) -> Self {
        let set: BTreeSet<DiseasePair> = pairs.into_iter().collect();
        Self {
            pairs: set.into_iter().collect(),
        }
    }

    pub fn pairs(&self) -> &[DiseasePair] {
        &self.pairs
    }

    pub fn is_normal(&self) -> bool {
        self.pairs.is_empty()
    }

    /// "disease-organ" segments joined with "-", e.g.
    /// "bronchovascular crowding-lung-low volume-lung"; "normal" when empty.
    pub fn render(&self) -> String {
        if self.pairs.is_empty() {
            NORMAL_LABEL.to_string()
        } else {
            self.pairs
                .iter()
                .map(DiseasePair::render)
                .collect::<Vec<_>>()
                .join("-")
        }
    }
}

impl fmt::Display for SentenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Report class derived from the sentence labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportClass {
    DiseaseFree,
    DiseaseSpecific,
}

impl fmt::Display for ReportClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportClass::DiseaseFree => f.write_str("disease-free"),
            ReportClass::DiseaseSpecific => f.write_str("disease-specific"),
        }
    }
}

impl ReportClass {
    pub fn invert(self) -> Self {
        match self {
            ReportClass::DiseaseFree => ReportClass::DiseaseSpecific,
            ReportClass::DiseaseSpecific => ReportClass::DiseaseFree,
        }
    }
}

/// A report together with its per-sentence labels and derived class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledReport {
    pub record: ReportRecord,
    pub sentences: Vec<String>,
    pub sentence_labels: Vec<SentenceLabel>,
    pub report_class: ReportClass,
    pub disease_set: BTreeSet<DiseasePair>,
}

impl LabeledReport {
    pub fn is_disease_free(&self) -> bool {
        self.report_class == ReportClass::DiseaseFree
    }
}

/// Split report text into trimmed sentences on '.', '!', '?', ';'.
/// Empty segments are dropped.
pub fn split_sentences(text: &str) -> Vec<String> {
    split_sentence_spans(text)
        .into_iter()
        .map(|(_, sentence)| sentence.to_string())
        .collect()
}

/// Sentence splitting that keeps the byte range of each trimmed segment in
/// the original text, so augmentation can splice replacements in place.
pub(crate) fn split_sentence_spans(text: &str) -> Vec<(Range<usize>, &str)> {
    let mut spans = Vec::new();
    let mut segment_start = 0;
    for (idx, ch) in text.char_indices() {
        if matches!(ch, '.' | '!' | '?' | ';') {
            push_trimmed(text, segment_start..idx, &mut spans);
            segment_start = idx + ch.len_utf8();
        }
    }
    push_trimmed(text, segment_start..text.len(), &mut spans);
    spans
}

fn push_trimmed<'a>(text: &'a str, range: Range<usize>, spans: &mut Vec<(Range<usize>, &'a str)>) {
    let raw = &text[range.clone()];
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return;
    }
    let offset = raw.len() - raw.trim_start().len();
    let start = range.start + offset;
    spans.push((start..start + trimmed.len(), trimmed));
}

/// Lowercase and split on whitespace and punctuation, keeping intra-word
/// hyphens so forms like "broncho-vascular" survive for synonym matching.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in lower.chars() {
        if ch.is_alphanumeric() || ch == '-' {
            current.push(ch);
        } else if !current.is_empty() {
            push_token(&mut tokens, std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        push_token(&mut tokens, current);
    }
    tokens
}

fn push_token(tokens: &mut Vec<String>, raw: String) {
    let trimmed = raw.trim_matches('-');
    if !trimmed.is_empty() {
        tokens.push(trimmed.to_string());
    }
}

/// Trigger phrase occurrence candidate inside a token sequence.
struct Occurrence {
    start: usize,
    len: usize,
    phrase_idx: usize,
}

struct Phrase {
    tokens: Vec<String>,
    /// Indices into the KG entry list that declare this trigger.
    owners: Vec<usize>,
}

/// A knowledge graph compiled for repeated labeling: synonym table plus a
/// first-token index over trigger phrases. Immutable and Sync, so one
/// instance serves any number of worker threads.
pub struct Labeler<'a> {
    kg: &'a KnowledgeGraph,
    synonyms: SynonymTable,
    phrases: Vec<Phrase>,
    by_first_token: HashMap<String, Vec<usize>>,
    cue_tokens: Vec<Vec<Vec<String>>>,
}

impl<'a> Labeler<'a> {
    pub fn new(kg: &'a KnowledgeGraph) -> Self {
        let mut phrase_ids: HashMap<Vec<String>, usize> = HashMap::new();
        let mut phrases: Vec<Phrase> = Vec::new();
        for (entry_idx, entry) in kg.entries.iter().enumerate() {
            for trigger in &entry.triggers {
                let tokens: Vec<String> =
                    trigger.split_whitespace().map(str::to_string).collect();
                if tokens.is_empty() {
                    continue;
                }
                let idx = *phrase_ids.entry(tokens.clone()).or_insert_with(|| {
                    phrases.push(Phrase {
                        tokens,
                        owners: Vec::new(),
                    });
                    phrases.len() - 1
                });
                if !phrases[idx].owners.contains(&entry_idx) {
                    phrases[idx].owners.push(entry_idx);
                }
            }
        }
        let mut by_first_token: HashMap<String, Vec<usize>> = HashMap::new();
        for (idx, phrase) in phrases.iter().enumerate() {
            by_first_token
                .entry(phrase.tokens[0].clone())
                .or_default()
                .push(idx);
        }
        let cue_tokens = kg
            .entries
            .iter()
            .map(|entry| {
                entry
                    .organ_cues
                    .iter()
                    .map(|cue| cue.split_whitespace().map(str::to_string).collect())
                    .filter(|cue: &Vec<String>| !cue.is_empty())
                    .collect()
            })
            .collect();
        Self {
            kg,
            synonyms: SynonymTable::new(kg),
            phrases,
            by_first_token,
            cue_tokens,
        }
    }

    pub fn kg(&self) -> &KnowledgeGraph {
        self.kg
    }

    /// Tokenize and canonicalize raw sentence text.
    pub fn canonical_tokens(&self, sentence: &str) -> Vec<String> {
        self.synonyms.apply(&tokenize(sentence))
    }

    /// Label one sentence.
    ///
    /// Matching is phrase containment over the canonical tokens. Candidate
    /// occurrences are processed longest-first; a fired longer trigger
    /// suppresses any strictly contained shorter one. A trigger owned by a
    /// single entry fires it directly; a shared (generic) trigger fires the
    /// sharing entries whose organ cues occur in the sentence, falling back
    /// to the default_organ entry when no cue is present.
    pub fn label_sentence(&self, sentence: &str) -> SentenceLabel {
        let tokens = self.canonical_tokens(sentence);
        let mut occurrences = Vec::new();
        for start in 0..tokens.len() {
            if let Some(candidates) = self.by_first_token.get(&tokens[start]) {
                for &phrase_idx in candidates {
                    let phrase = &self.phrases[phrase_idx];
                    let len = phrase.tokens.len();
                    if start + len <= tokens.len()
                        && tokens[start..start + len] == phrase.tokens[..]
                    {
                        occurrences.push(Occurrence {
                            start,
                            len,
                            phrase_idx,
                        });
                    }
                }
            }
        }
        occurrences.sort_by(|a, b| {
            b.len
                .cmp(&a.len)
                .then(a.start.cmp(&b.start))
                .then(a.phrase_idx.cmp(&b.phrase_idx))
        });

        let mut fired_spans: Vec<(usize, usize)> = Vec::new();
        let mut pairs: BTreeSet<DiseasePair> = BTreeSet::new();
        for occ in occurrences {
            let contained = fired_spans.iter().any(|&(start, len)| {
                len > occ.len && start <= occ.start && occ.start + occ.len <= start + len
            });
            if contained {
                continue;
            }
            let owners = &self.phrases[occ.phrase_idx].owners;
            let fired: Vec<usize> = if owners.len() == 1 {
                owners.clone()
            } else {
                let cued: Vec<usize> = owners
                    .iter()
                    .copied()
                    .filter(|&entry_idx| self.cue_present(entry_idx, &tokens))
                    .collect();
                if cued.is_empty() {
                    owners
                        .iter()
                        .copied()
                        .filter(|&entry_idx| self.kg.entries[entry_idx].default_organ)
                        .collect()
                } else {
                    cued
                }
            };
            if fired.is_empty() {
                continue;
            }
            fired_spans.push((occ.start, occ.len));
            for entry_idx in fired {
                pairs.insert(self.kg.entries[entry_idx].pair());
            }
        }
        SentenceLabel::from_pairs(pairs)
    }

    fn cue_present(&self, entry_idx: usize, tokens: &[String]) -> bool {
        self.cue_tokens[entry_idx].iter().any(|cue| {
            tokens
                .windows(cue.len())
                .any(|window| window == cue.as_slice())
        })
    }

    /// Split, label every sentence, and derive the report class.
    pub fn label_report(&self, record: &ReportRecord) -> LabeledReport {
        let sentences = split_sentences(&record.text);
        let sentence_labels: Vec<SentenceLabel> = sentences
            .iter()
            .map(|sentence| self.label_sentence(sentence))
            .collect();
        let disease_set: BTreeSet<DiseasePair> = sentence_labels
            .iter()
            .flat_map(|label| label.pairs().iter().cloned())
            .collect();
        let report_class = if disease_set.is_empty() {
            ReportClass::DiseaseFree
        } else {
            ReportClass::DiseaseSpecific
        };
        LabeledReport {
            record: record.clone(),
            sentences,
            sentence_labels,
            report_class,
            disease_set,
        }
    }
}

/// Label a single sentence against a graph. Compiles the graph per call;
/// use [`Labeler`] for corpus-scale work.
pub fn label_sentence(kg: &KnowledgeGraph, sentence: &str) -> SentenceLabel {
    Labeler::new(kg).label_sentence(sentence)
}

/// Label a single report against a graph.
pub fn label_report(kg: &KnowledgeGraph, record: &ReportRecord) -> LabeledReport {
    Labeler::new(kg).label_report(record)
}

/// Label a corpus with one compiled labeler, fanning out across records.
/// Output order always matches input order regardless of scheduling.
pub fn label_reports(kg: &KnowledgeGraph, records: &[ReportRecord]) -> Vec<LabeledReport> {
    let labeler = Labeler::new(kg);
    crate::par::map_slice(records, |record| labeler.label_report(record))
}
