//! Report corpora: line-delimited persistence, long-tail statistics, and
//! the disease-free / disease-specific training partition.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::KnowledgeGraph;
use crate::label::{label_reports, DiseasePair, LabeledReport, ReportClass};

/// Dataset split a report belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => f.write_str("train"),
            Split::Validation => f.write_str("validation"),
            Split::Test => f.write_str("test"),
        }
    }
}

/// One diagnostic report. Image references are opaque strings; the toolkit
/// never opens them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub id: String,
    pub text: String,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Vec<String>>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {source}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: duplicate report id {id:?}")]
    DuplicateId {
        path: PathBuf,
        line: usize,
        id: String,
    },
    #[error("failed to serialize corpus: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Load a corpus file: UTF-8, one JSON object per line. Blank lines are
/// tolerated; anything else malformed is reported with its line number.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<ReportRecord>, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ReportRecord =
            serde_json::from_str(line).map_err(|source| CorpusError::MalformedLine {
                path: path.to_path_buf(),
                line: idx + 1,
                source,
            })?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: path.to_path_buf(),
                line: idx + 1,
                id: record.id,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Write a corpus as JSON lines, atomically. `load_corpus(write_corpus(r))`
/// reproduces `r` exactly.
pub fn write_corpus(records: &[ReportRecord], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let text = crate::io::to_jsonl(records)?;
    crate::io::write_atomic(path, text.as_bytes()).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Sentence counts by class: no disease, common disease, uncommon disease.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceClassCounts {
    pub d_free: u64,
    pub d_com: u64,
    pub d_tail: u64,
}

impl SentenceClassCounts {
    pub fn total(&self) -> u64 {
        self.d_free + self.d_com + self.d_tail
    }
}

/// Long-tail statistics over a labeled corpus.
///
/// `disease_counts` counts sentence-level pair incidences: a pair is
/// counted once per sentence whose label contains it, however often the
/// keyword repeats inside the sentence. Shares are fractions of total pair
/// occurrences held by common (count >= threshold) vs tail diseases; both
/// are reported as 0 when there are no occurrences at all.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiseaseStats {
    pub common_threshold: u64,
    #[serde(serialize_with = "crate::label::ser_pair_counts")]
    pub disease_counts: BTreeMap<DiseasePair, u64>,
    pub sentence_class_counts: SentenceClassCounts,
    pub common_share: f64,
    pub tail_share: f64,
}

/// Sentence-level pair incidence counts for already-labeled reports.
pub(crate) fn count_pair_incidences(labeled: &[LabeledReport]) -> BTreeMap<DiseasePair, u64> {
    let mut counts: BTreeMap<DiseasePair, u64> = BTreeMap::new();
    for report in labeled {
        for label in &report.sentence_labels {
            for pair in label.pairs() {
                *counts.entry(pair.clone()).or_insert(0) += 1;
            }
        }
    }
    counts
}

pub(crate) fn stats_from_labeled(
    labeled: &[LabeledReport],
    common_threshold: u64,
) -> DiseaseStats {
    let disease_counts = count_pair_incidences(labeled);
    let mut classes = SentenceClassCounts::default();
    for report in labeled {
        for label in &report.sentence_labels {
            if label.is_normal() {
                classes.d_free += 1;
            } else if label
                .pairs()
                .iter()
                .any(|pair| disease_counts[pair] >= common_threshold)
            {
                classes.d_com += 1;
            } else {
                classes.d_tail += 1;
            }
        }
    }
    let total: u64 = disease_counts.values().sum();
    let common: u64 = disease_counts
        .values()
        .filter(|&&count| count >= common_threshold)
        .sum();
    let (common_share, tail_share) = if total == 0 {
        (0.0, 0.0)
    } else {
        (
            common as f64 / total as f64,
            (total - common) as f64 / total as f64,
        )
    };
    DiseaseStats {
        common_threshold,
        disease_counts,
        sentence_class_counts: classes,
        common_share,
        tail_share,
    }
}

/// Label every report and compute the corpus statistics. A sentence counts
/// as d_com when any of its pairs reaches the threshold corpus-wide, d_tail
/// when it has pairs but none does, and d_free otherwise.
pub fn corpus_stats(
    kg: &KnowledgeGraph,
    records: &[ReportRecord],
    common_threshold: u64,
) -> DiseaseStats {
    let labeled = label_reports(kg, records);
    stats_from_labeled(&labeled, common_threshold)
}

/// Split records into (disease-free, disease-specific) by report class,
/// preserving input order within each output.
pub fn partition_by_class(
    kg: &KnowledgeGraph,
    records: &[ReportRecord],
) -> (Vec<ReportRecord>, Vec<ReportRecord>) {
    let labeled = label_reports(kg, records);
    let mut free = Vec::new();
    let mut specific = Vec::new();
    for report in labeled {
        match report.report_class {
            ReportClass::DiseaseFree => free.push(report.record),
            ReportClass::DiseaseSpecific => specific.push(report.record),
        }
    }
    (free, specific)
}

/// Render the disease histogram as text, bars sorted by descending count
/// (ties by key), for eyeballing the long tail.
pub fn render_histogram(stats: &DiseaseStats) -> String {
    const BAR_WIDTH: u64 = 50;
    let mut rows: Vec<(&DiseasePair, u64)> = stats
        .disease_counts
        .iter()
        .map(|(pair, &count)| (pair, count))
        .collect();
    rows.sort_by(|(ap, ac), (bp, bc)| bc.cmp(ac).then(ap.cmp(bp)));
    let max = rows.first().map(|&(_, c)| c).unwrap_or(0).max(1);
    let key_width = rows
        .iter()
        .map(|(pair, _)| pair.render().chars().count())
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    for (pair, count) in rows {
        let bar_len = ((count * BAR_WIDTH).div_ceil(max)).max(1) as usize;
        out.push_str(&format!(
            "{:<width$}  {} {}\n",
            pair.render(),
            "#".repeat(bar_len),
            count,
            width = key_width
        ));
    }
    out
}
