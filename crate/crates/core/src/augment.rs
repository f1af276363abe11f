//! Disease-specific augmentation: build the key-value sentence pool, work
//! through scarce labels first, and emit substituted report variants while
//! refreshing occurrence statistics after every round.
//!
//! Only training-split records serve as substitution sources, and synthetic
//! reports are never re-augmented; validation and test records pass through
//! untouched.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::ops::Range;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{count_pair_incidences, ReportRecord, Split};
use crate::kg::KnowledgeGraph;
use crate::label::{
    split_sentence_spans, DiseasePair, Labeler, SentenceLabel,
};

/// Key-value pool of disease sentences: rendered sentence label -> unique
/// sentence formats in first-appearance order. Formats are deduplicated
/// after lowercasing and whitespace normalization.
#[derive(Debug, Clone, Default)]
pub struct SentencePool {
    buckets: IndexMap<String, PoolBucket>,
}

#[derive(Debug, Clone)]
struct PoolBucket {
    formats: Vec<String>,
    normalized: HashSet<String>,
    pairs: Vec<DiseasePair>,
}

impl SentencePool {
    pub fn len(&self) -> usize {
        self.buckets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.buckets.keys().map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.buckets.contains_key(key)
    }

    /// Unique sentence formats stored under a label.
    pub fn formats(&self, key: &str) -> Option<&[String]> {
        self.buckets.get(key).map(|b| b.formats.as_slice())
    }

    /// Number of unique formats under a label; 0 for unknown keys.
    pub fn label_count(&self, key: &str) -> usize {
        self.buckets.get(key).map_or(0, |b| b.formats.len())
    }

    /// The (disease, organ) pairs behind a bucket key.
    pub fn pairs(&self, key: &str) -> Option<&[DiseasePair]> {
        self.buckets.get(key).map(|b| b.pairs.as_slice())
    }

    fn insert(&mut self, label: &SentenceLabel, sentence: &str) {
        let bucket = self
            .buckets
            .entry(label.render())
            .or_insert_with(|| PoolBucket {
                formats: Vec::new(),
                normalized: HashSet::new(),
                pairs: label.pairs().to_vec(),
            });
        if bucket.normalized.insert(normalize_format(sentence)) {
            bucket.formats.push(sentence.to_string());
        }
    }
}

/// Format identity: lowercase with collapsed whitespace.
pub(crate) fn normalize_format(sentence: &str) -> String {
    sentence
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// A source report with its sentence spans and labels, computed once.
struct SourceReport {
    record: ReportRecord,
    spans: Vec<Range<usize>>,
    sentences: Vec<String>,
    labels: Vec<SentenceLabel>,
    rendered: Vec<String>,
}

fn prepare_sources(labeler: &Labeler<'_>, records: &[&ReportRecord]) -> Vec<SourceReport> {
    crate::par::map_slice(records, |record| {
        let spans: Vec<(Range<usize>, &str)> = split_sentence_spans(&record.text);
        let sentences: Vec<String> = spans.iter().map(|(_, s)| s.to_string()).collect();
        let labels: Vec<SentenceLabel> = sentences
            .iter()
            .map(|s| labeler.label_sentence(s))
            .collect();
        let rendered = labels.iter().map(SentenceLabel::render).collect();
        SourceReport {
            record: (*record).clone(),
            spans: spans.into_iter().map(|(range, _)| range).collect(),
            sentences,
            labels,
            rendered,
        }
    })
}

fn pool_from_sources(sources: &[SourceReport]) -> SentencePool {
    let mut pool = SentencePool::default();
    for source in sources {
        for (label, sentence) in source.labels.iter().zip(&source.sentences) {
            if !label.is_normal() {
                pool.insert(label, sentence);
            }
        }
    }
    pool
}

/// Build the sentence pool over a corpus. Every non-normal labeled sentence
/// lands in the bucket keyed by its rendered label.
pub fn build_sentence_pool(kg: &KnowledgeGraph, records: &[ReportRecord]) -> SentencePool {
    let labeler = Labeler::new(kg);
    let refs: Vec<&ReportRecord> = records.iter().collect();
    let sources = prepare_sources(&labeler, &refs);
    pool_from_sources(&sources)
}

/// Bucket keys whose label count lies in `[min_count, max_count]`, ordered
/// by ascending label count, ties lexicographic by key.
pub fn eligible_buckets(pool: &SentencePool, min_count: usize, max_count: usize) -> Vec<String> {
    let mut keys: Vec<&str> = pool
        .keys()
        .filter(|key| {
            let count = pool.label_count(key);
            count >= min_count && count <= max_count
        })
        .collect();
    keys.sort_by(|a, b| {
        pool.label_count(a)
            .cmp(&pool.label_count(b))
            .then(a.cmp(b))
    });
    keys.into_iter().map(str::to_string).collect()
}

/// One synthetic variant before id assignment: which source it came from
/// and the substituted text.
struct Variant {
    source_idx: usize,
    text: String,
}

fn emit_variants(sources: &[SourceReport], pool: &SentencePool, bucket_key: &str) -> Vec<Variant> {
    let Some(formats) = pool.formats(bucket_key) else {
        return Vec::new();
    };
    if formats.len() < 2 {
        return Vec::new();
    }
    let per_source: Vec<Vec<String>> = crate::par::map_slice(sources, |source| {
        let mut texts = Vec::new();
        for (idx, rendered) in source.rendered.iter().enumerate() {
            if rendered != bucket_key {
                continue;
            }
            let own = normalize_format(&source.sentences[idx]);
            let span = &source.spans[idx];
            for alternate in formats {
                if normalize_format(alternate) == own {
                    continue;
                }
                let mut text = String::with_capacity(
                    source.record.text.len() + alternate.len(),
                );
                text.push_str(&source.record.text[..span.start]);
                text.push_str(alternate);
                text.push_str(&source.record.text[span.end..]);
                texts.push(text);
            }
        }
        texts
    });
    per_source
        .into_iter()
        .enumerate()
        .flat_map(|(source_idx, texts)| {
            texts.into_iter().map(move |text| Variant { source_idx, text })
        })
        .collect()
}

fn assign_ids(
    variants: Vec<Variant>,
    sources: &[SourceReport],
    counters: &mut HashMap<String, u64>,
) -> Vec<ReportRecord> {
    variants
        .into_iter()
        .map(|variant| {
            let source = &sources[variant.source_idx];
            let seq = counters.entry(source.record.id.clone()).or_insert(0);
            let id = format!("{}#aug{}", source.record.id, seq);
            *seq += 1;
            ReportRecord {
                id,
                text: variant.text,
                split: Split::Train,
                images: source.record.images.clone(),
            }
        })
        .collect()
}

/// Emit every substitution variant for one bucket: for each sentence
/// occurrence labeled `bucket_key`, one synthetic report per alternate
/// format, all other text byte-for-byte intact. A bucket with fewer than
/// two formats yields nothing.
pub fn augment_round(
    kg: &KnowledgeGraph,
    records: &[ReportRecord],
    pool: &SentencePool,
    bucket_key: &str,
) -> Vec<ReportRecord> {
    let labeler = Labeler::new(kg);
    let refs: Vec<&ReportRecord> = records.iter().collect();
    let sources = prepare_sources(&labeler, &refs);
    let variants = emit_variants(&sources, pool, bucket_key);
    assign_ids(variants, &sources, &mut HashMap::new())
}

/// Augmentation parameters. The label-count interval defaults to the
/// inclusive [5, 100]; `round_cap` enables seeded down-sampling of a
/// round's output for very large buckets.
#[derive(Debug, Clone, Serialize)]
pub struct AugmentConfig {
    pub min_count: usize,
    pub max_count: usize,
    pub max_rounds: Option<usize>,
    pub round_cap: Option<usize>,
    pub seed: Option<u64>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            min_count: 5,
            max_count: 100,
            max_rounds: None,
            round_cap: None,
            seed: None,
        }
    }
}

/// What one round did: the bucket it processed, how many sentence
/// occurrences it found (n), the bucket's format count (k), and how many
/// synthetic reports it emitted (n x (k - 1), unless capped).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundReport {
    pub bucket_key: String,
    pub occurrences: u64,
    pub formats: u64,
    pub emitted: u64,
}

/// Summary of a full augmentation run. Occurrence counts cover the
/// training split plus synthetics.
#[derive(Debug, Clone, Serialize)]
pub struct AugmentationReport {
    pub rounds: Vec<RoundReport>,
    #[serde(serialize_with = "crate::label::ser_pair_set")]
    pub diseases_covered: BTreeSet<DiseasePair>,
    #[serde(serialize_with = "crate::label::ser_pair_counts")]
    pub counts_before: BTreeMap<DiseasePair, u64>,
    #[serde(serialize_with = "crate::label::ser_pair_counts")]
    pub counts_after: BTreeMap<DiseasePair, u64>,
}

/// Run the full augmentation loop.
///
/// Each round selects, among eligible buckets not yet processed and not
/// fully covered by earlier rounds, the one with the smallest priority key
/// (minimum current occurrence count over its constituent diseases, then
/// label count, then key). Its variants join the working corpus, occurrence
/// counts are refreshed including the synthetics, and all of its diseases
/// are marked augmented. The loop stops when no candidate bucket remains or
/// `max_rounds` is reached.
pub fn run_augmentation(
    kg: &KnowledgeGraph,
    records: &[ReportRecord],
    config: &AugmentConfig,
) -> (Vec<ReportRecord>, AugmentationReport) {
    let labeler = Labeler::new(kg);
    let train: Vec<&ReportRecord> = records
        .iter()
        .filter(|r| r.split == Split::Train)
        .collect();
    let sources = prepare_sources(&labeler, &train);
    let pool = pool_from_sources(&sources);
    let eligible = eligible_buckets(&pool, config.min_count, config.max_count);

    let mut counts: BTreeMap<DiseasePair, u64> = BTreeMap::new();
    for source in &sources {
        for label in &source.labels {
            for pair in label.pairs() {
                *counts.entry(pair.clone()).or_insert(0) += 1;
            }
        }
    }
    let counts_before = counts.clone();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(0));
    let mut counters: HashMap<String, u64> = HashMap::new();
    let mut augmented: BTreeSet<DiseasePair> = BTreeSet::new();
    let mut processed: HashSet<String> = HashSet::new();
    let mut rounds: Vec<RoundReport> = Vec::new();
    let mut synthetics: Vec<ReportRecord> = Vec::new();

    loop {
        if let Some(max_rounds) = config.max_rounds {
            if rounds.len() >= max_rounds {
                break;
            }
        }
        let candidate = eligible
            .iter()
            .filter(|key| !processed.contains(*key))
            .filter(|key| {
                pool.pairs(key)
                    .is_some_and(|pairs| pairs.iter().any(|p| !augmented.contains(p)))
            })
            .min_by_key(|key| {
                let min_count = pool
                    .pairs(key)
                    .unwrap_or(&[])
                    .iter()
                    .map(|pair| counts.get(pair).copied().unwrap_or(0))
                    .min()
                    .unwrap_or(0);
                (min_count, pool.label_count(key), (*key).clone())
            });
        let Some(bucket_key) = candidate.cloned() else {
            break;
        };

        let mut variants = emit_variants(&sources, &pool, &bucket_key);
        if let Some(cap) = config.round_cap {
            if variants.len() > cap {
                let mut picked = rand::seq::index::sample(&mut rng, variants.len(), cap)
                    .into_vec();
                picked.sort_unstable();
                let mut keep = picked.into_iter().peekable();
                let mut idx = 0;
                variants.retain(|_| {
                    let hit = keep.peek() == Some(&idx);
                    if hit {
                        keep.next();
                    }
                    idx += 1;
                    hit
                });
            }
        }
        let emitted = assign_ids(variants, &sources, &mut counters);

        let occurrences = sources
            .iter()
            .flat_map(|s| s.rendered.iter())
            .filter(|rendered| **rendered == bucket_key)
            .count() as u64;

        // Refresh statistics: count the new synthetics through the labeler,
        // the same source of truth as the original counts.
        let new_counts = count_pair_incidences(&crate::par::map_slice(&emitted, |record| {
            labeler.label_report(record)
        }));
        for (pair, count) in new_counts {
            *counts.entry(pair).or_insert(0) += count;
        }

        rounds.push(RoundReport {
            bucket_key: bucket_key.clone(),
            occurrences,
            formats: pool.label_count(&bucket_key) as u64,
            emitted: emitted.len() as u64,
        });
        if let Some(pairs) = pool.pairs(&bucket_key) {
            augmented.extend(pairs.iter().cloned());
        }
        processed.insert(bucket_key);
        synthetics.extend(emitted);
    }

    let mut corpus = records.to_vec();
    corpus.extend(synthetics);
    let report = AugmentationReport {
        rounds,
        diseases_covered: augmented,
        counts_before,
        counts_after: counts,
    };
    (corpus, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::seed_kg;
    use crate::label::label_reports;

    fn record(id: &str, text: &str) -> ReportRecord {
        ReportRecord {
            id: id.to_string(),
            text: text.to_string(),
            split: Split::Train,
            images: None,
        }
    }

    /// Five distinct formats that all label "opacity-lung" under the seed KG.
    pub(crate) const OPACITY_FORMATS: [&str; 5] = [
        "Patchy opacity in the lung",
        "The lung is opacity",
        "This patient has lung opacity",
        "Hazy opacity in both lungs",
        "There is opacity in the right lung",
    ];

    #[test]
    fn pool_groups_formats_under_one_key() {
        let kg = seed_kg();
        let records = vec![
            record("r1", "The lung is opacity. Heart size normal."),
            record("r2", "This patient has lung opacity."),
        ];
        let pool = build_sentence_pool(&kg, &records);
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.label_count("opacity-lung"), 2);
        assert_eq!(
            pool.formats("opacity-lung").unwrap(),
            &["The lung is opacity", "This patient has lung opacity"]
        );
    }

    #[test]
    fn pool_of_all_normal_corpus_is_empty() {
        let kg = seed_kg();
        let records = vec![record("r1", "The lungs are clear."), record("r2", "")];
        let pool = build_sentence_pool(&kg, &records);
        assert!(pool.is_empty());
    }

    #[test]
    fn pool_collapses_whitespace_and_case_duplicates() {
        let kg = seed_kg();
        let records = vec![
            record("r1", "The lung is opacity."),
            record("r2", "THE LUNG   IS OPACITY."),
        ];
        let pool = build_sentence_pool(&kg, &records);
        assert_eq!(pool.label_count("opacity-lung"), 1);
    }

    #[test]
    fn eligibility_interval_is_inclusive() {
        let kg = seed_kg();
        // Build buckets with format counts 3, 5, 100, 101 out of synthetic
        // single-sentence reports on distinct diseases.
        let mut records = Vec::new();
        let mut add_bucket = |prefix: &str, base: &str, n: usize| {
            for i in 0..n {
                records.push(record(
                    &format!("{prefix}{i}"),
                    &format!("{base} variant {}", variant_word(i)),
                ));
            }
        };
        add_bucket("a", "Pneumothorax seen", 3);
        add_bucket("b", "Cardiomegaly seen", 5);
        add_bucket("c", "Pleural effusion seen", 100);
        add_bucket("d", "Pulmonary edema seen", 101);
        let pool = build_sentence_pool(&kg, &records);
        assert_eq!(pool.label_count("pneumothorax-pleural"), 3);
        assert_eq!(pool.label_count("cardiomegaly-heart"), 5);
        assert_eq!(pool.label_count("effusion-pleural"), 100);
        assert_eq!(pool.label_count("edema-lung"), 101);
        assert_eq!(
            eligible_buckets(&pool, 5, 100),
            vec!["cardiomegaly-heart".to_string(), "effusion-pleural".to_string()]
        );
        assert!(eligible_buckets(&SentencePool::default(), 5, 100).is_empty());
    }

    #[test]
    fn eligible_order_is_count_then_key() {
        let kg = seed_kg();
        let mut records = Vec::new();
        for i in 0..7 {
            records.push(record(
                &format!("p{i}"),
                &format!("Pneumothorax variant {}", variant_word(i)),
            ));
        }
        for i in 0..7 {
            records.push(record(
                &format!("c{i}"),
                &format!("Cardiomegaly variant {}", variant_word(i)),
            ));
        }
        for i in 0..6 {
            records.push(record(
                &format!("e{i}"),
                &format!("Pulmonary edema variant {}", variant_word(i)),
            ));
        }
        let pool = build_sentence_pool(&kg, &records);
        assert_eq!(
            eligible_buckets(&pool, 2, 100),
            vec![
                "edema-lung".to_string(),
                "cardiomegaly-heart".to_string(),
                "pneumothorax-pleural".to_string(),
            ]
        );
    }

    /// Distinct filler words so generated formats stay unique after
    /// whitespace/case normalization.
    pub(crate) fn variant_word(i: usize) -> String {
        const WORDS: [&str; 10] = [
            "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa",
        ];
        let mut i = i;
        let mut word = String::new();
        loop {
            word.push_str(WORDS[i % WORDS.len()]);
            i /= WORDS.len();
            if i == 0 {
                break;
            }
            word.push(' ');
        }
        word
    }

    #[test]
    fn five_formats_each_in_one_report_emit_twenty() {
        let kg = seed_kg();
        let records: Vec<ReportRecord> = OPACITY_FORMATS
            .iter()
            .enumerate()
            .map(|(i, format)| record(&format!("r{i}"), &format!("{format}. Heart size normal.")))
            .collect();
        let pool = build_sentence_pool(&kg, &records);
        assert_eq!(pool.label_count("opacity-lung"), 5);
        let synthetics = augment_round(&kg, &records, &pool, "opacity-lung");
        assert_eq!(synthetics.len(), 20);
    }

    #[test]
    fn single_format_bucket_emits_nothing() {
        let kg = seed_kg();
        let records = vec![record("r1", "The lung is opacity.")];
        let pool = build_sentence_pool(&kg, &records);
        let synthetics = augment_round(&kg, &records, &pool, "opacity-lung");
        assert!(synthetics.is_empty());
    }

    #[test]
    fn variants_differ_from_source_in_exactly_one_sentence() {
        let kg = seed_kg();
        let records = vec![
            record("r1", "The lung is opacity. Heart size normal."),
            record("r2", "No change. This patient has lung opacity. Stable."),
            record("r3", "Patchy opacity in the lung."),
        ];
        let pool = build_sentence_pool(&kg, &records);
        assert_eq!(pool.label_count("opacity-lung"), 3);
        let synthetics = augment_round(&kg, &records[..2], &pool, "opacity-lung");
        assert_eq!(synthetics.len(), 4);

        // Exhaustive enumeration oracle: build the expected variant texts
        // by direct string surgery, independent of the implementation.
        let mut expected = Vec::new();
        for (source_text, own) in [
            ("The lung is opacity. Heart size normal.", "The lung is opacity"),
            (
                "No change. This patient has lung opacity. Stable.",
                "This patient has lung opacity",
            ),
        ] {
            for alternate in pool.formats("opacity-lung").unwrap() {
                if alternate == own {
                    continue;
                }
                expected.push(source_text.replace(own, alternate));
            }
        }
        let produced: Vec<&str> = synthetics.iter().map(|r| r.text.as_str()).collect();
        assert_eq!(produced, expected.iter().map(String::as_str).collect::<Vec<_>>());

        for synthetic in &synthetics {
            let source = records
                .iter()
                .find(|r| synthetic.id.starts_with(&format!("{}#aug", r.id)))
                .unwrap();
            let a = crate::label::split_sentences(&source.text);
            let b = crate::label::split_sentences(&synthetic.text);
            assert_eq!(a.len(), b.len());
            let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count();
            assert_eq!(differing, 1, "{} vs {}", source.text, synthetic.text);
        }
    }

    #[test]
    fn synthetic_ids_extend_source_ids() {
        let kg = seed_kg();
        let records: Vec<ReportRecord> = OPACITY_FORMATS
            .iter()
            .enumerate()
            .map(|(i, format)| record(&format!("r{i}"), &format!("{format}.")))
            .collect();
        let pool = build_sentence_pool(&kg, &records);
        let synthetics = augment_round(&kg, &records, &pool, "opacity-lung");
        assert_eq!(synthetics[0].id, "r0#aug0");
        assert_eq!(synthetics[3].id, "r0#aug3");
        assert_eq!(synthetics[4].id, "r1#aug0");
        let ids: HashSet<&str> = synthetics.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids.len(), synthetics.len());
    }

    #[test]
    fn run_prefers_bucket_with_least_frequent_disease() {
        let kg = seed_kg();
        let mut records = Vec::new();
        // Disease A: 5 occurrences, 5 formats. Disease B: 50 occurrences,
        // 6 formats. A's bucket must be processed first.
        for i in 0..5 {
            records.push(record(
                &format!("a{i}"),
                &format!("Pneumothorax variant {}.", variant_word(i)),
            ));
        }
        for i in 0..50 {
            records.push(record(
                &format!("b{i}"),
                &format!("Cardiomegaly variant {}.", variant_word(i % 6)),
            ));
        }
        let (_, report) = run_augmentation(&kg, &records, &AugmentConfig::default());
        assert_eq!(report.rounds.len(), 2);
        assert_eq!(report.rounds[0].bucket_key, "pneumothorax-pleural");
        assert_eq!(report.rounds[1].bucket_key, "cardiomegaly-heart");
    }

    #[test]
    fn run_without_eligible_buckets_is_identity() {
        let kg = seed_kg();
        let records = vec![
            record("r1", "The lungs are clear."),
            record("r2", "Pneumothorax."),
        ];
        let (corpus, report) = run_augmentation(&kg, &records, &AugmentConfig::default());
        assert_eq!(corpus, records);
        assert!(report.rounds.is_empty());
        assert!(report.diseases_covered.is_empty());
        assert_eq!(report.counts_before, report.counts_after);
    }

    #[test]
    fn run_ignores_validation_and_test_records() {
        let kg = seed_kg();
        let mut records: Vec<ReportRecord> = OPACITY_FORMATS
            .iter()
            .enumerate()
            .map(|(i, format)| record(&format!("r{i}"), &format!("{format}.")))
            .collect();
        records[4].split = Split::Test;
        let (corpus, report) = run_augmentation(&kg, &records, &AugmentConfig::default());
        // Only 4 formats remain in the training pool: below min_count 5.
        assert_eq!(corpus, records);
        assert!(report.rounds.is_empty());

        let mut config = AugmentConfig::default();
        config.min_count = 2;
        let (corpus, report) = run_augmentation(&kg, &records, &config);
        assert_eq!(report.rounds[0].formats, 4);
        assert_eq!(report.rounds[0].emitted, 4 * 3);
        assert!(corpus.iter().all(|r| !r.id.starts_with("r4#")));
        assert!(corpus
            .iter()
            .filter(|r| r.id.contains("#aug"))
            .all(|r| r.split == Split::Train));
    }

    #[test]
    fn round_cap_samples_deterministically() {
        let kg = seed_kg();
        let records: Vec<ReportRecord> = OPACITY_FORMATS
            .iter()
            .enumerate()
            .map(|(i, format)| record(&format!("r{i}"), &format!("{format}.")))
            .collect();
        let config = AugmentConfig {
            round_cap: Some(7),
            seed: Some(11),
            ..AugmentConfig::default()
        };
        let (corpus_a, report_a) = run_augmentation(&kg, &records, &config);
        let (corpus_b, _) = run_augmentation(&kg, &records, &config);
        assert_eq!(corpus_a, corpus_b);
        assert_eq!(report_a.rounds[0].emitted, 7);
        assert_eq!(corpus_a.len(), records.len() + 7);
    }

    #[test]
    fn run_is_deterministic() {
        let kg = seed_kg();
        let mut records = Vec::new();
        for i in 0..8 {
            records.push(record(
                &format!("p{i}"),
                &format!(
                    "Pleural effusion variant {}. The lungs are clear.",
                    variant_word(i % 5)
                ),
            ));
        }
        for i in 0..5 {
            records.push(record(
                &format!("x{i}"),
                &format!("Pneumothorax variant {}.", variant_word(i)),
            ));
        }
        let config = AugmentConfig {
            min_count: 2,
            ..AugmentConfig::default()
        };
        let (corpus_a, report_a) = run_augmentation(&kg, &records, &config);
        let (corpus_b, report_b) = run_augmentation(&kg, &records, &config);
        assert_eq!(corpus_a, corpus_b);
        assert_eq!(
            serde_json::to_string(&report_a).unwrap(),
            serde_json::to_string(&report_b).unwrap()
        );
    }

    #[test]
    fn synthetics_preserve_sentence_labels() {
        let kg = seed_kg();
        let mut records = Vec::new();
        for i in 0..5 {
            records.push(record(
                &format!("r{i}"),
                &format!(
                    "Cardiomegaly variant {}. Small pleural effusion.",
                    variant_word(i)
                ),
            ));
        }
        let config = AugmentConfig {
            min_count: 2,
            ..AugmentConfig::default()
        };
        let (corpus, _) = run_augmentation(&kg, &records, &config);
        let labeled = label_reports(&kg, &corpus);
        for report in labeled.iter().filter(|r| r.record.id.contains("#aug")) {
            let source_id = report.record.id.split('#').next().unwrap();
            let source = labeled
                .iter()
                .find(|r| r.record.id == source_id)
                .expect("source present");
            let mut a: Vec<String> =
                report.sentence_labels.iter().map(|l| l.render()).collect();
            let mut b: Vec<String> =
                source.sentence_labels.iter().map(|l| l.render()).collect();
            a.sort();
            b.sort();
            assert_eq!(a, b, "synthetic {}", report.record.id);
        }
    }

    #[test]
    fn max_rounds_stops_the_loop() {
        let kg = seed_kg();
        let mut records = Vec::new();
        for i in 0..5 {
            records.push(record(
                &format!("p{i}"),
                &format!("Pneumothorax variant {}.", variant_word(i)),
            ));
        }
        for i in 0..5 {
            records.push(record(
                &format!("c{i}"),
                &format!("Cardiomegaly variant {}.", variant_word(i)),
            ));
        }
        let config = AugmentConfig {
            max_rounds: Some(1),
            ..AugmentConfig::default()
        };
        let (_, report) = run_augmentation(&kg, &records, &config);
        assert_eq!(report.rounds.len(), 1);
    }
}
