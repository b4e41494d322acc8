//! Job-posting ingestion, model-input composition, corpus statistics, and
//! stratified train/test splitting.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "GRAD")]
    Grad,
    #[serde(rename = "NON_GRAD")]
    NonGrad,
    #[serde(rename = "UNLABELED")]
    Unlabeled,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Grad => "GRAD",
            Label::NonGrad => "NON_GRAD",
            Label::Unlabeled => "UNLABELED",
        }
    }

    /// Strict parse: only the exact strings "GRAD" and "NON_GRAD" are
    /// accepted at ingestion; anything else is an error rather than a guess.
    fn parse_strict(s: &str) -> Option<Label> {
        match s {
            "GRAD" => Some(Label::Grad),
            "NON_GRAD" => Some(Label::NonGrad),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One labeled job record. `title` and `description` are non-empty for
/// usable records; ingestion rejects empty ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobPosting {
    pub id: String,
    pub title: String,
    pub description: String,
    pub label: Label,
}

impl JobPosting {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        description: impl Into<String>,
        label: Label,
    ) -> Self {
        JobPosting { id: id.into(), title: title.into(), description: description.into(), label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("row {row}: missing field `{field}`")]
    MissingField { row: usize, field: String },
    #[error("row {row}: duplicate id `{id}`")]
    DuplicateId { row: usize, id: String },
    #[error("row {row}: unknown label `{label}` (expected GRAD or NON_GRAD)")]
    UnknownLabel { row: usize, label: String },
    #[error("dataset is empty")]
    Empty,
    #[error("cannot stratify: label {label} has {count} example(s), need at least 2")]
    TooSmallToStratify { label: Label, count: usize },
    #[error("train fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("cannot split: label {0} is absent from the dataset")]
    MissingLabel(Label),
    #[error("cannot split: record `{0}` is unlabeled")]
    UnlabeledRecord(String),
}

#[derive(Deserialize)]
struct JsonlRow {
    id: Option<String>,
    title: Option<String>,
    description: Option<String>,
    label: Option<String>,
}

/// Reads a dataset file into postings, preserving file order. Every
/// malformed row aborts ingestion with its row number.
pub fn ingest(path: &Path, format: FileFormat) -> Result<Vec<JobPosting>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    match format {
        FileFormat::Jsonl => ingest_jsonl(file),
        FileFormat::Csv => ingest_csv(file),
    }
}

fn validate_row(
    row: usize,
    id: Option<String>,
    title: Option<String>,
    description: Option<String>,
    label: Option<String>,
    seen: &mut HashSet<String>,
) -> Result<JobPosting, DatasetError> {
    let field_err = |field: &str| DatasetError::MissingField { row, field: field.to_string() };
    let id = id.filter(|s| !s.is_empty()).ok_or_else(|| field_err("id"))?;
    let title = title.filter(|s| !s.is_empty()).ok_or_else(|| field_err("title"))?;
    let description =
        description.filter(|s| !s.is_empty()).ok_or_else(|| field_err("description"))?;
    let label = match label {
        None => Label::Unlabeled,
        Some(s) => Label::parse_strict(&s).ok_or(DatasetError::UnknownLabel { row, label: s })?,
    };
    if !seen.insert(id.clone()) {
        return Err(DatasetError::DuplicateId { row, id });
    }
    Ok(JobPosting { id, title, description, label })
}

fn ingest_jsonl(file: File) -> Result<Vec<JobPosting>, DatasetError> {
    let reader = BufReader::new(file);
    let mut postings = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let row = idx + 1;
        let line = line.map_err(|source| DatasetError::Io { path: format!("row {row}"), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonlRow = serde_json::from_str(&line)
            .map_err(|e| DatasetError::BadRow { row, reason: e.to_string() })?;
        postings.push(validate_row(
            row,
            parsed.id,
            parsed.title,
            parsed.description,
            parsed.label,
            &mut seen,
        )?);
    }
    Ok(postings)
}

/// CSV dialect: comma-separated, double-quote escaping, header row required
/// with columns id,title,description,label. An empty label cell means
/// UNLABELED.
fn ingest_csv(file: File) -> Result<Vec<JobPosting>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::BadRow { row: 1, reason: e.to_string() })?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (id_col, title_col, desc_col) = match (col("id"), col("title"), col("description")) {
        (Some(i), Some(t), Some(d)) => (i, t, d),
        _ => {
            return Err(DatasetError::BadRow {
                row: 1,
                reason: "header must contain columns id,title,description,label".to_string(),
            })
        }
    };
    let label_col = col("label");

    let mut postings = Vec::new();
    let mut seen = HashSet::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // 1-based, after the header
        let record = record.map_err(|e| DatasetError::BadRow { row, reason: e.to_string() })?;
        let get = |c: usize| record.get(c).map(str::to_string).filter(|s| !s.is_empty());
        postings.push(validate_row(
            row,
            get(id_col),
            get(title_col),
            get(desc_col),
            label_col.and_then(get),
            &mut seen,
        )?);
    }
    Ok(postings)
}

/// Model input for one posting: the description prepended by the title,
/// separated by a single newline.
pub fn compose_input(posting: &JobPosting) -> String {
    format!("{}\n{}", posting.title, posting.description)
}

/// Counting rule for corpus statistics. The default splits on whitespace
/// runs; the trait exists because the statistics are descriptive and the
/// counting method is a configuration choice.
pub trait Tokenizer: Send + Sync {
    fn token_count(&self, text: &str) -> usize;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn token_count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

/// Token count under the default whitespace tokenizer.
pub fn token_count(text: &str) -> usize {
    WhitespaceTokenizer.token_count(text)
}

/// Per-label statistics row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub label: Label,
    pub count: usize,
    /// Fraction of the dataset in [0, 1].
    pub proportion: f64,
    pub median_tokens: usize,
    pub token_std: f64,
}

/// Dataset statistics: one row per present label plus the full-dataset row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: Vec<SummaryRow>,
    pub total: SummaryRow,
}

/// Lower median: for even-sized sets the lower of the two middle values.
fn median(sorted: &[usize]) -> usize {
    sorted[(sorted.len() - 1) / 2]
}

/// Population standard deviation (divide by N).
fn std_dev(counts: &[usize]) -> f64 {
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / n;
    var.sqrt()
}

fn summary_row(label: Label, token_counts: &mut Vec<usize>, total: usize) -> SummaryRow {
    token_counts.sort_unstable();
    SummaryRow {
        label,
        count: token_counts.len(),
        proportion: token_counts.len() as f64 / total as f64,
        median_tokens: median(token_counts),
        token_std: std_dev(token_counts),
    }
}

/// Computes per-label counts, proportions, and token statistics over the
/// composed model inputs (title + newline + description).
pub fn summarize(
    dataset: &[JobPosting],
    tokenizer: &dyn Tokenizer,
) -> Result<DatasetSummary, DatasetError> {
    if dataset.is_empty() {
        return Err(DatasetError::Empty);
    }
    let total = dataset.len();
    let mut all_counts = Vec::with_capacity(total);
    let mut rows = Vec::new();
    for label in [Label::Grad, Label::NonGrad, Label::Unlabeled] {
        let mut counts: Vec<usize> = dataset
            .iter()
            .filter(|p| p.label == label)
            .map(|p| tokenizer.token_count(&compose_input(p)))
            .collect();
        if !counts.is_empty() {
            rows.push(summary_row(label, &mut counts, total));
            all_counts.extend_from_slice(&counts);
        }
    }
    let total_row = summary_row(Label::Unlabeled, &mut all_counts, total);
    Ok(DatasetSummary {
        rows,
        total: SummaryRow { label: Label::Unlabeled, count: total, ..total_row },
    })
}

/// Stratified split: per-label proportions in each split match the full
/// dataset within one example per label. Deterministic given the seed.
pub fn stratified_split(
    dataset: &[JobPosting],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<JobPosting>, Vec<JobPosting>), DatasetError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::BadFraction(train_fraction));
    }
    if let Some(p) = dataset.iter().find(|p| p.label == Label::Unlabeled) {
        return Err(DatasetError::UnlabeledRecord(p.id.clone()));
    }
    for label in [Label::Grad, Label::NonGrad] {
        match dataset.iter().filter(|p| p.label == label).count() {
            0 => return Err(DatasetError::MissingLabel(label)),
            count @ 1 => return Err(DatasetError::TooSmallToStratify { label, count }),
            _ => {}
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for label in [Label::Grad, Label::NonGrad] {
        let mut group: Vec<&JobPosting> = dataset.iter().filter(|p| p.label == label).collect();
        group.shuffle(&mut rng);
        // Round to the nearest count, clamped so both splits keep the label.
        let n = group.len();
        let take = ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
        for (i, posting) in group.into_iter().enumerate() {
            if i < take {
                train.push(posting.clone());
            } else {
                test.push(posting.clone());
            }
        }
    }
    // Restore dataset order within each split so output is reproducible
    // independent of the per-label pass order.
    let order: std::collections::HashMap<&str, usize> =
        dataset.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
    train.sort_by_key(|p| order[p.id.as_str()]);
    test.sort_by_key(|p| order[p.id.as_str()]);
    Ok((train, test))
}

/// Digest over the ordered (id, label) pairs; reports cite it so results are
/// traceable to exact data.
pub fn fingerprint(dataset: &[JobPosting]) -> String {
    let mut hasher = Sha256::new();
    for p in dataset {
        hasher.update((p.id.len() as u64).to_le_bytes());
        hasher.update(p.id.as_bytes());
        hasher.update([b':']);
        hasher.update(p.label.as_str().as_bytes());
        hasher.update([b'\n']);
    }
    hex::encode(hasher.finalize())
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset_strategy() -> impl Strategy<Value = Vec<JobPosting>> {
        // At least 2 of each label so stratification is possible.
        (2usize..40, 2usize..40).prop_map(|(g, n)| {
            let mut data = Vec::new();
            for i in 0..g {
                data.push(JobPosting::new(format!("g{i}"), "T", "d", Label::Grad));
            }
            for i in 0..n {
                data.push(JobPosting::new(format!("n{i}"), "T", "d", Label::NonGrad));
            }
            data
        })
    }

    proptest! {
        #[test]
        fn split_is_a_partition(
            data in dataset_strategy(),
            seed in any::<u64>(),
            frac in 0.1f64..0.9,
        ) {
            let (train, test) = stratified_split(&data, frac, seed).unwrap();
            prop_assert_eq!(train.len() + test.len(), data.len());
            let mut ids: Vec<&str> =
                train.iter().chain(test.iter()).map(|p| p.id.as_str()).collect();
            ids.sort_unstable();
            ids.dedup();
            prop_assert_eq!(ids.len(), data.len());
        }

        #[test]
        fn split_is_stratified(
            data in dataset_strategy(),
            seed in any::<u64>(),
        ) {
            let (train, _) = stratified_split(&data, 0.7, seed).unwrap();
            let dataset_share =
                data.iter().filter(|p| p.label == Label::Grad).count() as f64 / data.len() as f64;
            let train_share =
                train.iter().filter(|p| p.label == Label::Grad).count() as f64 / train.len() as f64;
            prop_assert!((train_share - dataset_share).abs() <= 1.0 / train.len() as f64 + 1e-9);
        }
    }
}
