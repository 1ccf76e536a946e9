//! Dataset and prediction-log ingestion.
//!
//! Both on-disk formats are UTF-8 JSON-lines with a fixed key set:
//!
//! ```text
//! {"id":"a1","premise":"...","hypothesis":"...","gold_label":"entailment","split":"eval","distribution":"ood"}
//! {"sample_id":"a1","epoch":1,"p_true":0.2}
//! ```
//!
//! Readers are split in two layers. `read_samples` / `read_predictions` only
//! check line syntax (JSON shape, key set, field types, enum spellings). The
//! `load_*` functions add the semantic checks and fail on the first problem.
//! [`validate`] reports every value-level violation of an assembled
//! [`Corpus`] without failing.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

const SAMPLE_KEYS: [&str; 6] = [
    "id",
    "premise",
    "hypothesis",
    "gold_label",
    "split",
    "distribution",
];
const PREDICTION_KEYS: [&str; 3] = ["sample_id", "epoch", "p_true"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldLabel {
    Entailment,
    NonEntailment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    InDistribution,
    Ood,
}

impl GoldLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            GoldLabel::Entailment => "entailment",
            GoldLabel::NonEntailment => "non_entailment",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "entailment" => Some(GoldLabel::Entailment),
            "non_entailment" => Some(GoldLabel::NonEntailment),
            _ => None,
        }
    }
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Eval => "eval",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "eval" => Some(Split::Eval),
            _ => None,
        }
    }
}

impl Distribution {
    pub fn as_str(self) -> &'static str {
        match self {
            Distribution::InDistribution => "in_distribution",
            Distribution::Ood => "ood",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "in_distribution" => Some(Distribution::InDistribution),
            "ood" => Some(Distribution::Ood),
            _ => None,
        }
    }
}

impl fmt::Display for GoldLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One premise/hypothesis pair. Field order is the canonical key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    pub gold_label: GoldLabel,
    pub split: Split,
    pub distribution: Distribution,
}

/// Probability assigned to the gold label of one sample at the end of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sample_id: String,
    pub epoch: u32,
    pub p_true: f64,
}

/// Which dataset file a sample came from, when files are supplied per role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRole {
    Train,
    EvalInDistribution,
    EvalOod,
}

impl DatasetRole {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetRole::Train => "train",
            DatasetRole::EvalInDistribution => "eval_in_distribution",
            DatasetRole::EvalOod => "eval_ood",
        }
    }

    pub fn accepts(self, sample: &Sample) -> bool {
        match self {
            DatasetRole::Train => sample.split == Split::Train,
            DatasetRole::EvalInDistribution => {
                sample.split == Split::Eval && sample.distribution == Distribution::InDistribution
            }
            DatasetRole::EvalOod => {
                sample.split == Split::Eval && sample.distribution == Distribution::Ood
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid JSON: {message}")]
    InvalidJson { line: usize, message: String },
    #[error("line {line}: record must be a JSON object")]
    NotAnObject { line: usize },
    #[error("line {line}: missing field '{field}'")]
    MissingField { line: usize, field: String },
    #[error("line {line}: unexpected field '{field}'")]
    UnexpectedField { line: usize, field: String },
    #[error("line {line}: field '{field}' must be {expected}")]
    InvalidFieldType {
        line: usize,
        field: String,
        expected: &'static str,
    },
    #[error("line {line}: field '{field}' has unknown value '{value}'")]
    UnknownEnumValue {
        line: usize,
        field: String,
        value: String,
    },
    #[error("line {line}: field '{field}' of sample '{id}' is empty")]
    EmptyText {
        line: usize,
        id: String,
        field: &'static str,
    },
    #[error("duplicate sample id '{id}'")]
    DuplicateId { id: String },
    #[error("sample '{id}' does not belong in the {role} dataset")]
    RoleMismatch { id: String, role: &'static str },
    #[error("prediction references unknown sample '{sample_id}' (epoch {epoch})")]
    UnresolvedSample { sample_id: String, epoch: u32 },
    #[error(
        "line {line}: p_true {value} for sample '{sample_id}' at epoch {epoch} is outside [0, 1]"
    )]
    ProbabilityOutOfRange {
        line: usize,
        sample_id: String,
        epoch: u32,
        value: f64,
    },
    #[error("duplicate prediction for sample '{sample_id}' at epoch {epoch}")]
    DuplicatePrediction { sample_id: String, epoch: u32 },
    #[error("trajectory gap: sample '{sample_id}' is missing epoch {missing_epoch}")]
    TrajectoryGap {
        sample_id: String,
        missing_epoch: u32,
    },
}

impl IngestError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// A record tagged with the 1-based line it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct Lined<T> {
    pub line: usize,
    pub record: T,
}

fn for_each_object(
    input: impl BufRead,
    origin: &Path,
    mut f: impl FnMut(usize, &Map<String, Value>) -> Result<(), IngestError>,
) -> Result<(), IngestError> {
    for (idx, line) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| IngestError::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| IngestError::InvalidJson {
            line: line_no,
            message: e.to_string(),
        })?;
        let object = value
            .as_object()
            .ok_or(IngestError::NotAnObject { line: line_no })?;
        f(line_no, object)?;
    }
    Ok(())
}

fn check_keys(object: &Map<String, Value>, keys: &[&str], line: usize) -> Result<(), IngestError> {
    for key in keys {
        if !object.contains_key(*key) {
            return Err(IngestError::MissingField {
                line,
                field: (*key).to_string(),
            });
        }
    }
    if let Some(extra) = object.keys().find(|k| !keys.contains(&k.as_str())) {
        return Err(IngestError::UnexpectedField {
            line,
            field: extra.clone(),
        });
    }
    Ok(())
}

fn string_field<'a>(
    object: &'a Map<String, Value>,
    field: &str,
    line: usize,
) -> Result<&'a str, IngestError> {
    object[field]
        .as_str()
        .ok_or_else(|| IngestError::InvalidFieldType {
            line,
            field: field.to_string(),
            expected: "a string",
        })
}

fn enum_field<T>(
    object: &Map<String, Value>,
    field: &str,
    line: usize,
    parse: fn(&str) -> Option<T>,
) -> Result<T, IngestError> {
    let raw = string_field(object, field, line)?;
    parse(raw).ok_or_else(|| IngestError::UnknownEnumValue {
        line,
        field: field.to_string(),
        value: raw.to_string(),
    })
}

fn read_samples_lined(
    input: impl BufRead,
    origin: &Path,
) -> Result<Vec<Lined<Sample>>, IngestError> {
    let mut out = Vec::new();
    for_each_object(input, origin, |line, object| {
        check_keys(object, &SAMPLE_KEYS, line)?;
        let sample = Sample {
            id: string_field(object, "id", line)?.to_string(),
            premise: string_field(object, "premise", line)?.to_string(),
            hypothesis: string_field(object, "hypothesis", line)?.to_string(),
            gold_label: enum_field(object, "gold_label", line, GoldLabel::parse)?,
            split: enum_field(object, "split", line, Split::parse)?,
            distribution: enum_field(object, "distribution", line, Distribution::parse)?,
        };
        out.push(Lined {
            line,
            record: sample,
        });
        Ok(())
    })?;
    Ok(out)
}

fn read_predictions_lined(
    input: impl BufRead,
    origin: &Path,
) -> Result<Vec<Lined<PredictionRecord>>, IngestError> {
    let mut out = Vec::new();
    for_each_object(input, origin, |line, object| {
        check_keys(object, &PREDICTION_KEYS, line)?;
        let sample_id = string_field(object, "sample_id", line)?.to_string();
        let epoch = object["epoch"]
            .as_u64()
            .filter(|&e| e >= 1 && e <= u64::from(u32::MAX))
            .ok_or_else(|| IngestError::InvalidFieldType {
                line,
                field: "epoch".to_string(),
                expected: "an integer >= 1",
            })? as u32;
        let p_true = object["p_true"]
            .as_f64()
            .ok_or_else(|| IngestError::InvalidFieldType {
                line,
                field: "p_true".to_string(),
                expected: "a number",
            })?;
        out.push(Lined {
            line,
            record: PredictionRecord {
                sample_id,
                epoch,
                p_true,
            },
        });
        Ok(())
    })?;
    Ok(out)
}

/// Parses dataset lines, checking syntax only.
pub fn read_samples(input: impl BufRead) -> Result<Vec<Sample>, IngestError> {
    Ok(read_samples_lined(input, Path::new("<input>"))?
        .into_iter()
        .map(|l| l.record)
        .collect())
}

/// Parses prediction lines, checking syntax only.
pub fn read_predictions(input: impl BufRead) -> Result<Vec<PredictionRecord>, IngestError> {
    Ok(read_predictions_lined(input, Path::new("<input>"))?
        .into_iter()
        .map(|l| l.record)
        .collect())
}

fn open(path: &Path) -> Result<BufReader<File>, IngestError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| IngestError::io(path, e))
}

/// Syntax-only read of a dataset file, keeping line numbers.
pub fn read_dataset_file(path: &Path) -> Result<Vec<Lined<Sample>>, IngestError> {
    read_samples_lined(open(path)?, path)
}

/// Syntax-only read of a predictions file, keeping line numbers.
pub fn read_predictions_file(path: &Path) -> Result<Vec<Lined<PredictionRecord>>, IngestError> {
    read_predictions_lined(open(path)?, path)
}

fn is_blank(text: &str) -> bool {
    text.trim().is_empty()
}

/// Semantic checks applied by [`load_dataset`]: non-empty texts and unique ids.
pub fn check_samples(samples: &[Lined<Sample>]) -> Result<(), IngestError> {
    let mut seen = HashSet::with_capacity(samples.len());
    for Lined { line, record } in samples {
        if is_blank(&record.premise) {
            return Err(IngestError::EmptyText {
                line: *line,
                id: record.id.clone(),
                field: "premise",
            });
        }
        if is_blank(&record.hypothesis) {
            return Err(IngestError::EmptyText {
                line: *line,
                id: record.id.clone(),
                field: "hypothesis",
            });
        }
        if !seen.insert(record.id.as_str()) {
            return Err(IngestError::DuplicateId {
                id: record.id.clone(),
            });
        }
    }
    Ok(())
}

/// Fails if any sample does not match the split/distribution of `role`.
pub fn check_role(samples: &[Sample], role: DatasetRole) -> Result<(), IngestError> {
    match samples.iter().find(|s| !role.accepts(s)) {
        Some(s) => Err(IngestError::RoleMismatch {
            id: s.id.clone(),
            role: role.as_str(),
        }),
        None => Ok(()),
    }
}

/// Loads a dataset file, preserving file order.
pub fn load_dataset(path: &Path) -> Result<Vec<Sample>, IngestError> {
    let lined = read_dataset_file(path)?;
    check_samples(&lined)?;
    Ok(lined.into_iter().map(|l| l.record).collect())
}

fn check_probabilities(records: &[Lined<PredictionRecord>]) -> Result<(), IngestError> {
    for Lined { line, record } in records {
        if !(0.0..=1.0).contains(&record.p_true) {
            return Err(IngestError::ProbabilityOutOfRange {
                line: *line,
                sample_id: record.sample_id.clone(),
                epoch: record.epoch,
                value: record.p_true,
            });
        }
    }
    Ok(())
}

/// Loads one predictions file against already-loaded samples.
pub fn load_predictions(path: &Path, samples: Vec<Sample>) -> Result<Corpus, IngestError> {
    load_prediction_files(&[path], samples)
}

/// Loads and merges several predictions files (e.g. one per split).
pub fn load_prediction_files<P: AsRef<Path>>(
    paths: &[P],
    samples: Vec<Sample>,
) -> Result<Corpus, IngestError> {
    let mut records = Vec::new();
    for path in paths {
        let lined = read_predictions_file(path.as_ref())?;
        check_probabilities(&lined)?;
        records.extend(lined.into_iter().map(|l| l.record));
    }
    Corpus::from_records(samples, records)
}

/// Samples joined with their dense per-epoch probability trajectories.
///
/// Construction enforces the structural invariants (unique ids, resolved
/// references, no duplicate or missing epochs). Value ranges are left to
/// [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    samples: Vec<Sample>,
    index: HashMap<String, usize>,
    trajectories: Vec<Vec<f64>>,
    max_epoch: u32,
}

impl Corpus {
    pub fn from_records(
        samples: Vec<Sample>,
        records: impl IntoIterator<Item = PredictionRecord>,
    ) -> Result<Self, IngestError> {
        let mut index = HashMap::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            if index.insert(s.id.clone(), i).is_some() {
                return Err(IngestError::DuplicateId { id: s.id.clone() });
            }
        }

        let mut by_sample: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); samples.len()];
        for r in records {
            let Some(&i) = index.get(&r.sample_id) else {
                return Err(IngestError::UnresolvedSample {
                    sample_id: r.sample_id,
                    epoch: r.epoch,
                });
            };
            if by_sample[i].insert(r.epoch, r.p_true).is_some() {
                return Err(IngestError::DuplicatePrediction {
                    sample_id: r.sample_id,
                    epoch: r.epoch,
                });
            }
        }

        let mut trajectories = Vec::with_capacity(samples.len());
        let mut max_epoch = 0;
        for (i, epochs) in by_sample.into_iter().enumerate() {
            let mut trajectory = Vec::with_capacity(epochs.len());
            for (expected, (epoch, p)) in (1u32..).zip(epochs) {
                if epoch != expected {
                    return Err(IngestError::TrajectoryGap {
                        sample_id: samples[i].id.clone(),
                        missing_epoch: expected,
                    });
                }
                trajectory.push(p);
            }
            max_epoch = max_epoch.max(trajectory.len() as u32);
            trajectories.push(trajectory);
        }

        Ok(Corpus {
            samples,
            index,
            trajectories,
            max_epoch,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest epoch with any prediction; 0 for a corpus without predictions.
    pub fn max_epoch(&self) -> u32 {
        self.max_epoch
    }

    pub fn sample(&self, id: &str) -> Option<&Sample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    /// Probabilities for epochs `1..=len` of the sample at position `idx`.
    pub fn trajectory(&self, idx: usize) -> &[f64] {
        &self.trajectories[idx]
    }

    pub fn trajectory_of(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.trajectories[i].as_slice())
    }

    /// Samples paired with their trajectories, in dataset order.
    pub fn iter(&self) -> impl Iterator<Item = (&Sample, &[f64])> {
        self.samples
            .iter()
            .zip(self.trajectories.iter().map(Vec::as_slice))
    }

    /// Records in canonical order: epoch-major, then dataset order.
    pub fn records(&self) -> Vec<PredictionRecord> {
        let mut out = Vec::new();
        for epoch in 1..=self.max_epoch {
            for (sample, trajectory) in self.iter() {
                if let Some(&p) = trajectory.get(epoch as usize - 1) {
                    out.push(PredictionRecord {
                        sample_id: sample.id.clone(),
                        epoch,
                        p_true: p,
                    });
                }
            }
        }
        out
    }
}

/// Writes samples in canonical form (one compact object per line, canonical key order).
pub fn write_dataset(mut out: impl Write, samples: &[Sample]) -> std::io::Result<()> {
    for s in samples {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_predictions(mut out: impl Write, records: &[PredictionRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    DuplicateId,
    EmptyPremise,
    EmptyHypothesis,
    TrainNotInDistribution,
    ProbabilityOutOfRange,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::DuplicateId => "duplicate_id",
            Rule::EmptyPremise => "empty_premise",
            Rule::EmptyHypothesis => "empty_hypothesis",
            Rule::TrainNotInDistribution => "train_not_in_distribution",
            Rule::ProbabilityOutOfRange => "p_true_out_of_range",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub sample_id: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.sample_id, self.rule, self.detail)
    }
}

/// Lists every invariant violation in `corpus`. An empty list means valid.
pub fn validate(corpus: &Corpus) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut seen = HashSet::new();
    for (sample, trajectory) in corpus.iter() {
        let mut push = |rule: Rule, detail: String| {
            violations.push(Violation {
                sample_id: sample.id.clone(),
                rule,
                detail,
            })
        };
        if !seen.insert(sample.id.as_str()) {
            push(Rule::DuplicateId, "id appears more than once".into());
        }
        if is_blank(&sample.premise) {
            push(Rule::EmptyPremise, "premise is empty after trimming".into());
        }
        if is_blank(&sample.hypothesis) {
            push(
                Rule::EmptyHypothesis,
                "hypothesis is empty after trimming".into(),
            );
        }
        if sample.split == Split::Train && sample.distribution != Distribution::InDistribution {
            push(
                Rule::TrainNotInDistribution,
                format!("train sample tagged {}", sample.distribution),
            );
        }
        for (e, &p) in trajectory.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                push(
                    Rule::ProbabilityOutOfRange,
                    format!("p_true {p} at epoch {} is outside [0, 1]", e + 1),
                );
            }
        }
    }
    violations
}
