//! Lexical-overlap measures and heuristic tagging.
//!
//! A sample exhibits the lexical-overlap heuristic when every hypothesis word
//! also occurs in the premise. Overlap is measured on deduplicated,
//! case-folded, punctuation-trimmed word sets; stopwords are kept.

use crate::ingest::{Corpus, GoldLabel, Sample};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeuristicsError {
    #[error("text has no word tokens after normalization: {0:?}")]
    EmptyAfterNormalization(String),
    #[error("premise token set is empty")]
    EmptyPremise,
    #[error("hypothesis token set is empty")]
    EmptyHypothesis,
}

/// Normalized word set of one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSet {
    tokens: BTreeSet<String>,
    source_length: usize,
}

impl TokenSet {
    pub fn tokens(&self) -> &BTreeSet<String> {
        &self.tokens
    }

    /// Number of normalized tokens before deduplication.
    pub fn source_length(&self) -> usize {
        self.source_length
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn shared_with(&self, other: &TokenSet) -> usize {
        self.tokens.intersection(&other.tokens).count()
    }

    /// Tokens joined by single spaces, in sorted order.
    pub fn join(&self) -> String {
        self.tokens
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl FromIterator<String> for TokenSet {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        let mut source_length = 0;
        let tokens = iter.into_iter().inspect(|_| source_length += 1).collect();
        TokenSet {
            tokens,
            source_length,
        }
    }
}

fn normalize_word(raw: &str) -> String {
    raw.to_lowercase()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

/// Splits on Unicode whitespace, lowercases, and trims non-alphanumeric
/// characters from both ends of each token. Tokens that end up empty are dropped.
pub fn tokenize(text: &str) -> Result<TokenSet, HeuristicsError> {
    let set: TokenSet = text
        .split_whitespace()
        .map(normalize_word)
        .filter(|t| !t.is_empty())
        .collect();
    if set.is_empty() {
        return Err(HeuristicsError::EmptyAfterNormalization(text.to_string()));
    }
    Ok(set)
}

/// Fraction of hypothesis words found in the premise (m2).
pub fn overlap_m2(premise: &TokenSet, hypothesis: &TokenSet) -> Result<f64, HeuristicsError> {
    if hypothesis.is_empty() {
        return Err(HeuristicsError::EmptyHypothesis);
    }
    Ok(premise.shared_with(hypothesis) as f64 / hypothesis.len() as f64)
}

/// Fraction of premise words found in the hypothesis (m1).
pub fn overlap_m1(premise: &TokenSet, hypothesis: &TokenSet) -> Result<f64, HeuristicsError> {
    if premise.is_empty() {
        return Err(HeuristicsError::EmptyPremise);
    }
    Ok(premise.shared_with(hypothesis) as f64 / premise.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicTag {
    Support,
    Contradict,
    #[serde(rename = "none")]
    NoHeuristic,
}

impl HeuristicTag {
    pub const ALL: [HeuristicTag; 3] = [
        HeuristicTag::Support,
        HeuristicTag::Contradict,
        HeuristicTag::NoHeuristic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicTag::Support => "support",
            HeuristicTag::Contradict => "contradict",
            HeuristicTag::NoHeuristic => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for HeuristicTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Overlap measure used as the heuristic-adoption variable in correlations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapMeasure {
    M1,
    M2,
}

impl OverlapMeasure {
    pub fn as_str(self) -> &'static str {
        match self {
            OverlapMeasure::M1 => "m1",
            OverlapMeasure::M2 => "m2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "m1" => Some(OverlapMeasure::M1),
            "m2" => Some(OverlapMeasure::M2),
            _ => None,
        }
    }

    pub fn of(self, annotation: &HeuristicAnnotation) -> f64 {
        match self {
            OverlapMeasure::M1 => annotation.m1,
            OverlapMeasure::M2 => annotation.m2,
        }
    }
}

impl fmt::Display for OverlapMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicAnnotation {
    pub sample_id: String,
    pub m1: f64,
    pub m2: f64,
    pub tag: HeuristicTag,
}

pub fn tag_heuristic(sample: &Sample) -> Result<HeuristicAnnotation, HeuristicsError> {
    let premise = tokenize(&sample.premise)?;
    let hypothesis = tokenize(&sample.hypothesis)?;
    let m1 = overlap_m1(&premise, &hypothesis)?;
    let m2 = overlap_m2(&premise, &hypothesis)?;
    // Presence is decided on the sets, not on the float ratio.
    let tag = if hypothesis.tokens.is_subset(&premise.tokens) {
        match sample.gold_label {
            GoldLabel::Entailment => HeuristicTag::Support,
            GoldLabel::NonEntailment => HeuristicTag::Contradict,
        }
    } else {
        HeuristicTag::NoHeuristic
    };
    Ok(HeuristicAnnotation {
        sample_id: sample.id.clone(),
        m1,
        m2,
        tag,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationFailure {
    pub sample_id: String,
    pub error: HeuristicsError,
}

/// Annotations for a corpus plus the samples that could not be annotated.
#[derive(Debug, Clone, Default)]
pub struct AnnotationSet {
    annotations: Vec<HeuristicAnnotation>,
    failures: Vec<AnnotationFailure>,
    index: HashMap<String, usize>,
}

impl AnnotationSet {
    pub fn new(annotations: Vec<HeuristicAnnotation>, failures: Vec<AnnotationFailure>) -> Self {
        let index = annotations
            .iter()
            .enumerate()
            .map(|(i, a)| (a.sample_id.clone(), i))
            .collect();
        AnnotationSet {
            annotations,
            failures,
            index,
        }
    }

    pub fn get(&self, sample_id: &str) -> Option<&HeuristicAnnotation> {
        self.index.get(sample_id).map(|&i| &self.annotations[i])
    }

    pub fn tag_of(&self, sample_id: &str) -> Option<HeuristicTag> {
        self.get(sample_id).map(|a| a.tag)
    }

    pub fn annotations(&self) -> &[HeuristicAnnotation] {
        &self.annotations
    }

    pub fn failures(&self) -> &[AnnotationFailure] {
        &self.failures
    }

    pub fn len(&self) -> usize {
        self.annotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.annotations.is_empty()
    }
}

/// Tags every sample in dataset order; untokenizable samples are collected as failures.
pub fn annotate_corpus(corpus: &Corpus) -> AnnotationSet {
    let mut annotations = Vec::with_capacity(corpus.len());
    let mut failures = Vec::new();
    for sample in corpus.samples() {
        match tag_heuristic(sample) {
            Ok(a) => annotations.push(a),
            Err(error) => failures.push(AnnotationFailure {
                sample_id: sample.id.clone(),
                error,
            }),
        }
    }
    AnnotationSet::new(annotations, failures)
}

/// Columns: sample_id, m1, m2, tag.
pub fn write_annotations_csv(out: impl Write, set: &AnnotationSet) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_id", "m1", "m2", "tag"])?;
    for a in set.annotations() {
        w.write_record([
            a.sample_id.as_str(),
            &format!("{:.9}", a.m1),
            &format!("{:.9}", a.m2),
            a.tag.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
