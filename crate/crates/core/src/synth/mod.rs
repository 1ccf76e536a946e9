//! Synthetic corpora with known answers.
//!
//! Every sample gets a hypothesis of four distinct words, `k` of which are
//! taken from its premise, so its m2 is exactly `k / 4`. Its probability
//! trajectory is a linear ramp centred on a planted terminal confidence
//!
//! ```text
//! c = intercept + planted_slope * m2 + noise
//! ```
//!
//! whose mean over all epochs is `c`. An oracle file records the expected
//! statistics, regions, tags and correlations, each computed directly from
//! the construction rather than through the analysis pipeline.

mod oracle;
mod verify;

pub use oracle::{build_oracle, exact_two_pass_pearson, read_oracle, write_oracle, OracleEntry};
pub use verify::{
    verify, AnnotationRow, CorrelationRow, Divergence, DynamicsRow, PipelineOutputs, VerifyReport,
    ANNOTATIONS_CSV, CORRELATIONS_CSV, DYNAMICS_CSV, STAT_TOLERANCE,
};

use crate::dynamics::RegionConfig;
use crate::ingest::{
    write_dataset, write_predictions, Distribution, GoldLabel, PredictionRecord, Sample, Split,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const ORACLE_FILE: &str = "oracle.jsonl";

/// Words per hypothesis; m2 targets are multiples of `1 / HYPOTHESIS_WORDS`.
pub const HYPOTHESIS_WORDS: usize = 4;
const MIN_PREMISE_WORDS: usize = 4;
const MAX_PREMISE_WORDS: usize = 8;
/// Smallest vocabulary that can build every overlap level.
pub const MIN_VOCABULARY: usize = MIN_PREMISE_WORDS + HYPOTHESIS_WORDS;
/// Planted noise-free confidences must stay this far from the confidence threshold.
const THRESHOLD_MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SynthError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        SynthError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_train: usize,
    pub n_eval_in: usize,
    pub n_eval_ood: usize,
    pub epochs: u32,
    pub seed: u64,
    /// Linear coefficient from m2 to terminal confidence.
    pub planted_slope: f64,
    /// Terminal confidence at m2 = 0.
    pub intercept: f64,
    /// Half-width of the uniform noise added to the terminal confidence.
    pub noise_scale: f64,
    pub vocabulary_size: usize,
    /// Terminal confidence planted for OOD entailment samples that support
    /// the heuristic, overriding the linear relation.
    pub ood_support_confidence: Option<f64>,
    /// Thresholds used for the oracle's regions.
    pub regions: RegionConfig,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_train: 2000,
            n_eval_in: 500,
            n_eval_ood: 500,
            epochs: 8,
            seed: 7,
            planted_slope: 0.6,
            intercept: 0.15,
            noise_scale: 0.05,
            vocabulary_size: 64,
            ood_support_confidence: None,
            regions: RegionConfig::default(),
        }
    }
}

impl SynthSpec {
    pub fn check(&self) -> Result<(), SynthError> {
        let invalid = |msg: String| Err(SynthError::InvalidSpec(msg));
        if self.epochs < 1 {
            return invalid("epochs must be >= 1".into());
        }
        if self.vocabulary_size < MIN_VOCABULARY {
            return invalid(format!("vocabulary_size must be >= {MIN_VOCABULARY}"));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return invalid(format!(
                "noise_scale {} must be finite and >= 0",
                self.noise_scale
            ));
        }
        self.regions
            .check()
            .map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        let mut planted: Vec<f64> = (0..=HYPOTHESIS_WORDS)
            .map(|k| self.intercept + self.planted_slope * k as f64 / HYPOTHESIS_WORDS as f64)
            .collect();
        planted.extend(self.ood_support_confidence);
        for c in planted {
            if !(0.0..=1.0).contains(&c) {
                return invalid(format!("planted confidence {c} is outside [0, 1]"));
            }
            if (c - self.regions.tau_mu).abs() < THRESHOLD_MARGIN {
                return invalid(format!(
                    "planted confidence {c} sits on the confidence threshold {}",
                    self.regions.tau_mu
                ));
            }
        }
        Ok(())
    }
}

/// Construction record for one generated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSample {
    pub sample: Sample,
    /// Hypothesis words shared with the premise.
    pub shared: usize,
    pub premise_words: usize,
    pub trajectory: Vec<f64>,
}

impl PlantedSample {
    pub fn m1(&self) -> f64 {
        self.shared as f64 / self.premise_words as f64
    }

    pub fn m2(&self) -> f64 {
        self.shared as f64 / HYPOTHESIS_WORDS as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub spec: SynthSpec,
    pub planted: Vec<PlantedSample>,
    pub oracle: Vec<OracleEntry>,
}

impl SynthCorpus {
    pub fn samples(&self) -> Vec<Sample> {
        self.planted.iter().map(|p| p.sample.clone()).collect()
    }

    /// Prediction records in canonical (epoch-major) order.
    pub fn predictions(&self) -> Vec<PredictionRecord> {
        let mut out = Vec::with_capacity(self.planted.len() * self.spec.epochs as usize);
        for epoch in 1..=self.spec.epochs {
            for p in &self.planted {
                out.push(PredictionRecord {
                    sample_id: p.sample.id.clone(),
                    epoch,
                    p_true: p.trajectory[epoch as usize - 1],
                });
            }
        }
        out
    }
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

/// Distinct pronounceable pseudo-word for each vocabulary index.
pub fn pseudo_word(index: usize) -> String {
    let base = CONSONANTS.len() * VOWELS.len();
    let mut digits = Vec::new();
    let mut i = index;
    loop {
        digits.push(i % base);
        i /= base;
        if i == 0 {
            break;
        }
    }
    let mut word = String::with_capacity(digits.len() * 2);
    for d in digits.into_iter().rev() {
        word.push(CONSONANTS[d / VOWELS.len()] as char);
        word.push(VOWELS[d % VOWELS.len()] as char);
    }
    word
}

fn sentence(words: &[usize]) -> String {
    let mut text = words
        .iter()
        .map(|&w| pseudo_word(w))
        .collect::<Vec<_>>()
        .join(" ");
    if let Some(first) = text.get(..1) {
        let upper = first.to_uppercase();
        text.replace_range(..1, &upper);
    }
    text.push('.');
    text
}

/// Zero-mean ramp from -1 to 1 across `epochs` points (all zero for one epoch).
fn ramp(epoch: u32, epochs: u32) -> f64 {
    if epochs <= 1 {
        0.0
    } else {
        2.0 * f64::from(epoch - 1) / f64::from(epochs - 1) - 1.0
    }
}

fn roles(spec: &SynthSpec) -> impl Iterator<Item = (&'static str, Split, Distribution, usize)> {
    [
        (
            "train",
            Split::Train,
            Distribution::InDistribution,
            spec.n_train,
        ),
        (
            "in",
            Split::Eval,
            Distribution::InDistribution,
            spec.n_eval_in,
        ),
        ("ood", Split::Eval, Distribution::Ood, spec.n_eval_ood),
    ]
    .into_iter()
}

/// Builds one sample from its own counter-indexed random stream, so any
/// sample can be regenerated without the others.
fn plant_sample(
    spec: &SynthSpec,
    stream: u64,
    id: String,
    split: Split,
    distribution: Distribution,
) -> PlantedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(stream);

    let gold_label = if rng.gen_bool(0.5) {
        GoldLabel::Entailment
    } else {
        GoldLabel::NonEntailment
    };
    let shared = rng.gen_range(0..=HYPOTHESIS_WORDS);
    let max_premise = MAX_PREMISE_WORDS.min(spec.vocabulary_size - HYPOTHESIS_WORDS);
    let premise_words = rng.gen_range(MIN_PREMISE_WORDS..=max_premise);

    let premise: Vec<usize> =
        rand::seq::index::sample(&mut rng, spec.vocabulary_size, premise_words).into_vec();
    let outside: Vec<usize> = (0..spec.vocabulary_size)
        .filter(|w| !premise.contains(w))
        .collect();
    let mut hypothesis: Vec<usize> = premise
        .choose_multiple(&mut rng, shared)
        .copied()
        .chain(
            outside
                .choose_multiple(&mut rng, HYPOTHESIS_WORDS - shared)
                .copied(),
        )
        .collect();
    hypothesis.shuffle(&mut rng);

    let spread: f64 = rng.gen();
    let jitter: f64 = rng.gen_range(-1.0..=1.0);

    let m2 = shared as f64 / HYPOTHESIS_WORDS as f64;
    let ood_support = distribution == Distribution::Ood
        && shared == HYPOTHESIS_WORDS
        && gold_label == GoldLabel::Entailment;
    let base = match spec.ood_support_confidence {
        Some(c) if ood_support => c,
        _ => spec.intercept + spec.planted_slope * m2,
    };
    let terminal = (base + spec.noise_scale * jitter).clamp(0.0, 1.0);
    let amplitude = spread * terminal.min(1.0 - terminal);
    let trajectory = (1..=spec.epochs)
        .map(|e| (terminal + amplitude * ramp(e, spec.epochs)).clamp(0.0, 1.0))
        .collect();

    PlantedSample {
        sample: Sample {
            id,
            premise: sentence(&premise),
            hypothesis: sentence(&hypothesis),
            gold_label,
            split,
            distribution,
        },
        shared,
        premise_words,
        trajectory,
    }
}

/// Generates samples, trajectories and the oracle for `spec`.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.check()?;
    let mut planted = Vec::with_capacity(spec.n_train + spec.n_eval_in + spec.n_eval_ood);
    let mut stream = 0u64;
    for (prefix, split, distribution, count) in roles(spec) {
        for i in 0..count {
            let id = format!("{prefix}-{i:06}");
            planted.push(plant_sample(spec, stream, id, split, distribution));
            stream += 1;
        }
    }
    let oracle = build_oracle(spec, &planted);
    Ok(SynthCorpus {
        spec: spec.clone(),
        planted,
        oracle,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, SynthError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| SynthError::io(path, e))
}

/// Writes the dataset, predictions and oracle files into `dir`.
pub fn write_synth(dir: &Path, corpus: &SynthCorpus) -> Result<(), SynthError> {
    std::fs::create_dir_all(dir).map_err(|e| SynthError::io(dir, e))?;
    let path = dir.join(DATASET_FILE);
    let mut w = create(&path)?;
    write_dataset(&mut w, &corpus.samples())
        .and_then(|_| w.flush())
        .map_err(|e| SynthError::io(&path, e))?;

    let path = dir.join(PREDICTIONS_FILE);
    let mut w = create(&path)?;
    write_predictions(&mut w, &corpus.predictions())
        .and_then(|_| w.flush())
        .map_err(|e| SynthError::io(&path, e))?;

    let path = dir.join(ORACLE_FILE);
    let mut w = create(&path)?;
    write_oracle(&mut w, &corpus.oracle)
        .and_then(|_| w.flush())
        .map_err(|e| SynthError::io(&path, e))?;
    Ok(())
}
