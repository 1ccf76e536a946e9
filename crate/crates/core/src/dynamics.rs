//! Training-dynamics statistics and cartography regions.
//!
//! For each sample the confidence after epoch `E` is the mean gold-label
//! probability over epochs `1..=E` and the variability is the population
//! standard deviation (divisor `E`) of the same values. Both are maintained
//! with a single-pass running mean / running sum of squared deviations.

use crate::heuristics::{AnnotationSet, HeuristicTag};
use crate::ingest::{Corpus, Distribution, Split};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("epoch {epoch} is outside 1..={max_epoch}")]
    EpochOutOfRange { epoch: u32, max_epoch: u32 },
    #[error("invalid region thresholds: tau_v = {tau_v}, tau_mu = {tau_mu}")]
    InvalidRegionConfig { tau_v: f64, tau_mu: f64 },
}

/// Running confidence/variability of one sample after `count` epochs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryStats {
    count: u32,
    mean: f64,
    sum_sq_dev: f64,
}

impl TrajectoryStats {
    /// Number of epochs aggregated (the epoch `E` of this snapshot).
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn epoch(&self) -> u32 {
        self.count
    }

    pub fn confidence(&self) -> f64 {
        self.mean.clamp(0.0, 1.0)
    }

    pub fn variability(&self) -> f64 {
        (self.sum_sq_dev.max(0.0) / f64::from(self.count))
            .sqrt()
            .min(0.5)
    }
}

/// Folds one more epoch's probability into `prev` (absent for the first epoch).
pub fn update_trajectory(
    prev: Option<&TrajectoryStats>,
    p: f64,
) -> Result<TrajectoryStats, DynamicsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(DynamicsError::ProbabilityOutOfRange(p));
    }
    let Some(prev) = prev else {
        return Ok(TrajectoryStats {
            count: 1,
            mean: p,
            sum_sq_dev: 0.0,
        });
    };
    let count = prev.count + 1;
    let delta = p - prev.mean;
    let mean = prev.mean + delta / f64::from(count);
    let sum_sq_dev = prev.sum_sq_dev + delta * (p - mean);
    Ok(TrajectoryStats {
        count,
        mean,
        sum_sq_dev,
    })
}

/// Stats for every prefix of `trajectory`.
pub fn trajectory_prefixes(trajectory: &[f64]) -> Result<Vec<TrajectoryStats>, DynamicsError> {
    let mut out: Vec<TrajectoryStats> = Vec::with_capacity(trajectory.len());
    for &p in trajectory {
        let next = update_trajectory(out.last(), p)?;
        out.push(next);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    EasyToLearn,
    HardToLearn,
    Ambiguous,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::EasyToLearn => "easy_to_learn",
            Region::HardToLearn => "hard_to_learn",
            Region::Ambiguous => "ambiguous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "easy_to_learn" => Some(Region::EasyToLearn),
            "hard_to_learn" => Some(Region::HardToLearn),
            "ambiguous" => Some(Region::Ambiguous),
            _ => None,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Region thresholds. Defaults: `tau_v = 0.25`, `tau_mu = 0.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionConfig {
    pub tau_v: f64,
    pub tau_mu: f64,
}

impl RegionConfig {
    pub const DEFAULT_TAU_V: f64 = 0.25;
    pub const DEFAULT_TAU_MU: f64 = 0.5;

    pub fn new(tau_v: f64, tau_mu: f64) -> Result<Self, DynamicsError> {
        let config = RegionConfig { tau_v, tau_mu };
        config.check()?;
        Ok(config)
    }

    pub fn check(&self) -> Result<(), DynamicsError> {
        let ok = self.tau_v > 0.0 && self.tau_v <= 0.5 && self.tau_mu > 0.0 && self.tau_mu < 1.0;
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::InvalidRegionConfig {
                tau_v: self.tau_v,
                tau_mu: self.tau_mu,
            })
        }
    }
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            tau_v: Self::DEFAULT_TAU_V,
            tau_mu: Self::DEFAULT_TAU_MU,
        }
    }
}

/// High variability is ambiguous regardless of confidence; below the
/// variability threshold, confidence separates easy from hard.
pub fn classify_region(confidence: f64, variability: f64, config: &RegionConfig) -> Region {
    if variability >= config.tau_v {
        Region::Ambiguous
    } else if confidence >= config.tau_mu {
        Region::EasyToLearn
    } else {
        Region::HardToLearn
    }
}

/// One sample's position on the cartography map after a given epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct CartographyPoint {
    pub sample_id: String,
    pub split: Split,
    pub distribution: Distribution,
    pub epoch: u32,
    pub confidence: f64,
    pub variability: f64,
    pub region: Region,
    /// `None` when the sample could not be annotated.
    pub heuristic_tag: Option<HeuristicTag>,
}

fn check_epoch(corpus: &Corpus, epoch: u32) -> Result<(), DynamicsError> {
    if epoch == 0 || epoch > corpus.max_epoch() {
        return Err(DynamicsError::EpochOutOfRange {
            epoch,
            max_epoch: corpus.max_epoch(),
        });
    }
    Ok(())
}

/// Cartography points after `epoch` for every sample with predictions through
/// that epoch, in dataset order.
pub fn snapshot_epoch(
    corpus: &Corpus,
    epoch: u32,
    config: &RegionConfig,
    annotations: &AnnotationSet,
) -> Result<Vec<CartographyPoint>, DynamicsError> {
    check_epoch(corpus, epoch)?;
    let mut points = Vec::new();
    for (sample, trajectory) in corpus.iter() {
        let Some(prefix) = trajectory.get(..epoch as usize) else {
            continue;
        };
        let mut stats = None;
        for &p in prefix {
            stats = Some(update_trajectory(stats.as_ref(), p)?);
        }
        let stats = stats.expect("epoch >= 1");
        points.push(CartographyPoint {
            sample_id: sample.id.clone(),
            split: sample.split,
            distribution: sample.distribution,
            epoch,
            confidence: stats.confidence(),
            variability: stats.variability(),
            region: classify_region(stats.confidence(), stats.variability(), config),
            heuristic_tag: annotations.tag_of(&sample.id),
        });
    }
    Ok(points)
}

/// Snapshots for every epoch `1..=max_epoch`, computed in one incremental
/// pass per sample. Element `E - 1` holds the points for epoch `E`.
pub fn all_snapshots(
    corpus: &Corpus,
    config: &RegionConfig,
    annotations: &AnnotationSet,
) -> Result<Vec<Vec<CartographyPoint>>, DynamicsError> {
    let mut snapshots: Vec<Vec<CartographyPoint>> = vec![Vec::new(); corpus.max_epoch() as usize];
    for (sample, trajectory) in corpus.iter() {
        let tag = annotations.tag_of(&sample.id);
        let mut stats = None;
        for (e, &p) in trajectory.iter().enumerate() {
            let next = update_trajectory(stats.as_ref(), p)?;
            snapshots[e].push(CartographyPoint {
                sample_id: sample.id.clone(),
                split: sample.split,
                distribution: sample.distribution,
                epoch: next.epoch(),
                confidence: next.confidence(),
                variability: next.variability(),
                region: classify_region(next.confidence(), next.variability(), config),
                heuristic_tag: tag,
            });
            stats = Some(next);
        }
    }
    Ok(snapshots)
}

pub const DYNAMICS_COLUMNS: [&str; 8] = [
    "sample_id",
    "split",
    "distribution",
    "epoch",
    "confidence",
    "variability",
    "region",
    "heuristic_tag",
];

/// Long-form CSV over all given points, in the order given.
pub fn write_dynamics_csv<'a>(
    out: impl Write,
    points: impl IntoIterator<Item = &'a CartographyPoint>,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DYNAMICS_COLUMNS)?;
    for p in points {
        w.write_record([
            p.sample_id.as_str(),
            p.split.as_str(),
            p.distribution.as_str(),
            &p.epoch.to_string(),
            &format!("{:.9}", p.confidence),
            &format!("{:.9}", p.variability),
            p.region.as_str(),
            p.heuristic_tag.map_or("", HeuristicTag::as_str),
        ])?;
    }
    w.flush()?;
    Ok(())
}
