//! Checks pipeline outputs against an oracle.

use super::{OracleEntry, SynthError};
use crate::correlation::{ClassFilter, CorrelationSeries, Stratum};
use crate::dynamics::{CartographyPoint, Region};
use crate::heuristics::{AnnotationSet, HeuristicTag, OverlapMeasure};
use crate::ingest::{Distribution, Split};
use serde::Deserialize;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

/// Absolute tolerance for every real-valued comparison.
pub const STAT_TOLERANCE: f64 = 1e-9;

pub const ANNOTATIONS_CSV: &str = "annotations.csv";
pub const DYNAMICS_CSV: &str = "dynamics.csv";
pub const CORRELATIONS_CSV: &str = "correlations.csv";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRow {
    pub sample_id: String,
    pub m1: f64,
    pub m2: f64,
    pub tag: HeuristicTag,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsRow {
    pub sample_id: String,
    pub split: Split,
    pub distribution: Distribution,
    pub epoch: u32,
    pub confidence: f64,
    pub variability: f64,
    pub region: Region,
    pub heuristic_tag: Option<HeuristicTag>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationRow {
    pub epoch: u32,
    pub stratum: Stratum,
    pub class_filter: ClassFilter,
    pub measure: OverlapMeasure,
    pub rho: Option<f64>,
    pub n: usize,
}

/// The tabular outputs of one pipeline run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineOutputs {
    pub annotations: Vec<AnnotationRow>,
    pub dynamics: Vec<DynamicsRow>,
    pub correlations: Vec<CorrelationRow>,
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, SynthError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => SynthError::io(path, io),
        other => SynthError::Schema(format!("{}: {other:?}", path.display())),
    })?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| SynthError::Schema(format!("{}: {e}", path.display())))
}

impl PipelineOutputs {
    /// Reads `annotations.csv`, `dynamics.csv` and `correlations.csv` from a run directory.
    pub fn read_dir(dir: &Path) -> Result<Self, SynthError> {
        Ok(PipelineOutputs {
            annotations: read_csv(&dir.join(ANNOTATIONS_CSV))?,
            dynamics: read_csv(&dir.join(DYNAMICS_CSV))?,
            correlations: read_csv(&dir.join(CORRELATIONS_CSV))?,
        })
    }

    /// Same tables taken from in-memory results, at full precision.
    pub fn from_results(
        annotations: &AnnotationSet,
        snapshots: &[Vec<CartographyPoint>],
        series: &[CorrelationSeries],
    ) -> Self {
        PipelineOutputs {
            annotations: annotations
                .annotations()
                .iter()
                .map(|a| AnnotationRow {
                    sample_id: a.sample_id.clone(),
                    m1: a.m1,
                    m2: a.m2,
                    tag: a.tag,
                })
                .collect(),
            dynamics: snapshots
                .iter()
                .flatten()
                .map(|p| DynamicsRow {
                    sample_id: p.sample_id.clone(),
                    split: p.split,
                    distribution: p.distribution,
                    epoch: p.epoch,
                    confidence: p.confidence,
                    variability: p.variability,
                    region: p.region,
                    heuristic_tag: p.heuristic_tag,
                })
                .collect(),
            correlations: series
                .iter()
                .flat_map(|s| &s.points)
                .map(|p| CorrelationRow {
                    epoch: p.epoch,
                    stratum: p.stratum,
                    class_filter: p.class_filter,
                    measure: p.measure,
                    rho: p.rho,
                    n: p.n,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// Which record disagrees, e.g. `trajectory sample=in-000003 epoch=4`.
    pub key: String,
    pub detail: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    /// Oracle entries compared.
    pub checked: usize,
    /// Correlation entries skipped because the run did not compute that measure.
    pub skipped: usize,
    pub divergences: Vec<Divergence>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.divergences.is_empty()
    }

    pub fn first(&self) -> Option<&Divergence> {
        self.divergences.first()
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= STAT_TOLERANCE
}

/// Compares every oracle entry with the matching output row.
///
/// Tags and regions must match exactly, reals within [`STAT_TOLERANCE`].
/// Oracle correlations for a measure the run never computed are skipped;
/// otherwise a missing row is a divergence, as is any output row the
/// oracle does not predict.
pub fn verify(oracle: &[OracleEntry], outputs: &PipelineOutputs) -> VerifyReport {
    let annotations: HashMap<&str, &AnnotationRow> = outputs
        .annotations
        .iter()
        .map(|r| (r.sample_id.as_str(), r))
        .collect();
    let dynamics: HashMap<(&str, u32), &DynamicsRow> = outputs
        .dynamics
        .iter()
        .map(|r| ((r.sample_id.as_str(), r.epoch), r))
        .collect();
    let correlations: HashMap<_, &CorrelationRow> = outputs
        .correlations
        .iter()
        .map(|r| ((r.epoch, r.stratum, r.class_filter, r.measure), r))
        .collect();
    let measures: BTreeSet<OverlapMeasure> =
        outputs.correlations.iter().map(|r| r.measure).collect();

    let mut report = VerifyReport::default();
    let mut expected = (0usize, 0usize, 0usize);
    let mut fail =
        |key: String, detail: String| report.divergences.push(Divergence { key, detail });
    let mut checked = 0;
    let mut skipped = 0;

    for entry in oracle {
        match entry {
            OracleEntry::Tag {
                sample_id,
                m1,
                m2,
                tag,
            } => {
                expected.0 += 1;
                checked += 1;
                let key = format!("tag sample={sample_id}");
                let Some(row) = annotations.get(sample_id.as_str()) else {
                    fail(key, "missing from annotations".into());
                    continue;
                };
                if !close(row.m1, *m1) {
                    fail(key, format!("m1 {} vs oracle {m1}", row.m1));
                } else if !close(row.m2, *m2) {
                    fail(key, format!("m2 {} vs oracle {m2}", row.m2));
                } else if row.tag != *tag {
                    fail(
                        key,
                        format!("tag {} vs oracle {}", row.tag.as_str(), tag.as_str()),
                    );
                }
            }
            OracleEntry::Trajectory {
                sample_id,
                epoch,
                confidence,
                variability,
                region,
            } => {
                expected.1 += 1;
                checked += 1;
                let key = format!("trajectory sample={sample_id} epoch={epoch}");
                let Some(row) = dynamics.get(&(sample_id.as_str(), *epoch)) else {
                    fail(key, "missing from dynamics".into());
                    continue;
                };
                if !close(row.confidence, *confidence) {
                    fail(
                        key,
                        format!("confidence {} vs oracle {confidence}", row.confidence),
                    );
                } else if !close(row.variability, *variability) {
                    fail(
                        key,
                        format!("variability {} vs oracle {variability}", row.variability),
                    );
                } else if row.region != *region {
                    fail(
                        key,
                        format!(
                            "region {} vs oracle {}",
                            row.region.as_str(),
                            region.as_str()
                        ),
                    );
                }
            }
            OracleEntry::Correlation {
                epoch,
                stratum,
                class_filter,
                measure,
                rho,
                n,
            } => {
                if !measures.contains(measure) {
                    skipped += 1;
                    continue;
                }
                expected.2 += 1;
                checked += 1;
                let key = format!(
                    "correlation epoch={epoch} stratum={} class={} measure={}",
                    stratum.as_str(),
                    class_filter.as_str(),
                    measure.as_str()
                );
                let Some(row) = correlations.get(&(*epoch, *stratum, *class_filter, *measure))
                else {
                    fail(key, "missing from correlations".into());
                    continue;
                };
                if row.n != *n {
                    fail(key, format!("n {} vs oracle {n}", row.n));
                    continue;
                }
                match (row.rho, rho) {
                    (None, None) => {}
                    (Some(a), Some(b)) if close(a, *b) => {}
                    (a, b) => fail(key, format!("rho {a:?} vs oracle {b:?}")),
                }
            }
        }
    }

    let extras = [
        (ANNOTATIONS_CSV, outputs.annotations.len(), expected.0),
        (DYNAMICS_CSV, outputs.dynamics.len(), expected.1),
        (CORRELATIONS_CSV, outputs.correlations.len(), expected.2),
    ];
    for (table, rows, wanted) in extras {
        if rows > wanted {
            fail(
                table.to_string(),
                format!("{} rows not predicted by the oracle", rows - wanted),
            );
        }
    }
    report.checked = checked;
    report.skipped = skipped;
    report
}
