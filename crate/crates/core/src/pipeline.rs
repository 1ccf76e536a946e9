//! The in-memory analysis shared by the CLI subcommands.

use crate::correlation::{all_series, CorrelationSeries};
use crate::dynamics::{all_snapshots, CartographyPoint, DynamicsError, RegionConfig};
use crate::heuristics::{annotate_corpus, AnnotationSet, OverlapMeasure};
use crate::ingest::Corpus;

#[derive(Debug, Clone)]
pub struct Analysis {
    pub annotations: AnnotationSet,
    /// `snapshots[E - 1]` holds the points for epoch `E`.
    pub snapshots: Vec<Vec<CartographyPoint>>,
    pub series: Vec<CorrelationSeries>,
}

/// Tags every sample, snapshots every epoch and correlates each measure.
pub fn analyze(
    corpus: &Corpus,
    regions: &RegionConfig,
    measures: &[OverlapMeasure],
) -> Result<Analysis, DynamicsError> {
    regions.check()?;
    let annotations = annotate_corpus(corpus);
    let snapshots = all_snapshots(corpus, regions, &annotations)?;
    let series = all_series(corpus, &annotations, &snapshots, measures);
    Ok(Analysis {
        annotations,
        snapshots,
        series,
    })
}
