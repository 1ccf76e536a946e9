//! Per-epoch correlation between an overlap measure and confidence,
//! stratified by split and gold class.
//!
//! The coefficient is Pearson's product-moment correlation. It is computed in
//! a single streaming pass whose moment sums are kept exactly (see
//! [`exact`]), so the only rounding happens when the final ratio is
//! converted back to a double. Perfectly affine data therefore yields `±1.0`
//! exactly, and the result is symmetric in its arguments bit-for-bit.

mod exact;

use crate::dynamics::CartographyPoint;
use crate::heuristics::{AnnotationSet, OverlapMeasure};
use crate::ingest::{Corpus, Distribution, GoldLabel, Split};
use exact::Dyadic;
use num_bigint::Sign;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use thiserror::Error;

/// Name of the coefficient, recorded in run metadata.
pub const COEFFICIENT: &str = "pearson";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("length mismatch: {xs} vs {ys} values")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("non-finite input value {0}")]
    NonFinite(f64),
}

/// Streaming Pearson accumulator over `(x, y)` pairs.
#[derive(Debug, Clone)]
pub struct PearsonAccumulator {
    n: u64,
    sum_x: Dyadic,
    sum_y: Dyadic,
    sum_xx: Dyadic,
    sum_yy: Dyadic,
    sum_xy: Dyadic,
}

impl Default for PearsonAccumulator {
    fn default() -> Self {
        PearsonAccumulator {
            n: 0,
            sum_x: Dyadic::zero(),
            sum_y: Dyadic::zero(),
            sum_xx: Dyadic::zero(),
            sum_yy: Dyadic::zero(),
            sum_xy: Dyadic::zero(),
        }
    }
}

impl PearsonAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64, y: f64) -> Result<(), CorrelationError> {
        let dx = Dyadic::from_f64(x).ok_or(CorrelationError::NonFinite(x))?;
        let dy = Dyadic::from_f64(y).ok_or(CorrelationError::NonFinite(y))?;
        self.n += 1;
        self.sum_xx.add_assign(&(&dx * &dx));
        self.sum_yy.add_assign(&(&dy * &dy));
        self.sum_xy.add_assign(&(&dx * &dy));
        self.sum_x.add_assign(&dx);
        self.sum_y.add_assign(&dy);
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// The coefficient, or `None` when `n < 2` or either variable is constant.
    pub fn finish(&self) -> Option<f64> {
        if self.n < 2 {
            return None;
        }
        let n = Dyadic::from_u64(self.n);
        // n^2 times the population (co)variances; exact.
        let var_x = &(&n * &self.sum_xx) - &(&self.sum_x * &self.sum_x);
        let var_y = &(&n * &self.sum_yy) - &(&self.sum_y * &self.sum_y);
        let cov = &(&n * &self.sum_xy) - &(&self.sum_x * &self.sum_y);
        if var_x.is_zero() || var_y.is_zero() {
            return None;
        }
        if cov.is_zero() {
            return Some(0.0);
        }
        let r_squared = Dyadic::ratio_to_f64(&(&cov * &cov), &(&var_x * &var_y));
        let r = r_squared.sqrt().min(1.0);
        Some(if cov.sign() == Sign::Minus { -r } else { r })
    }
}

/// Pearson correlation of `xs` and `ys`; `Ok(None)` is the undefined marker.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Option<f64>, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    let mut acc = PearsonAccumulator::new();
    for (&x, &y) in xs.iter().zip(ys) {
        acc.push(x, y)?;
    }
    Ok(acc.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Train,
    EvalInDistribution,
    EvalOod,
}

impl Stratum {
    pub const ALL: [Stratum; 3] = [
        Stratum::Train,
        Stratum::EvalInDistribution,
        Stratum::EvalOod,
    ];

    pub fn of(split: Split, distribution: Distribution) -> Stratum {
        match (split, distribution) {
            (Split::Train, _) => Stratum::Train,
            (Split::Eval, Distribution::InDistribution) => Stratum::EvalInDistribution,
            (Split::Eval, Distribution::Ood) => Stratum::EvalOod,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::Train => "train",
            Stratum::EvalInDistribution => "eval_in_distribution",
            Stratum::EvalOod => "eval_ood",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassFilter {
    All,
    Entailment,
    NonEntailment,
}

impl ClassFilter {
    pub const ALL: [ClassFilter; 3] = [
        ClassFilter::All,
        ClassFilter::Entailment,
        ClassFilter::NonEntailment,
    ];

    pub fn admits(self, label: GoldLabel) -> bool {
        match self {
            ClassFilter::All => true,
            ClassFilter::Entailment => label == GoldLabel::Entailment,
            ClassFilter::NonEntailment => label == GoldLabel::NonEntailment,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ClassFilter::All => "all",
            ClassFilter::Entailment => "entailment",
            ClassFilter::NonEntailment => "non_entailment",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }
}

impl fmt::Display for ClassFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPoint {
    pub epoch: u32,
    pub stratum: Stratum,
    pub class_filter: ClassFilter,
    pub measure: OverlapMeasure,
    /// `None` when undefined (fewer than two samples or a constant variable).
    pub rho: Option<f64>,
    pub n: usize,
}

/// One trend line: a fixed (stratum, class filter, measure) across epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    pub stratum: Stratum,
    pub class_filter: ClassFilter,
    pub measure: OverlapMeasure,
    pub points: Vec<CorrelationPoint>,
}

/// Correlates `measure` with confidence over the points of one epoch that fall
/// in `stratum` and pass `class_filter`. Samples without an annotation are skipped.
pub fn correlation_at_epoch(
    corpus: &Corpus,
    annotations: &AnnotationSet,
    epoch: u32,
    points: &[CartographyPoint],
    stratum: Stratum,
    class_filter: ClassFilter,
    measure: OverlapMeasure,
) -> CorrelationPoint {
    let mut acc = PearsonAccumulator::new();
    for point in points {
        if point.epoch != epoch || Stratum::of(point.split, point.distribution) != stratum {
            continue;
        }
        let Some(sample) = corpus.sample(&point.sample_id) else {
            continue;
        };
        if !class_filter.admits(sample.gold_label) {
            continue;
        }
        let Some(annotation) = annotations.get(&point.sample_id) else {
            continue;
        };
        // Inputs come from validated ranges, so they are always finite.
        acc.push(measure.of(annotation), point.confidence)
            .expect("finite measure and confidence");
    }
    CorrelationPoint {
        epoch,
        stratum,
        class_filter,
        measure,
        rho: acc.finish(),
        n: acc.count() as usize,
    }
}

/// Every (measure, stratum, class filter) series over all snapshot epochs.
/// `snapshots[E - 1]` must hold the points for epoch `E`.
pub fn all_series(
    corpus: &Corpus,
    annotations: &AnnotationSet,
    snapshots: &[Vec<CartographyPoint>],
    measures: &[OverlapMeasure],
) -> Vec<CorrelationSeries> {
    let mut out = Vec::with_capacity(measures.len() * 9);
    for &measure in measures {
        for stratum in Stratum::ALL {
            for class_filter in ClassFilter::ALL {
                let points = snapshots
                    .iter()
                    .enumerate()
                    .map(|(e, snap)| {
                        correlation_at_epoch(
                            corpus,
                            annotations,
                            e as u32 + 1,
                            snap,
                            stratum,
                            class_filter,
                            measure,
                        )
                    })
                    .collect();
                out.push(CorrelationSeries {
                    stratum,
                    class_filter,
                    measure,
                    points,
                });
            }
        }
    }
    out
}

pub const CORRELATION_COLUMNS: [&str; 6] =
    ["epoch", "stratum", "class_filter", "measure", "rho", "n"];

/// Long-form CSV; an undefined rho is an empty cell.
pub fn write_correlations_csv(out: impl Write, series: &[CorrelationSeries]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CORRELATION_COLUMNS)?;
    for p in series.iter().flat_map(|s| &s.points) {
        w.write_record([
            p.epoch.to_string().as_str(),
            p.stratum.as_str(),
            p.class_filter.as_str(),
            p.measure.as_str(),
            &p.rho.map(|r| format!("{r:.9}")).unwrap_or_default(),
            &p.n.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{all_snapshots, RegionConfig};
    use crate::heuristics::HeuristicAnnotation;
    use crate::heuristics::HeuristicTag;
    use crate::ingest::{PredictionRecord, Sample};
    use proptest::prelude::*;

    /// Textbook two-pass Pearson in plain doubles.
    fn naive(xs: &[f64], ys: &[f64]) -> Option<f64> {
        let n = xs.len();
        if n < 2 || xs.iter().all(|&x| x == xs[0]) || ys.iter().all(|&y| y == ys[0]) {
            return None;
        }
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(ys) {
            sxy += (x - mx) * (y - my);
            sxx += (x - mx) * (x - mx);
            syy += (y - my) * (y - my);
        }
        Some(sxy / (sxx * syy).sqrt())
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&[1., 2., 3.], &[2., 4., 6.]).unwrap(), Some(1.0));
        assert_eq!(pearson(&[1., 2., 3.], &[6., 4., 2.]).unwrap(), Some(-1.0));
        let r = pearson(&[1., 2., 3., 4.], &[1., 3., 2., 5.])
            .unwrap()
            .unwrap();
        let oracle = naive(&[1., 2., 3., 4.], &[1., 3., 2., 5.]).unwrap();
        // 5.5 / sqrt(5 * 8.75)
        assert!((oracle - 0.831_521_840_620_299_9).abs() < 1e-12);
        assert!((r - 0.831_521_8).abs() < 1e-7);
        assert!((r - oracle).abs() < 1e-12);
        assert_eq!(pearson(&[1., 1., 1.], &[2., 5., 9.]).unwrap(), None);
        assert_eq!(pearson(&[1.], &[2.]).unwrap(), None);
        assert_eq!(pearson(&[], &[]).unwrap(), None);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(
            pearson(&[1., 2.], &[1.]),
            Err(CorrelationError::LengthMismatch { xs: 2, ys: 1 })
        );
        assert!(matches!(
            pearson(&[1., f64::NAN], &[1., 2.]),
            Err(CorrelationError::NonFinite(_))
        ));
    }

    #[test]
    fn affine_data_gives_exact_unit_correlation() {
        let xs: Vec<f64> = (0..2000).map(|i| (i % 5) as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.6 * x + 0.15).collect();
        assert_eq!(pearson(&xs, &ys).unwrap(), Some(1.0));
        let ys: Vec<f64> = xs.iter().map(|x| 0.9 - 0.7 * x).collect();
        assert_eq!(pearson(&xs, &ys).unwrap(), Some(-1.0));
    }

    fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (0usize..60).prop_flat_map(|n| {
            (
                prop::collection::vec(-1e3f64..1e3, n),
                prop::collection::vec(-1e3f64..1e3, n),
            )
        })
    }

    proptest! {
        #[test]
        fn matches_naive((xs, ys) in pairs()) {
            let fast = pearson(&xs, &ys).unwrap();
            let slow = naive(&xs, &ys);
            match (fast, slow) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}"),
                (None, None) => {}
                other => prop_assert!(false, "definedness differs: {other:?}"),
            }
            if let Some(r) = fast {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }

        #[test]
        fn symmetric((xs, ys) in pairs()) {
            prop_assert_eq!(pearson(&xs, &ys).unwrap(), pearson(&ys, &xs).unwrap());
        }

        #[test]
        fn affine_invariant((xs, ys) in pairs(), a in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0], b in -10.0f64..10.0) {
            let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let base = pearson(&xs, &ys).unwrap();
            let moved = pearson(&scaled, &ys).unwrap();
            if let (Some(r0), Some(r1)) = (base, moved) {
                prop_assert!((r1 - a.signum() * r0).abs() <= 1e-9);
            }
        }
    }

    fn fixture() -> (Corpus, AnnotationSet) {
        let mut samples = Vec::new();
        let mut records = Vec::new();
        let mut annotations = Vec::new();
        let m2s = [0.0, 0.25, 0.5, 0.75, 1.0];
        for i in 0..30 {
            let (split, distribution) = match i % 3 {
                0 => (Split::Train, Distribution::InDistribution),
                1 => (Split::Eval, Distribution::InDistribution),
                _ => (Split::Eval, Distribution::Ood),
            };
            let label = if i % 2 == 0 {
                GoldLabel::Entailment
            } else {
                GoldLabel::NonEntailment
            };
            let id = format!("s{i}");
            let m2 = m2s[i % 5];
            samples.push(Sample {
                id: id.clone(),
                premise: "p".into(),
                hypothesis: "h".into(),
                gold_label: label,
                split,
                distribution,
            });
            for epoch in 1..=2 {
                records.push(PredictionRecord {
                    sample_id: id.clone(),
                    epoch,
                    p_true: 0.5 * m2 + 0.1,
                });
            }
            annotations.push(HeuristicAnnotation {
                sample_id: id,
                m1: 0.5,
                m2,
                tag: HeuristicTag::NoHeuristic,
            });
        }
        (
            Corpus::from_records(samples, records).unwrap(),
            AnnotationSet::new(annotations, vec![]),
        )
    }

    #[test]
    fn stratified_series() {
        let (corpus, ann) = fixture();
        let snaps = all_snapshots(&corpus, &RegionConfig::default(), &ann).unwrap();
        let series = all_series(&corpus, &ann, &snaps, &[OverlapMeasure::M2]);
        assert_eq!(series.len(), 9);
        for s in &series {
            assert_eq!(s.points.len(), 2);
            for p in &s.points {
                assert_eq!(p.rho, Some(1.0), "{:?}", p);
            }
        }
        // partition of counts within each stratum
        for stratum in Stratum::ALL {
            let n = |c: ClassFilter| {
                series
                    .iter()
                    .find(|s| s.stratum == stratum && s.class_filter == c)
                    .unwrap()
                    .points[0]
                    .n
            };
            assert_eq!(n(ClassFilter::All), 10);
            assert_eq!(
                n(ClassFilter::All),
                n(ClassFilter::Entailment) + n(ClassFilter::NonEntailment)
            );
        }
        // m1 is constant in this fixture
        let m1 = all_series(
            &corpus,
            &ann,
            &snaps,
            &[OverlapMeasure::M1, OverlapMeasure::M2],
        );
        assert_eq!(m1.len(), 18);
        assert!(m1[0].points.iter().all(|p| p.rho.is_none()));
    }

    #[test]
    fn empty_stratum_is_undefined() {
        let (corpus, ann) = fixture();
        let p = correlation_at_epoch(
            &corpus,
            &ann,
            1,
            &[],
            Stratum::EvalOod,
            ClassFilter::All,
            OverlapMeasure::M2,
        );
        assert_eq!((p.rho, p.n), (None, 0));
    }

    #[test]
    fn correlation_csv_format() {
        let series = vec![CorrelationSeries {
            stratum: Stratum::EvalOod,
            class_filter: ClassFilter::Entailment,
            measure: OverlapMeasure::M2,
            points: vec![
                CorrelationPoint {
                    epoch: 1,
                    stratum: Stratum::EvalOod,
                    class_filter: ClassFilter::Entailment,
                    measure: OverlapMeasure::M2,
                    rho: None,
                    n: 1,
                },
                CorrelationPoint {
                    epoch: 2,
                    stratum: Stratum::EvalOod,
                    class_filter: ClassFilter::Entailment,
                    measure: OverlapMeasure::M2,
                    rho: Some(-0.5),
                    n: 4,
                },
            ],
        }];
        let mut buf = Vec::new();
        write_correlations_csv(&mut buf, &series).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,stratum,class_filter,measure,rho,n\n\
             1,eval_ood,entailment,m2,,1\n\
             2,eval_ood,entailment,m2,-0.500000000,4\n"
        );
    }
}
