//! Expected outputs computed straight from the construction, using plain
//! two-pass formulas instead of the pipeline's incremental ones.

use super::{PlantedSample, SynthError, SynthSpec, HYPOTHESIS_WORDS};
use crate::correlation::{ClassFilter, Stratum};
use crate::dynamics::Region;
use crate::heuristics::{HeuristicTag, OverlapMeasure};
use crate::ingest::GoldLabel;
use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleEntry {
    Tag {
        sample_id: String,
        m1: f64,
        m2: f64,
        tag: HeuristicTag,
    },
    Trajectory {
        sample_id: String,
        epoch: u32,
        confidence: f64,
        variability: f64,
        region: Region,
    },
    Correlation {
        epoch: u32,
        stratum: Stratum,
        class_filter: ClassFilter,
        measure: OverlapMeasure,
        rho: Option<f64>,
        n: usize,
    },
}

fn two_pass(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn planted_tag(p: &PlantedSample) -> HeuristicTag {
    match (p.shared == HYPOTHESIS_WORDS, p.sample.gold_label) {
        (false, _) => HeuristicTag::NoHeuristic,
        (true, GoldLabel::Entailment) => HeuristicTag::Support,
        (true, GoldLabel::NonEntailment) => HeuristicTag::Contradict,
    }
}

/// Scales exact binary fractions to a shared power-of-two denominator.
fn common_integers(values: &[f64]) -> Vec<BigInt> {
    let exact: Vec<BigRational> = values
        .iter()
        .map(|&v| BigRational::from_float(v).expect("finite value"))
        .collect();
    let Some(den) = exact.iter().map(|r| r.denom().clone()).max() else {
        return Vec::new();
    };
    exact
        .iter()
        .map(|r| r.numer() * (&den / r.denom()))
        .collect()
}

/// Pearson correlation by the textbook two-pass formula in exact integer
/// arithmetic. `None` when fewer than two points or either side is constant.
pub fn exact_two_pass_pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    if xs.len() < 2 {
        return None;
    }
    let n = BigInt::from(xs.len());
    let deviations = |v: &[f64]| -> Vec<BigInt> {
        let ints = common_integers(v);
        let total: BigInt = ints.iter().sum();
        ints.iter().map(|x| &n * x - &total).collect()
    };
    let dx = deviations(xs);
    let dy = deviations(ys);
    let sxx: BigInt = dx.iter().map(|d| d * d).sum();
    let syy: BigInt = dy.iter().map(|d| d * d).sum();
    let sxy: BigInt = dx.iter().zip(&dy).map(|(a, b)| a * b).sum();
    if sxx.is_zero() || syy.is_zero() {
        return None;
    }
    let r2 = BigRational::new(&sxy * &sxy, sxx * syy).to_f64()?;
    let r = r2.sqrt().min(1.0);
    Some(match sxy.sign() {
        Sign::Minus => -r,
        Sign::Plus => r,
        Sign::NoSign => 0.0,
    })
}

/// Oracle entries: tags, then per-epoch trajectory statistics, then
/// correlations for every measure, stratum, class filter and epoch.
pub fn build_oracle(spec: &SynthSpec, planted: &[PlantedSample]) -> Vec<OracleEntry> {
    let mut out = Vec::new();
    for p in planted {
        out.push(OracleEntry::Tag {
            sample_id: p.sample.id.clone(),
            m1: p.m1(),
            m2: p.m2(),
            tag: planted_tag(p),
        });
    }

    // Without samples there are no predictions, hence no epochs.
    let epochs = if planted.is_empty() {
        0
    } else {
        spec.epochs as usize
    };
    let mut confidences = vec![vec![0.0; planted.len()]; epochs];
    for e in 1..=epochs {
        for (i, p) in planted.iter().enumerate() {
            let (confidence, variability) = two_pass(&p.trajectory[..e]);
            confidences[e - 1][i] = confidence;
            let region = if variability >= spec.regions.tau_v {
                Region::Ambiguous
            } else if confidence >= spec.regions.tau_mu {
                Region::EasyToLearn
            } else {
                Region::HardToLearn
            };
            out.push(OracleEntry::Trajectory {
                sample_id: p.sample.id.clone(),
                epoch: e as u32,
                confidence,
                variability,
                region,
            });
        }
    }

    for measure in [OverlapMeasure::M1, OverlapMeasure::M2] {
        for stratum in Stratum::ALL {
            for class_filter in ClassFilter::ALL {
                let members: Vec<usize> = planted
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| {
                        Stratum::of(p.sample.split, p.sample.distribution) == stratum
                            && class_filter.admits(p.sample.gold_label)
                    })
                    .map(|(i, _)| i)
                    .collect();
                let xs: Vec<f64> = members
                    .iter()
                    .map(|&i| match measure {
                        OverlapMeasure::M1 => planted[i].m1(),
                        OverlapMeasure::M2 => planted[i].m2(),
                    })
                    .collect();
                for e in 1..=epochs {
                    let ys: Vec<f64> = members.iter().map(|&i| confidences[e - 1][i]).collect();
                    out.push(OracleEntry::Correlation {
                        epoch: e as u32,
                        stratum,
                        class_filter,
                        measure,
                        rho: exact_two_pass_pearson(&xs, &ys),
                        n: members.len(),
                    });
                }
            }
        }
    }
    out
}

pub fn write_oracle(mut out: impl Write, entries: &[OracleEntry]) -> std::io::Result<()> {
    for entry in entries {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_oracle(input: impl BufRead) -> Result<Vec<OracleEntry>, SynthError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| SynthError::Schema(format!("oracle line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line)
            .map_err(|e| SynthError::Schema(format!("oracle line {}: {e}", i + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_pearson_basics() {
        let r = exact_two_pass_pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 5.0]).unwrap();
        assert!((r - 0.831_521_840_620_299_9).abs() < 1e-15);
        assert_eq!(
            exact_two_pass_pearson(&[0.1, 0.2, 0.3], &[0.7, 0.5, 0.3]),
            Some(-1.0)
        );
        assert_eq!(exact_two_pass_pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(exact_two_pass_pearson(&[1.0], &[1.0]), None);
        assert_eq!(
            exact_two_pass_pearson(&[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0]),
            Some(0.0)
        );
    }

    #[test]
    fn oracle_round_trips_through_jsonl() {
        let entries = vec![
            OracleEntry::Tag {
                sample_id: "a".into(),
                m1: 0.5,
                m2: 1.0,
                tag: HeuristicTag::NoHeuristic,
            },
            OracleEntry::Correlation {
                epoch: 1,
                stratum: Stratum::EvalOod,
                class_filter: ClassFilter::All,
                measure: OverlapMeasure::M2,
                rho: None,
                n: 1,
            },
        ];
        let mut buf = Vec::new();
        write_oracle(&mut buf, &entries).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.starts_with(r#"{"kind":"tag","sample_id":"a","m1":0.5,"m2":1.0,"tag":"none"}"#)
        );
        assert_eq!(read_oracle(&buf[..]).unwrap(), entries);
    }

    #[test]
    fn two_pass_of_constant_is_exact() {
        assert_eq!(two_pass(&[0.25; 7]), (0.25, 0.0));
    }
}
