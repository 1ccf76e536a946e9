#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn cartography(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartography"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Generates a synthetic corpus into `dir` and returns (dataset, predictions, oracle).
pub fn synth_into(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf, PathBuf) {
    let mut args = vec!["synth", "--out", s(dir)];
    args.extend_from_slice(extra);
    let out = cartography(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    (
        dir.join("dataset.jsonl"),
        dir.join("predictions.jsonl"),
        dir.join("oracle.jsonl"),
    )
}

/// Every file under `root`, keyed by '/'-separated relative path.
pub fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap();
                let key = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                out.insert(key, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub mod map_fixture {
    use nli_cartography::dynamics::{classify_region, CartographyPoint, RegionConfig};
    use nli_cartography::heuristics::HeuristicTag;
    use nli_cartography::ingest::{Distribution, Split};
    use nli_cartography::render::{map_svg, map_value, MapStyle, BLUE, GRAY, GREEN};
    use std::path::PathBuf;

    pub fn points() -> Vec<CartographyPoint> {
        let rows = [
            (
                "e-support-in",
                0.82,
                0.04,
                Distribution::InDistribution,
                HeuristicTag::Support,
            ),
            (
                "e-support-ood",
                0.90,
                0.05,
                Distribution::Ood,
                HeuristicTag::Support,
            ),
            (
                "e-contra-in",
                0.35,
                0.12,
                Distribution::InDistribution,
                HeuristicTag::Contradict,
            ),
            (
                "e-contra-ood",
                0.20,
                0.08,
                Distribution::Ood,
                HeuristicTag::Contradict,
            ),
            (
                "e-none-in",
                0.55,
                0.30,
                Distribution::InDistribution,
                HeuristicTag::NoHeuristic,
            ),
            (
                "e-none-ood",
                0.48,
                0.41,
                Distribution::Ood,
                HeuristicTag::NoHeuristic,
            ),
        ];
        let config = RegionConfig::default();
        rows.into_iter()
            .map(
                |(id, confidence, variability, distribution, tag)| CartographyPoint {
                    sample_id: id.to_string(),
                    split: Split::Eval,
                    distribution,
                    epoch: 2,
                    confidence,
                    variability,
                    region: classify_region(confidence, variability, &config),
                    heuristic_tag: Some(tag),
                },
            )
            .collect()
    }

    pub fn golden_path() -> PathBuf {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/map_eval_e2.svg")
    }

    pub fn render() -> String {
        let style = MapStyle {
            guides: Some(RegionConfig::default()),
            ..MapStyle::default()
        };
        map_svg(&points(), &style).unwrap()
    }

    /// Checks colors, markers and placement of the fixture glyphs in `svg`.
    pub fn check_conventions(svg: &str) -> Result<(), String> {
        let glyphs: Vec<&str> = svg
            .lines()
            .filter(|l| l.contains("class=\"glyph\""))
            .collect();
        if glyphs.len() != 6 {
            return Err(format!("expected 6 data glyphs, found {}", glyphs.len()));
        }
        for (id, color, shape) in [
            ("e-support-in", GREEN, "<circle"),
            ("e-support-ood", GREEN, "<path"),
            ("e-contra-in", BLUE, "<circle"),
            ("e-contra-ood", BLUE, "<path"),
            ("e-none-in", GRAY, "<circle"),
            ("e-none-ood", GRAY, "<path"),
        ] {
            let glyph = glyphs
                .iter()
                .find(|g| g.contains(&format!("<title>{id}</title>")))
                .ok_or(format!("{id} not drawn"))?;
            if !glyph.trim_start().starts_with(shape) || !glyph.contains(color) {
                return Err(format!("{id} should be a {shape} in {color}: {glyph}"));
            }
        }
        // The OOD support point must land upper-left: high confidence, low variability.
        let glyph = glyphs.iter().find(|g| g.contains("e-support-ood")).unwrap();
        let inner = glyph
            .split("translate(")
            .nth(1)
            .ok_or("cross without translate")?;
        let mut coords = inner.split(')').next().unwrap().split_whitespace();
        let x: f64 = coords.next().unwrap().parse().map_err(|_| "bad x")?;
        let y: f64 = coords.next().unwrap().parse().map_err(|_| "bad y")?;
        let (variability, confidence) = map_value(x, y);
        if (variability - 0.05).abs() > 0.5 / 400.0 || (confidence - 0.90).abs() > 1.0 / 400.0 {
            return Err(format!(
                "e-support-ood maps back to ({variability}, {confidence})"
            ));
        }
        Ok(())
    }
}
