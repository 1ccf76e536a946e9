//! SVG output: cartography maps and correlation trend charts.
//!
//! Maps plot variability on x over the fixed range [0, 0.5] and confidence on
//! y over [0, 1], so maps from different epochs line up. Glyph color encodes
//! the heuristic tag and glyph shape encodes the distribution:
//!
//! | tag        | color |   | distribution    | marker |
//! |------------|-------|---|-----------------|--------|
//! | support    | green |   | in_distribution | circle |
//! | contradict | blue  |   | ood             | cross  |
//! | none       | gray  |   |                 |        |
//!
//! Output is a pure function of the inputs and the sampling seed.

use crate::correlation::{ClassFilter, CorrelationSeries, Stratum};
use crate::dynamics::{CartographyPoint, RegionConfig};
use crate::heuristics::{HeuristicTag, OverlapMeasure};
use crate::ingest::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("nothing to plot: no cartography points")]
    NoPoints,
    #[error("nothing to plot: every correlation value is undefined")]
    AllUndefined,
    #[error("sample fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub const GREEN: &str = "#2ca02c";
pub const BLUE: &str = "#1f77b4";
pub const GRAY: &str = "#7f7f7f";
pub const ORANGE: &str = "#ff7f0e";

pub fn tag_color(tag: Option<HeuristicTag>) -> &'static str {
    match tag {
        Some(HeuristicTag::Support) => GREEN,
        Some(HeuristicTag::Contradict) => BLUE,
        Some(HeuristicTag::NoHeuristic) | None => GRAY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    Circle,
    Cross,
}

pub fn marker_for(distribution: Distribution) -> Marker {
    match distribution {
        Distribution::InDistribution => Marker::Circle,
        Distribution::Ood => Marker::Cross,
    }
}

/// Map drawing options. Colors and markers are fixed; see the module docs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapStyle {
    /// Fraction of points drawn, in (0, 1].
    pub sample_fraction: f64,
    /// Seed for the uniform subsample.
    pub seed: u64,
    /// Region thresholds to draw as guide lines, if any.
    #[serde(default)]
    pub guides: Option<RegionConfig>,
}

impl Default for MapStyle {
    fn default() -> Self {
        MapStyle {
            sample_fraction: 1.0,
            seed: 0,
            guides: None,
        }
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 50.0;
const PLOT_W: f64 = 400.0;
const PLOT_H: f64 = 400.0;
const GLYPH_R: f64 = 3.0;

pub const VARIABILITY_MAX: f64 = 0.5;

/// Pixel position of a (variability, confidence) pair on a map.
pub fn map_position(variability: f64, confidence: f64) -> (f64, f64) {
    (
        LEFT + variability / VARIABILITY_MAX * PLOT_W,
        TOP + (1.0 - confidence) * PLOT_H,
    )
}

/// Inverse of [`map_position`].
pub fn map_value(x: f64, y: f64) -> (f64, f64) {
    (
        (x - LEFT) / PLOT_W * VARIABILITY_MAX,
        1.0 - (y - TOP) / PLOT_H,
    )
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn svg_open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <title>{t}</title>\n\
         <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n\
         <text x=\"{cx}\" y=\"28\" text-anchor=\"middle\" font-size=\"15\">{t}</text>\n",
        t = escape(title),
        cx = LEFT + PLOT_W / 2.0,
    );
}

fn frame(out: &mut String) {
    let _ = writeln!(
        out,
        "<rect class=\"frame\" x=\"{LEFT}\" y=\"{TOP}\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"none\" stroke=\"#000000\"/>"
    );
}

fn x_tick(out: &mut String, x: f64, label: &str) {
    let bottom = TOP + PLOT_H;
    let _ = writeln!(
        out,
        "<line x1=\"{x:.2}\" y1=\"{bottom}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#000000\"/><text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>",
        bottom + 5.0,
        bottom + 19.0
    );
}

fn y_tick(out: &mut String, y: f64, label: &str) {
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{LEFT}\" y2=\"{y:.2}\" stroke=\"#000000\"/><text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>",
        LEFT - 5.0,
        LEFT - 8.0,
        y + 4.0
    );
}

fn axis_labels(out: &mut String, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">{y_label}</text>",
        LEFT + PLOT_W / 2.0,
        TOP + PLOT_H + 40.0,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0,
    );
}

fn glyph(out: &mut String, marker: Marker, x: f64, y: f64, color: &str, title: &str) {
    match marker {
        Marker::Circle => {
            let _ = writeln!(
                out,
                "<circle class=\"glyph\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{GLYPH_R}\" fill=\"{color}\" fill-opacity=\"0.7\"><title>{title}</title></circle>"
            );
        }
        Marker::Cross => {
            let _ = writeln!(
                out,
                "<path class=\"glyph\" transform=\"translate({x:.2} {y:.2})\" d=\"M-{GLYPH_R} -{GLYPH_R}L{GLYPH_R} {GLYPH_R}M-{GLYPH_R} {GLYPH_R}L{GLYPH_R} -{GLYPH_R}\" stroke=\"{color}\" stroke-width=\"1.5\" fill=\"none\"><title>{title}</title></path>"
            );
        }
    }
}

fn legend_glyph(out: &mut String, marker: Marker, x: f64, y: f64, color: &str) {
    match marker {
        Marker::Circle => {
            let _ = writeln!(
                out,
                "<circle class=\"legend-glyph\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{GLYPH_R}\" fill=\"{color}\"/>"
            );
        }
        Marker::Cross => {
            let _ = writeln!(
                out,
                "<path class=\"legend-glyph\" transform=\"translate({x:.2} {y:.2})\" d=\"M-{GLYPH_R} -{GLYPH_R}L{GLYPH_R} {GLYPH_R}M-{GLYPH_R} {GLYPH_R}L{GLYPH_R} -{GLYPH_R}\" stroke=\"{color}\" stroke-width=\"1.5\" fill=\"none\"/>"
            );
        }
    }
}

fn legend_text(out: &mut String, x: f64, y: f64, text: &str) {
    let _ = writeln!(
        out,
        "<text class=\"legend\" x=\"{:.2}\" y=\"{:.2}\">{}</text>",
        x + 12.0,
        y + 4.0,
        escape(text)
    );
}

fn map_legend(out: &mut String) {
    let x = LEFT + PLOT_W + 25.0;
    let mut y = TOP + 10.0;
    let _ = writeln!(out, "<g class=\"legend\">");
    legend_text(out, x - 12.0, y, "heuristic");
    for tag in HeuristicTag::ALL {
        y += 18.0;
        legend_glyph(out, Marker::Circle, x, y, tag_color(Some(tag)));
        legend_text(out, x, y, tag.as_str());
    }
    y += 30.0;
    legend_text(out, x - 12.0, y, "distribution");
    for (marker, label) in [(Marker::Circle, "in_distribution"), (Marker::Cross, "ood")] {
        y += 18.0;
        legend_glyph(out, marker, x, y, "#000000");
        legend_text(out, x, y, label);
    }
    let _ = writeln!(out, "</g>");
}

fn region_guides(out: &mut String, regions: &RegionConfig) {
    let (vx, _) = map_position(regions.tau_v, 0.0);
    let (_, my) = map_position(0.0, regions.tau_mu);
    let _ = writeln!(
        out,
        "<g class=\"guides\" stroke=\"#999999\" stroke-dasharray=\"4 3\">\n\
         <line x1=\"{vx:.2}\" y1=\"{TOP}\" x2=\"{vx:.2}\" y2=\"{:.2}\"/>\n\
         <line x1=\"{LEFT}\" y1=\"{my:.2}\" x2=\"{vx:.2}\" y2=\"{my:.2}\"/>\n\
         </g>",
        TOP + PLOT_H,
    );
    let _ = writeln!(
        out,
        "<g class=\"region-labels\" fill=\"#666666\" font-size=\"11\">\n\
         <text x=\"{:.2}\" y=\"{:.2}\">easy-to-learn</text>\n\
         <text x=\"{:.2}\" y=\"{:.2}\">hard-to-learn</text>\n\
         <text x=\"{:.2}\" y=\"{:.2}\">ambiguous</text>\n\
         </g>",
        LEFT + 6.0,
        TOP + 16.0,
        LEFT + 6.0,
        TOP + PLOT_H - 8.0,
        vx + 6.0,
        TOP + 16.0,
    );
}

/// Indices of the points to draw: a seeded uniform subsample of size
/// `round(fraction * n)`, kept in input order.
pub fn subsample_indices(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>, RenderError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(RenderError::InvalidFraction(fraction));
    }
    let k = ((fraction * n as f64).round() as usize).min(n);
    if k == n {
        return Ok((0..n).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

fn map_title(points: &[CartographyPoint]) -> String {
    let first = &points[0];
    let uniform_split = points.iter().all(|p| p.split == first.split);
    let uniform_epoch = points.iter().all(|p| p.epoch == first.epoch);
    let who = if uniform_split {
        format!("{} cartography map", first.split)
    } else {
        "cartography map".to_string()
    };
    if uniform_epoch {
        format!("{who}, epoch {}", first.epoch)
    } else {
        who
    }
}

/// SVG text of a cartography map.
pub fn map_svg(points: &[CartographyPoint], style: &MapStyle) -> Result<String, RenderError> {
    if points.is_empty() {
        return Err(RenderError::NoPoints);
    }
    let chosen = subsample_indices(points.len(), style.sample_fraction, style.seed)?;

    let mut out = String::new();
    svg_open(&mut out, &map_title(points));
    frame(&mut out);
    for i in 0..=5 {
        let v = f64::from(i) * 0.1;
        x_tick(&mut out, map_position(v, 0.0).0, &format!("{v:.1}"));
    }
    for i in 0..=5 {
        let c = f64::from(i) * 0.2;
        y_tick(&mut out, map_position(0.0, c).1, &format!("{c:.1}"));
    }
    axis_labels(&mut out, "variability", "confidence");
    if let Some(regions) = &style.guides {
        region_guides(&mut out, regions);
    }
    let _ = writeln!(out, "<g class=\"points\">");
    for &i in &chosen {
        let p = &points[i];
        let (x, y) = map_position(p.variability, p.confidence);
        glyph(
            &mut out,
            marker_for(p.distribution),
            x,
            y,
            tag_color(p.heuristic_tag),
            &escape(&p.sample_id),
        );
    }
    let _ = writeln!(out, "</g>");
    map_legend(&mut out);
    out.push_str("</svg>\n");
    Ok(out)
}

fn write_file(out: &Path, contents: &str) -> Result<(), RenderError> {
    std::fs::write(out, contents).map_err(|source| RenderError::Io {
        path: out.to_path_buf(),
        source,
    })
}

pub fn render_map(
    points: &[CartographyPoint],
    style: &MapStyle,
    out: &Path,
) -> Result<(), RenderError> {
    write_file(out, &map_svg(points, style)?)
}

pub fn stratum_color(stratum: Stratum) -> &'static str {
    match stratum {
        Stratum::Train => ORANGE,
        Stratum::EvalInDistribution => BLUE,
        Stratum::EvalOod => GREEN,
    }
}

fn class_dash(class_filter: ClassFilter) -> &'static str {
    match class_filter {
        ClassFilter::All => "",
        ClassFilter::Entailment => " stroke-dasharray=\"6 3\"",
        ClassFilter::NonEntailment => " stroke-dasharray=\"2 3\"",
    }
}

fn trend_title(series: &[CorrelationSeries]) -> String {
    let first = &series[0];
    let measure = if series.iter().all(|s| s.measure == first.measure) {
        first.measure.as_str()
    } else {
        "overlap"
    };
    let mut title = format!("correlation of {measure} with confidence");
    if series.iter().all(|s| s.class_filter == first.class_filter) {
        let _ = write!(title, " ({} samples)", first.class_filter);
    }
    title
}

/// Maximal runs of consecutive defined points, as (epoch, rho) pairs.
fn defined_runs(series: &CorrelationSeries) -> Vec<Vec<(u32, f64)>> {
    let mut runs = Vec::new();
    let mut current = Vec::new();
    for p in &series.points {
        match p.rho {
            Some(r) => current.push((p.epoch, r)),
            None if !current.is_empty() => runs.push(std::mem::take(&mut current)),
            None => {}
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs
}

/// SVG text of a trend chart: one line per series, broken at undefined epochs.
pub fn trends_svg(series: &[CorrelationSeries]) -> Result<String, RenderError> {
    let any_defined = series
        .iter()
        .flat_map(|s| &s.points)
        .any(|p| p.rho.is_some());
    if !any_defined {
        return Err(RenderError::AllUndefined);
    }
    let max_epoch = series
        .iter()
        .flat_map(|s| &s.points)
        .map(|p| p.epoch)
        .max()
        .unwrap_or(1);
    let x_of = |epoch: u32| {
        if max_epoch <= 1 {
            LEFT + PLOT_W / 2.0
        } else {
            LEFT + f64::from(epoch - 1) / f64::from(max_epoch - 1) * PLOT_W
        }
    };
    let y_of = |rho: f64| TOP + (1.0 - rho) / 2.0 * PLOT_H;

    let mut out = String::new();
    svg_open(&mut out, &trend_title(series));
    frame(&mut out);
    let step = max_epoch.div_ceil(10).max(1);
    for epoch in (1..=max_epoch).step_by(step as usize) {
        x_tick(&mut out, x_of(epoch), &epoch.to_string());
    }
    for i in 0..=4 {
        let rho = -1.0 + f64::from(i) * 0.5;
        y_tick(&mut out, y_of(rho), &format!("{rho:.1}"));
    }
    let _ = writeln!(
        out,
        "<line class=\"zero\" x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#cccccc\"/>",
        LEFT + PLOT_W,
        y = y_of(0.0)
    );
    axis_labels(&mut out, "epoch", "correlation");

    let mixed_class = series
        .iter()
        .any(|s| s.class_filter != series[0].class_filter);
    let mixed_measure = series.iter().any(|s| s.measure != series[0].measure);
    let label_of = |s: &CorrelationSeries| {
        let mut label = s.stratum.as_str().to_string();
        let mut extra: Vec<&str> = Vec::new();
        if mixed_class {
            extra.push(s.class_filter.as_str());
        }
        if mixed_measure {
            extra.push(s.measure.as_str());
        }
        if !extra.is_empty() {
            let _ = write!(label, " ({})", extra.join(", "));
        }
        label
    };

    for s in series {
        let color = stratum_color(s.stratum);
        let dash = class_dash(s.class_filter);
        let _ = writeln!(
            out,
            "<g class=\"series\" data-stratum=\"{}\" data-class=\"{}\" data-measure=\"{}\">",
            s.stratum, s.class_filter, s.measure
        );
        for run in defined_runs(s) {
            if let [(epoch, rho)] = run[..] {
                let _ = writeln!(
                    out,
                    "<circle class=\"trend-dot\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                    x_of(epoch),
                    y_of(rho)
                );
            } else {
                let coords: Vec<String> = run
                    .iter()
                    .map(|&(e, r)| format!("{:.2},{:.2}", x_of(e), y_of(r)))
                    .collect();
                let _ = writeln!(
                    out,
                    "<polyline class=\"trend\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
                    coords.join(" ")
                );
            }
        }
        let _ = writeln!(out, "</g>");
    }

    let x = LEFT + PLOT_W + 25.0;
    let mut y = TOP + 10.0;
    let _ = writeln!(out, "<g class=\"legend\">");
    for s in series {
        let _ = writeln!(
            out,
            "<line class=\"legend-line\" x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{}\" stroke-width=\"2\"{}/>",
            x - 8.0,
            x + 8.0,
            stratum_color(s.stratum),
            class_dash(s.class_filter)
        );
        legend_text(&mut out, x + 4.0, y, &label_of(s));
        y += 18.0;
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_trends(series: &[CorrelationSeries], out: &Path) -> Result<(), RenderError> {
    write_file(out, &trends_svg(series)?)
}

/// File name used for a trend chart of one (measure, class filter) pair.
pub fn trend_file_name(measure: OverlapMeasure, class_filter: ClassFilter) -> String {
    format!("trend_{measure}_{class_filter}.svg")
}
